#include "chesslm/engine.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <sstream>

namespace chesslm::engine {

ProcessTransport::ProcessTransport(const std::vector<std::string>& argv) {
    if (argv.empty()) {
        throw EngineError("empty engine command");
    }
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
        throw EngineError("pipe() failed");
    }
    const int pid = fork();
    if (pid < 0) {
        throw EngineError("fork() failed");
    }
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        std::vector<char*> cargv;
        for (const auto& a : argv) {
            cargv.push_back(const_cast<char*>(a.c_str()));
        }
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }
    pid_ = pid;
    to_child_ = to_child[1];
    from_child_ = from_child[0];
    close(to_child[0]);
    close(from_child[1]);
}

ProcessTransport::~ProcessTransport() {
    if (to_child_ >= 0) {
        close(to_child_);
    }
    if (from_child_ >= 0) {
        close(from_child_);
    }
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }
}

void ProcessTransport::write_line(const std::string& line) {
    const std::string framed = line + '\n';
    size_t off = 0;
    while (off < framed.size()) {
        const ssize_t n = ::write(to_child_, framed.data() + off, framed.size() - off);
        if (n <= 0) {
            throw EngineError("engine stdin closed");
        }
        off += static_cast<size_t>(n);
    }
}

std::optional<std::string> ProcessTransport::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const size_t nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            return line;
        }
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            return std::nullopt;
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const auto remain =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        const int rc = poll(&pfd, 1, static_cast<int>(remain.count()));
        if (rc <= 0) {
            return std::nullopt;
        }
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
        if (n <= 0) {
            return std::nullopt;  // engine exited
        }
        buffer_.append(chunk, static_cast<size_t>(n));
    }
}

ScriptedTransport::ScriptedTransport(std::vector<Exchange> script)
    : script_(std::move(script)) {}

void ScriptedTransport::write_line(const std::string& line) {
    if (exchange_ >= script_.size()) {
        throw EngineError("scripted engine got unexpected command: " + line);
    }
    if (exchange_ > 0 && reply_ < script_[exchange_ - 1].replies.size()) {
        throw EngineError("command sent before draining replies: " + line);
    }
    if (line != script_[exchange_].expect_write) {
        throw EngineError("scripted engine expected \"" + script_[exchange_].expect_write +
                          "\" but got \"" + line + "\"");
    }
    ++exchange_;
    reply_ = 0;
}

std::optional<std::string> ScriptedTransport::read_line(std::chrono::milliseconds) {
    if (exchange_ == 0) {
        return std::nullopt;
    }
    // Replies drain from the most recent command; silence simulates a
    // timeout for the caller.
    const auto& replies = script_[exchange_ - 1].replies;
    if (reply_ >= replies.size()) {
        return std::nullopt;
    }
    return replies[reply_++];
}

bool ScriptedTransport::exhausted() const {
    return exchange_ == script_.size() &&
           (script_.empty() || reply_ == script_.back().replies.size());
}

std::string UciLimits::go_command() const {
    if (depth) {
        return "go depth " + std::to_string(*depth);
    }
    return "go movetime " + std::to_string(movetime_ms.value_or(50));
}

EngineHandle::EngineHandle(std::unique_ptr<LineTransport> transport,
                           std::optional<int> skill_level, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
    send("uci");
    while (true) {
        const std::string line = receive();
        if (line == "uciok") {
            break;
        }
    }
    if (skill_level) {
        send("setoption name Skill Level value " + std::to_string(*skill_level));
    }
    send("isready");
    while (true) {
        const std::string line = receive();
        if (line == "readyok") {
            break;
        }
    }
    ready_ = true;
}

void EngineHandle::send(const std::string& line) {
    transcript_.push_back(">> " + line);
    transport_->write_line(line);
}

std::string EngineHandle::receive() {
    const auto line = transport_->read_line(timeout_);
    if (!line) {
        throw EngineError("engine reply timed out");
    }
    transcript_.push_back("<< " + *line);
    return *line;
}

void EngineHandle::expect_ready() {
    if (!ready_) {
        throw EngineError("engine command issued before handshake completed");
    }
}

void EngineHandle::new_game() {
    expect_ready();
    send("ucinewgame");
    send("isready");
    while (true) {
        if (receive() == "readyok") {
            break;
        }
    }
}

std::string EngineHandle::best_move(const std::string& fen, const UciLimits& limits) {
    expect_ready();
    const chess::BoardState board = chess::parse_fen(fen);
    send("position fen " + fen);
    send(limits.go_command());
    std::string reply;
    while (true) {
        const std::string line = receive();
        if (starts_with(line, "bestmove")) {
            const auto parts = split(line, ' ');
            if (parts.size() < 2) {
                throw EngineError("malformed bestmove line: " + line);
            }
            reply = parts[1];
            break;
        }
    }
    const auto record = chess::parse_uci_move(board, reply);
    if (!record) {
        throw EngineError("engine move \"" + reply + "\" is not legal in " + fen);
    }
    return record->san;
}

void EngineHandle::quit() {
    if (ready_) {
        send("quit");
        ready_ = false;
    }
}

std::unique_ptr<EngineHandle> handshake(const std::vector<std::string>& argv,
                                        std::optional<int> skill_level,
                                        std::chrono::milliseconds timeout) {
    return std::make_unique<EngineHandle>(std::make_unique<ProcessTransport>(argv),
                                          skill_level, timeout);
}

void validate_annotation(const AnnotatedPosition& record) {
    const auto board = chess::parse_fen(record.fen);
    const auto moves = chess::legal_moves(board);
    if (moves.size() != record.legal_moves.size()) {
        throw ParseError("annotation legal-move list does not match the position");
    }
    for (size_t i = 0; i < moves.size(); ++i) {
        if (moves[i].san != record.legal_moves[i]) {
            throw ParseError("annotation legal-move list does not match the position");
        }
    }
    if (std::find(record.legal_moves.begin(), record.legal_moves.end(), record.best_move) ==
        record.legal_moves.end()) {
        throw ParseError("annotation best move is not in the legal-move list");
    }
}

AnnotatedPosition annotate_position(const chess::BoardState& board, int level) {
    AnnotatedPosition record;
    record.fen = chess::serialize_fen(board);
    for (const auto& m : chess::legal_moves(board)) {
        record.legal_moves.push_back(m.san);
    }
    if (record.legal_moves.empty()) {
        throw ParseError("cannot annotate a terminal position");
    }
    record.best_move = HeuristicPolicy::choose(board, level, 0).san;
    return record;
}

std::vector<AnnotatedPosition> annotate_dataset(const std::vector<std::string>& fens,
                                                EngineHandle& engine, const UciLimits& limits,
                                                std::vector<std::string>* diagnostics) {
    std::vector<AnnotatedPosition> out;
    for (const auto& fen : fens) {
        try {
            const auto board = chess::parse_fen(fen);
            AnnotatedPosition record;
            record.fen = chess::serialize_fen(board);
            for (const auto& m : chess::legal_moves(board)) {
                record.legal_moves.push_back(m.san);
            }
            if (record.legal_moves.empty()) {
                throw ParseError("terminal position");
            }
            record.best_move = engine.best_move(record.fen, limits);
            out.push_back(std::move(record));
        } catch (const std::exception& e) {
            if (diagnostics) {
                diagnostics->push_back("skipped \"" + fen + "\": " + e.what());
            }
        }
    }
    return out;
}

std::vector<AnnotatedPosition> annotate_dataset_mock(const std::vector<std::string>& fens,
                                                     int level,
                                                     std::vector<std::string>* diagnostics) {
    std::vector<AnnotatedPosition> out;
    for (const auto& fen : fens) {
        try {
            out.push_back(annotate_position(chess::parse_fen(fen), level));
        } catch (const std::exception& e) {
            if (diagnostics) {
                diagnostics->push_back("skipped \"" + fen + "\": " + e.what());
            }
        }
    }
    return out;
}

EnginePolicy::EnginePolicy(EngineHandle& handle, UciLimits limits, std::string name)
    : handle_(handle), limits_(limits), name_(std::move(name)) {}

std::string EnginePolicy::propose_move(const chess::GameHistory& history) {
    return handle_.best_move(chess::serialize_fen(history.current()), limits_);
}

void EnginePolicy::start_game() {
    handle_.new_game();
}

namespace {

std::unique_ptr<MovePolicy> build_player(const PlayerSpec& spec, int game_index,
                                         uint64_t game_seed,
                                         std::vector<std::unique_ptr<EngineHandle>>& handles) {
    int level = spec.level;
    if (!spec.level_cycle.empty()) {
        level = spec.level_cycle[static_cast<size_t>(game_index) % spec.level_cycle.size()];
    }
    if (spec.kind == PlayerSpec::Kind::heuristic) {
        return std::make_unique<HeuristicPolicy>(level, game_seed);
    }
    handles.push_back(handshake(spec.engine_argv, level));
    return std::make_unique<EnginePolicy>(*handles.back(), spec.limits,
                                          "engine-l" + std::to_string(level));
}

}  // namespace

std::vector<chess::GameRecord> generate_games(
    const PlayerSpec& white, const PlayerSpec& black, int n,
    const std::vector<std::vector<std::string>>& opening_book, const GameGenConfig& cfg,
    std::vector<std::string>* diagnostics) {
    if (n < 1) {
        throw ParseError("game count must be at least 1");
    }
    std::vector<chess::GameRecord> games;
    Rng rng(cfg.seed);
    elo::ArenaRules rules;
    rules.max_plies = cfg.max_plies;
    const std::vector<std::string> empty_opening;
    for (int g = 0; g < n; ++g) {
        const auto& opening =
            opening_book.empty() ? empty_opening
                                 : opening_book[static_cast<size_t>(g) % opening_book.size()];
        try {
            std::vector<std::unique_ptr<EngineHandle>> handles;
            auto white_policy = build_player(white, g, rng.next_u64(), handles);
            auto black_policy = build_player(black, g, rng.next_u64(), handles);
            games.push_back(elo::play_game(*white_policy, *black_policy, opening, rules));
            for (auto& h : handles) {
                h->quit();
            }
        } catch (const std::exception& e) {
            if (diagnostics) {
                diagnostics->push_back("game " + std::to_string(g) + " discarded: " + e.what());
            }
        }
    }
    return games;
}

}  // namespace chesslm::engine
