#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chesslm/elo.hpp"
#include "chesslm/policy.hpp"

namespace chesslm::engine {

// Line-oriented text channel to an engine. read_line returns nullopt on
// timeout or channel close.
class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual void write_line(const std::string& line) = 0;
    virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

// Child process over stdin/stdout pipes.
class ProcessTransport : public LineTransport {
public:
    explicit ProcessTransport(const std::vector<std::string>& argv);
    ~ProcessTransport() override;

    void write_line(const std::string& line) override;
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// Scripted channel for tests: expected writes paired with canned replies.
class ScriptedTransport : public LineTransport {
public:
    struct Exchange {
        std::string expect_write;
        std::vector<std::string> replies;
    };

    explicit ScriptedTransport(std::vector<Exchange> script);

    void write_line(const std::string& line) override;
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;

    bool exhausted() const;

private:
    std::vector<Exchange> script_;
    size_t exchange_ = 0;
    size_t reply_ = 0;
};

struct UciLimits {
    std::optional<int> depth;
    std::optional<int> movetime_ms = 50;

    std::string go_command() const;
};

// UCI session over a transport. Construction runs the handshake; commands
// are only issued after "uciok"/"readyok" complete, and every line in both
// directions is retained in the transcript.
class EngineHandle {
public:
    EngineHandle(std::unique_ptr<LineTransport> transport, std::optional<int> skill_level,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

    bool ready() const { return ready_; }
    const std::vector<std::string>& transcript() const { return transcript_; }

    void new_game();

    // "position fen ..." + "go ...", parses "bestmove", converts the long-
    // algebraic reply to SAN through chess-core, and verifies legality.
    std::string best_move(const std::string& fen, const UciLimits& limits);

    void quit();

private:
    void send(const std::string& line);
    std::string receive();
    void expect_ready();

    std::unique_ptr<LineTransport> transport_;
    std::chrono::milliseconds timeout_;
    bool ready_ = false;
    std::vector<std::string> transcript_;
};

// Convenience: spawn a process engine and run the handshake.
std::unique_ptr<EngineHandle> handshake(const std::vector<std::string>& argv,
                                        std::optional<int> skill_level,
                                        std::chrono::milliseconds timeout =
                                            std::chrono::milliseconds(5000));

struct AnnotatedPosition {
    std::string fen;
    std::vector<std::string> legal_moves;  // SAN, sorted
    std::string best_move;
};

// Checks the record against chess-core: the move list matches legal_moves
// of the FEN and best_move is in it.
void validate_annotation(const AnnotatedPosition& record);

// Annotates with the in-process heuristic at the given level (the engine-
// free path; level 10 seed 0 is the standard annotator).
AnnotatedPosition annotate_position(const chess::BoardState& board, int level);

// Annotates each FEN with the engine. Per-record failures (bad FEN, engine
// hiccup) are recorded in diagnostics and skipped; order is preserved.
std::vector<AnnotatedPosition> annotate_dataset(const std::vector<std::string>& fens,
                                                EngineHandle& engine, const UciLimits& limits,
                                                std::vector<std::string>* diagnostics = nullptr);

// Mock-path equivalent of annotate_dataset.
std::vector<AnnotatedPosition> annotate_dataset_mock(const std::vector<std::string>& fens,
                                                     int level,
                                                     std::vector<std::string>* diagnostics = nullptr);

struct PlayerSpec {
    enum class Kind { heuristic, engine };
    Kind kind = Kind::heuristic;
    int level = HeuristicPolicy::kMaxLevel;
    std::vector<int> level_cycle;  // when nonempty, level varies per game
    std::vector<std::string> engine_argv;
    UciLimits limits;
    uint64_t seed = 0;
};

struct GameGenConfig {
    int max_plies = 300;
    uint64_t seed = 0;
};

// Plays n complete games, openings drawn round-robin from the book. Engine
// crashes mid-game discard that game (with a diagnostic) rather than
// aborting the batch.
std::vector<chess::GameRecord> generate_games(
    const PlayerSpec& white, const PlayerSpec& black, int n,
    const std::vector<std::vector<std::string>>& opening_book, const GameGenConfig& cfg,
    std::vector<std::string>* diagnostics = nullptr);

// Adapter exposing a UCI engine as a MovePolicy.
class EnginePolicy : public MovePolicy {
public:
    EnginePolicy(EngineHandle& handle, UciLimits limits, std::string name);

    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override { return name_; }
    void start_game() override;

private:
    EngineHandle& handle_;
    UciLimits limits_;
    std::string name_;
};

}  // namespace chesslm::engine
