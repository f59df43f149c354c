#include "doctest.h"

#include <sstream>

#include "chesslm/dataset.hpp"
#include "chesslm/engine.hpp"
#include "chesslm/mock_engine.hpp"

using namespace chesslm;
using namespace chesslm::engine;

namespace {

std::vector<ScriptedTransport::Exchange> handshake_script() {
    return {
        {"uci", {"id name scripted", "id author nobody", "uciok"}},
        {"setoption name Skill Level value 3", {}},
        {"isready", {"readyok"}},
    };
}

}  // namespace

TEST_CASE("handshake transcript matches the expected exchange byte for byte") {
    auto transport = std::make_unique<ScriptedTransport>(handshake_script());
    EngineHandle handle(std::move(transport), 3);
    CHECK(handle.ready());
    const std::vector<std::string> expected = {
        ">> uci",
        "<< id name scripted",
        "<< id author nobody",
        "<< uciok",
        ">> setoption name Skill Level value 3",
        ">> isready",
        "<< readyok",
    };
    CHECK(handle.transcript() == expected);
}

TEST_CASE("an engine that never replies times out") {
    std::vector<ScriptedTransport::Exchange> silent = {{"uci", {}}};
    CHECK_THROWS_AS(EngineHandle(std::make_unique<ScriptedTransport>(std::move(silent)),
                                 std::nullopt, std::chrono::milliseconds(10)),
                    EngineError);
}

TEST_CASE("go is never issued before readyok") {
    // The scripted transport rejects any out-of-order write, so a handle
    // that reaches best_move proves the ordering. A quit handle refuses.
    auto script = handshake_script();
    script.push_back({"quit", {}});
    EngineHandle handle(std::make_unique<ScriptedTransport>(std::move(script)), 3);
    handle.quit();
    CHECK_THROWS_AS(handle.best_move(chess::kStartFen, UciLimits{}), EngineError);
}

TEST_CASE("best_move converts the long-algebraic reply to SAN") {
    auto script = handshake_script();
    script.push_back({std::string("position fen ") + chess::kStartFen, {}});
    script.push_back({"go movetime 50", {"info depth 1 score cp 30", "bestmove e2e4"}});
    EngineHandle handle(std::make_unique<ScriptedTransport>(std::move(script)), 3);
    CHECK(handle.best_move(chess::kStartFen, UciLimits{}) == "e4");
}

TEST_CASE("an illegal engine reply is an error, not a move") {
    auto script = handshake_script();
    script.push_back({std::string("position fen ") + chess::kStartFen, {}});
    script.push_back({"go depth 3", {"bestmove e2e5"}});
    EngineHandle handle(std::make_unique<ScriptedTransport>(std::move(script)), 3);
    UciLimits limits;
    limits.depth = 3;
    limits.movetime_ms.reset();
    CHECK_THROWS_AS(handle.best_move(chess::kStartFen, limits), EngineError);
}

TEST_CASE("the in-process mock engine speaks the protocol deterministically") {
    const std::string commands =
        "uci\nisready\nsetoption name Skill Level value 10\nucinewgame\n"
        "position fen 6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1\ngo movetime 10\nquit\n";
    std::istringstream in_a(commands);
    std::ostringstream out_a;
    CHECK(run_mock_uci(in_a, out_a) == 0);
    const std::string reply = out_a.str();
    CHECK(reply.find("uciok\n") != std::string::npos);
    CHECK(reply.find("readyok\n") != std::string::npos);
    CHECK(reply.find("bestmove a1a8") != std::string::npos);  // back-rank mate

    std::istringstream in_b(commands);
    std::ostringstream out_b;
    run_mock_uci(in_b, out_b);
    CHECK(out_b.str() == reply);
}

TEST_CASE("heuristic policy takes mate in one at every level") {
    const auto board = chess::parse_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1");
    for (int level = 0; level <= HeuristicPolicy::kMaxLevel; ++level) {
        const auto move = HeuristicPolicy::choose(board, level, 77);
        CHECK(move.san == "Ra8#");
        CHECK(move.is_mate);
    }
}

TEST_CASE("a forced move is chosen regardless of strength") {
    // Black king a8, white king c7 covering b7/b8: Ka7 is the only move.
    const auto board = chess::parse_fen("k7/2K5/8/8/8/8/8/8 b - - 0 1");
    const auto legal = chess::legal_moves(board);
    REQUIRE(legal.size() == 1);
    for (int level : {0, 5, 10}) {
        CHECK(HeuristicPolicy::choose(board, level, 3).san == legal.front().san);
    }
}

TEST_CASE("the annotator is deterministic and material-aware") {
    const auto board = chess::parse_fen("4k3/8/8/3q4/4P3/8/8/4K3 w - - 0 1");
    const auto a = HeuristicPolicy::choose(board, 10, 0);
    const auto b = HeuristicPolicy::choose(board, 10, 0);
    CHECK(a.san == b.san);
    CHECK(a.san == "exd5");  // winning the queen dominates
}

TEST_CASE("annotate_position satisfies the record invariants") {
    const auto record = annotate_position(chess::start_position(), 10);
    CHECK_NOTHROW(validate_annotation(record));
    CHECK(record.legal_moves.size() == 20);
}

TEST_CASE("annotate_dataset_mock isolates bad records and keeps order") {
    std::vector<std::string> fens;
    chess::BoardState board = chess::start_position();
    Rng rng(123);
    for (int i = 0; i < 100; ++i) {
        fens.push_back(chess::serialize_fen(board));
        const auto moves = chess::generate_legal(board);
        if (moves.empty()) {
            board = chess::start_position();
            continue;
        }
        board = chess::apply_move_unchecked(board, moves[rng.below(moves.size())]);
    }
    std::vector<std::string> diagnostics;
    const auto records = annotate_dataset_mock(fens, 10, &diagnostics);
    CHECK(records.size() == 100);
    CHECK(diagnostics.empty());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].fen == fens[i]);
        CHECK_NOTHROW(validate_annotation(records[i]));
    }

    CHECK(annotate_dataset_mock({}, 10).empty());

    std::vector<std::string> with_bad = {fens[0], "not a fen at all", fens[1]};
    diagnostics.clear();
    const auto partial = annotate_dataset_mock(with_bad, 10, &diagnostics);
    CHECK(partial.size() == 2);
    REQUIRE(diagnostics.size() == 1);
    CHECK(diagnostics[0].find("not a fen at all") != std::string::npos);
}

TEST_CASE("annotated TSV round-trips") {
    const auto records = annotate_dataset_mock(
        {chess::kStartFen,
         "r1bqkbnr/1ppp1ppp/p1n5/1B2p3/4P3/5N2/PPPP1PPP/RNBQK2R w KQkq - 0 4"},
        10);
    const std::string tsv = data::annotated_to_tsv(records);
    const auto reparsed = data::parse_annotated_tsv(tsv);
    REQUIRE(reparsed.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(reparsed[i].fen == records[i].fen);
        CHECK(reparsed[i].legal_moves == records[i].legal_moves);
        CHECK(reparsed[i].best_move == records[i].best_move);
        CHECK_NOTHROW(validate_annotation(reparsed[i]));
    }
    CHECK_THROWS_AS(data::parse_annotated_tsv("just one field\n"), ParseError);
}

TEST_CASE("generate_games draws openings round-robin from the book") {
    const auto book = data::parse_opening_book("1. e4 e5\n1. d4 d5\n");
    REQUIRE(book.size() == 2);
    PlayerSpec white;
    white.level = 10;
    PlayerSpec black;
    black.level = 4;
    GameGenConfig cfg;
    cfg.seed = 9;
    const auto games = generate_games(white, black, 2, book, cfg);
    REQUIRE(games.size() == 2);
    CHECK(games[0].moves[0] == "e4");
    CHECK(games[0].moves[1] == "e5");
    CHECK(games[1].moves[0] == "d4");
    CHECK(games[1].moves[1] == "d5");
    for (const auto& g : games) {
        CHECK_NOTHROW(chess::pgn_to_fen(g.moves));
    }
}

TEST_CASE("a varied black level cycle produces the scheduled levels") {
    PlayerSpec white;
    white.level = 10;
    PlayerSpec black;
    black.level_cycle = {0, 5};
    GameGenConfig cfg;
    cfg.seed = 10;
    const auto games = generate_games(white, black, 4, {{}}, cfg);
    REQUIRE(games.size() == 4);
    CHECK(games[0].black_id == "heuristic-l0");
    CHECK(games[1].black_id == "heuristic-l5");
    CHECK(games[2].black_id == "heuristic-l0");
    CHECK(games[3].black_id == "heuristic-l5");
}

TEST_CASE("the strong side outscores the weak side over a fixture set") {
    PlayerSpec strong;
    strong.level = 10;
    PlayerSpec weak;
    weak.level = 0;
    GameGenConfig cfg;
    cfg.seed = 11;
    const auto book = data::parse_opening_book("1. e4 e5\n1. d4 d5\n1. c4 c5\n1. Nf3 Nf6\n");
    const auto as_white = generate_games(strong, weak, 8, book, cfg);
    cfg.seed = 12;
    const auto as_black = generate_games(weak, strong, 8, book, cfg);
    double strong_score = 0.0;
    double weak_score = 0.0;
    for (const auto& g : as_white) {
        if (g.result == chess::GameOutcome::white_win) strong_score += 1;
        if (g.result == chess::GameOutcome::black_win) weak_score += 1;
        if (g.result == chess::GameOutcome::draw) {
            strong_score += 0.5;
            weak_score += 0.5;
        }
    }
    for (const auto& g : as_black) {
        if (g.result == chess::GameOutcome::black_win) strong_score += 1;
        if (g.result == chess::GameOutcome::white_win) weak_score += 1;
        if (g.result == chess::GameOutcome::draw) {
            strong_score += 0.5;
            weak_score += 0.5;
        }
    }
    CHECK(strong_score >= weak_score);
}

TEST_CASE("PGN corpus round-trips through parse") {
    PlayerSpec white;
    PlayerSpec black;
    black.level = 2;
    GameGenConfig cfg;
    cfg.seed = 13;
    const auto games = generate_games(white, black, 3, {{}}, cfg);
    const std::string corpus = data::games_to_corpus(games);
    const auto reparsed = data::parse_pgn_corpus(corpus);
    REQUIRE(reparsed.size() == games.size());
    for (size_t i = 0; i < games.size(); ++i) {
        CHECK(reparsed[i] == games[i].moves);
    }
}

TEST_CASE("opening book parses lines with and without move numbers") {
    const auto book = data::parse_opening_book("e4 e5 Nf3\n1. d4 d5 2. c4\n\n# comment\n");
    REQUIRE(book.size() == 3);  // two lines plus one empty line
    CHECK(book[0] == std::vector<std::string>{"e4", "e5", "Nf3"});
    CHECK(book[1] == std::vector<std::string>{"d4", "d5", "c4"});
    CHECK(book[2].empty());
}
