#include "doctest.h"

#include <map>
#include <set>

#include "chesslm/game.hpp"
#include "chesslm/util.hpp"

using namespace chesslm;
using namespace chesslm::chess;

TEST_CASE("pgn_to_fen on the empty sequence is the initial position") {
    CHECK(serialize_fen(pgn_to_fen({})) == kStartFen);
}

TEST_CASE("pgn_to_fen reaches the Ruy Lopez position") {
    const BoardState board = pgn_to_fen({"e4", "e5", "Nf3", "Nc6", "Bb5", "a6"});
    CHECK(serialize_fen(board) ==
          "r1bqkbnr/1ppp1ppp/p1n5/1B2p3/4P3/5N2/PPPP1PPP/RNBQK2R w KQkq - 0 4");
}

TEST_CASE("pgn_to_fen reports the index and SAN of the first illegal move") {
    CHECK_THROWS_WITH_AS(pgn_to_fen({"e4", "e5", "Nf3", "Nf3"}),
                         "illegal move at index 3: Nf3", IllegalMoveError);
}

TEST_CASE("transpositions map to the same FEN (surjectivity witness)") {
    const BoardState a = pgn_to_fen({"Nf3", "Nc6", "Nc3", "Nf6"});
    const BoardState b = pgn_to_fen({"Nc3", "Nf6", "Nf3", "Nc6"});
    CHECK(serialize_fen(a) == serialize_fen(b));
}

TEST_CASE("a transposition pair exists within 4-ply search") {
    // Search a bounded move pool for two distinct orders reaching one FEN.
    const std::vector<std::string> pool_white = {"Nf3", "d4", "e4", "c4"};
    const std::vector<std::string> pool_black = {"Nf6", "d5", "e5", "c5"};
    std::map<std::string, std::vector<std::string>> seen;
    bool found = false;
    for (const auto& w1 : pool_white) {
        for (const auto& b1 : pool_black) {
            for (const auto& w2 : pool_white) {
                if (w2 == w1) continue;
                for (const auto& b2 : pool_black) {
                    if (b2 == b1) continue;
                    std::vector<std::string> seq{w1, b1, w2, b2};
                    std::string fen;
                    try {
                        fen = serialize_fen(pgn_to_fen(seq));
                    } catch (const IllegalMoveError&) {
                        continue;
                    }
                    auto [it, fresh] = seen.emplace(fen, seq);
                    if (!fresh && it->second != seq) {
                        found = true;
                    }
                }
            }
        }
    }
    CHECK(found);
}

TEST_CASE("pgn_to_fen is deterministic") {
    const std::vector<std::string> moves = {"e4", "c5", "Nf3", "d6", "d4", "cxd4"};
    CHECK(serialize_fen(pgn_to_fen(moves)) == serialize_fen(pgn_to_fen(moves)));
}

TEST_CASE("GameHistory tracks one key per position") {
    GameHistory game;
    CHECK(game.position_keys().size() == 1);
    game.push_san("e4");
    game.push_san("e5");
    CHECK(game.position_keys().size() == 3);
    CHECK(game.moves().size() == 2);
    CHECK(repetition_count(game) == 1);
}

TEST_CASE("knight shuffle brings the start position to three occurrences") {
    GameHistory game;
    for (const char* san : {"Nf3", "Nf6", "Ng1", "Ng8", "Nf3", "Nf6", "Ng1", "Ng8"}) {
        game.push_san(san);
    }
    CHECK(repetition_count(game) == 3);
}

TEST_CASE("a capture starts a fresh repetition count") {
    GameHistory game;
    for (const char* san : {"e4", "d5", "exd5"}) {
        game.push_san(san);
    }
    CHECK(repetition_count(game) == 1);
}

TEST_CASE("position key ignores clocks but honors en-passant capturability") {
    // Clocks are excluded.
    CHECK(position_key(parse_fen("8/8/8/8/8/8/8/K6k w - - 0 1")) ==
          position_key(parse_fen("8/8/8/8/8/8/8/K6k w - - 37 90")));

    // After 1.e4 the en-passant square exists but no capture is possible,
    // so the key matches the same board without the target square.
    const std::string after_e4 =
        "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1";
    const std::string after_e4_no_ep =
        "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1";
    CHECK(position_key(parse_fen(after_e4)) == position_key(parse_fen(after_e4_no_ep)));
    CHECK(position_key(parse_fen(after_e4)).find("e3") == std::string::npos);

    // With a black pawn on d4, exd3 is a real option: keys must differ.
    const BoardState with_capture =
        parse_fen("rnbqkbnr/ppp1pppp/8/8/3pP3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 2");
    const BoardState without_target =
        parse_fen("rnbqkbnr/ppp1pppp/8/8/3pP3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 2");
    CHECK(position_key(with_capture) != position_key(without_target));
}

TEST_CASE("PGN movetext parsing strips numbers, comments, NAGs, and results") {
    const auto moves = parse_pgn_movetext(
        "[Event \"test\"]\n[White \"a\"]\n\n1. e4 {king pawn} e5 $1 2. Nf3 Nc6 1/2-1/2");
    CHECK(moves == std::vector<std::string>{"e4", "e5", "Nf3", "Nc6"});
    CHECK_THROWS_AS(parse_pgn_movetext("1. e4 (1. d4) e5"), ParseError);
}

TEST_CASE("movetext rendering round-trips through the parser") {
    GameRecord game;
    game.moves = {"e4", "e5", "Nf3", "Nc6", "Bb5"};
    game.result = GameOutcome::draw;
    const std::string text = render_movetext(game);
    CHECK(parse_pgn_movetext(text) == game.moves);
    CHECK(text.find("1/2-1/2") != std::string::npos);
}
