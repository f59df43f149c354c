#pragma once

#include <string>
#include <vector>

#include "chesslm/engine.hpp"
#include "chesslm/game.hpp"

namespace chesslm::data {

// Annotated dataset file: one record per line, tab-separated:
// FEN \t comma-joined sorted legal SAN \t best SAN.
std::string annotated_to_tsv(const std::vector<engine::AnnotatedPosition>& records);
std::vector<engine::AnnotatedPosition> parse_annotated_tsv(const std::string& text);
std::vector<engine::AnnotatedPosition> load_annotated_tsv(const std::string& path);

// PGN corpus: one game per blank-line-separated movetext block. Rendering
// includes the result token; parsing drops headers and results.
std::string games_to_corpus(const std::vector<chess::GameRecord>& games);
std::vector<std::vector<std::string>> parse_pgn_corpus(const std::string& text);
std::vector<std::vector<std::string>> load_pgn_corpus(const std::string& path);

// Opening book: plain text, one SAN line per opening (move numbers allowed).
// An empty line is the start position.
std::vector<std::vector<std::string>> parse_opening_book(const std::string& text);
std::vector<std::vector<std::string>> load_opening_book(const std::string& path);

// Every position a game passes through, as FEN, including the start but
// excluding the final one when it is terminal.
std::vector<std::string> game_positions(const std::vector<std::string>& san_moves,
                                        bool white_to_move_only);

// Builds the movetext string of one PGN training sample (move numbers kept,
// no result token).
std::string movetext_for_training(const std::vector<std::string>& san_moves);

}  // namespace chesslm::data
