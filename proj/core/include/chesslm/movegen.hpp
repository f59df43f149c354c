#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chesslm/board.hpp"

namespace chesslm::chess {

// Compact move used internally by generation and perft.
struct Move {
    Square from = 0;
    Square to = 0;
    std::optional<PieceKind> promotion;
    bool is_capture = false;
    bool is_en_passant = false;
    bool is_castle_kingside = false;
    bool is_castle_queenside = false;
    bool is_double_push = false;

    bool operator==(const Move&) const = default;
};

// A legal move together with its SAN spelling and judgment flags.
struct MoveRecord {
    std::string san;
    Square from_square = 0;
    Square to_square = 0;
    std::optional<PieceKind> promotion;
    bool is_capture = false;
    bool is_check = false;
    bool is_mate = false;

    bool operator==(const MoveRecord&) const = default;
};

bool is_square_attacked(const BoardState& board, Square sq, Color by);
bool in_check(const BoardState& board, Color side);

// All strictly legal moves, without SAN spellings. Fast path for perft and
// adjudication; order is generation order, not sorted.
std::vector<Move> generate_legal(const BoardState& board);

// All strictly legal moves with SAN, check/mate flags, sorted by SAN.
std::vector<MoveRecord> legal_moves(const BoardState& board);

// Applies a move assumed to come from generate_legal on this board.
BoardState apply_move_unchecked(const BoardState& board, const Move& move);

// Validates against the legal move list, then applies. Throws
// IllegalMoveError naming the SAN when the move is not legal here.
BoardState apply_move(const BoardState& board, const MoveRecord& move);

// SAN spelling of a legal move in this position (minimal disambiguation,
// '+'/'#' suffixes included).
std::string move_to_san(const BoardState& board, const Move& move);

// Resolves SAN text against the legal moves of this position. Trailing
// "!?" annotations are ignored; '+'/'#' suffixes are tolerated either way.
// Throws IllegalMoveError when nothing matches.
MoveRecord parse_san(const BoardState& board, const std::string& san);

// UCI long-algebraic conversions ("e2e4", "e7e8q").
std::string move_to_uci(const Move& move);
std::optional<MoveRecord> parse_uci_move(const BoardState& board, const std::string& uci);

// Leaf-node count of the legal game tree to the given depth.
uint64_t perft(const BoardState& board, int depth);

Move record_to_move(const BoardState& board, const MoveRecord& record);

}  // namespace chesslm::chess
