#pragma once

// Independent naive rules engine used as the oracle for chess-core. It
// shares only the BoardState data type with production code: candidate
// moves are enumerated square-by-square with explicit geometry walking, and
// legality uses its own attack scan and board mutation.

#include <cstdint>
#include <vector>

#include "chesslm/board.hpp"

namespace oracle {

struct OracleMove {
    int from = 0;
    int to = 0;
    int promo = -1;  // -1 none, else static_cast<int>(PieceKind)
    bool en_passant = false;
    bool castle_kingside = false;
    bool castle_queenside = false;
};

bool oracle_attacked(const chesslm::chess::BoardState& board, int sq,
                     chesslm::chess::Color by);

std::vector<OracleMove> oracle_legal_moves(const chesslm::chess::BoardState& board);

chesslm::chess::BoardState oracle_apply(const chesslm::chess::BoardState& board,
                                        const OracleMove& move);

uint64_t oracle_perft(const chesslm::chess::BoardState& board, int depth);

// (from, to, promo) triples sorted, for set comparison against production.
std::vector<std::tuple<int, int, int>> oracle_move_set(const chesslm::chess::BoardState& board);

}  // namespace oracle
