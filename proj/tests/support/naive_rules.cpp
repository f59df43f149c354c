#include "naive_rules.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

namespace oracle {

using chesslm::chess::BoardState;
using chesslm::chess::Color;
using chesslm::chess::Piece;
using chesslm::chess::PieceKind;

namespace {

int file_of(int sq) { return sq % 8; }
int rank_of(int sq) { return sq / 8; }
int sq_at(int file, int rank) { return rank * 8 + file; }

bool path_clear(const BoardState& b, int from, int to) {
    const int df = file_of(to) - file_of(from);
    const int dr = rank_of(to) - rank_of(from);
    const int step_f = (df > 0) - (df < 0);
    const int step_r = (dr > 0) - (dr < 0);
    int f = file_of(from) + step_f;
    int r = rank_of(from) + step_r;
    while (f != file_of(to) || r != rank_of(to)) {
        if (b.at(sq_at(f, r)).has_value()) {
            return false;
        }
        f += step_f;
        r += step_r;
    }
    return true;
}

bool piece_attacks(const BoardState& b, int from, int to) {
    const Piece p = *b.at(from);
    const int df = file_of(to) - file_of(from);
    const int dr = rank_of(to) - rank_of(from);
    if (df == 0 && dr == 0) {
        return false;
    }
    switch (p.kind) {
        case PieceKind::pawn: {
            const int forward = p.color == Color::white ? 1 : -1;
            return dr == forward && std::abs(df) == 1;
        }
        case PieceKind::knight:
            return std::abs(df) * std::abs(dr) == 2;
        case PieceKind::bishop:
            return std::abs(df) == std::abs(dr) && path_clear(b, from, to);
        case PieceKind::rook:
            return (df == 0 || dr == 0) && path_clear(b, from, to);
        case PieceKind::queen:
            return (std::abs(df) == std::abs(dr) || df == 0 || dr == 0) &&
                   path_clear(b, from, to);
        case PieceKind::king:
            return std::max(std::abs(df), std::abs(dr)) == 1;
    }
    return false;
}

int king_of(const BoardState& b, Color c) {
    for (int s = 0; s < 64; ++s) {
        const auto& p = b.at(s);
        if (p && p->kind == PieceKind::king && p->color == c) {
            return s;
        }
    }
    return -1;
}

bool self_check_after(const BoardState& b, const OracleMove& m, Color mover) {
    const BoardState next = oracle_apply(b, m);
    return oracle_attacked(next, king_of(next, mover),
                           mover == Color::white ? Color::black : Color::white);
}

void emit_pawn(const BoardState& b, int from, std::vector<OracleMove>& out) {
    const Piece p = *b.at(from);
    const int forward = p.color == Color::white ? 1 : -1;
    const int start_rank = p.color == Color::white ? 1 : 6;
    const int last_rank = p.color == Color::white ? 7 : 0;
    const int f = file_of(from);
    const int r = rank_of(from);

    auto emit = [&](int to, bool ep) {
        if (rank_of(to) == last_rank) {
            for (int promo : {static_cast<int>(PieceKind::knight),
                              static_cast<int>(PieceKind::bishop),
                              static_cast<int>(PieceKind::rook),
                              static_cast<int>(PieceKind::queen)}) {
                out.push_back({from, to, promo, false, false, false});
            }
        } else {
            out.push_back({from, to, -1, ep, false, false});
        }
    };

    if (r + forward >= 0 && r + forward <= 7) {
        const int one = sq_at(f, r + forward);
        if (!b.at(one)) {
            emit(one, false);
            if (r == start_rank) {
                const int two = sq_at(f, r + 2 * forward);
                if (!b.at(two)) {
                    out.push_back({from, two, -1, false, false, false});
                }
            }
        }
        for (int df : {-1, 1}) {
            if (f + df < 0 || f + df > 7) {
                continue;
            }
            const int diag = sq_at(f + df, r + forward);
            const auto& target = b.at(diag);
            if (target && target->color != p.color) {
                emit(diag, false);
            } else if (!target && b.en_passant_target && *b.en_passant_target == diag) {
                emit(diag, true);
            }
        }
    }
}

void emit_castles(const BoardState& b, std::vector<OracleMove>& out) {
    const Color us = b.side_to_move;
    const Color them = us == Color::white ? Color::black : Color::white;
    const int rank = us == Color::white ? 0 : 7;
    const int e = sq_at(4, rank);
    const auto& king = b.at(e);
    if (!king || king->kind != PieceKind::king || king->color != us) {
        return;
    }
    const bool k_right = us == Color::white ? b.castling.white_kingside
                                            : b.castling.black_kingside;
    const bool q_right = us == Color::white ? b.castling.white_queenside
                                            : b.castling.black_queenside;
    const auto rook_at = [&](int file) {
        const auto& p = b.at(sq_at(file, rank));
        return p && p->kind == PieceKind::rook && p->color == us;
    };
    if (k_right && rook_at(7) && !b.at(sq_at(5, rank)) && !b.at(sq_at(6, rank)) &&
        !oracle_attacked(b, e, them) && !oracle_attacked(b, sq_at(5, rank), them) &&
        !oracle_attacked(b, sq_at(6, rank), them)) {
        out.push_back({e, sq_at(6, rank), -1, false, true, false});
    }
    if (q_right && rook_at(0) && !b.at(sq_at(1, rank)) && !b.at(sq_at(2, rank)) &&
        !b.at(sq_at(3, rank)) && !oracle_attacked(b, e, them) &&
        !oracle_attacked(b, sq_at(3, rank), them) &&
        !oracle_attacked(b, sq_at(2, rank), them)) {
        out.push_back({e, sq_at(2, rank), -1, false, false, true});
    }
}

}  // namespace

bool oracle_attacked(const BoardState& board, int sq, Color by) {
    for (int s = 0; s < 64; ++s) {
        const auto& p = board.at(s);
        if (p && p->color == by && piece_attacks(board, s, sq)) {
            return true;
        }
    }
    return false;
}

BoardState oracle_apply(const BoardState& board, const OracleMove& m) {
    BoardState b = board;
    const Piece mover = *b.at(m.from);
    const Color us = mover.color;

    if (m.en_passant) {
        b.at(sq_at(file_of(m.to), rank_of(m.from))).reset();
    }
    b.at(m.from).reset();
    b.at(m.to) = m.promo >= 0 ? Piece{static_cast<PieceKind>(m.promo), us} : mover;

    if (m.castle_kingside) {
        b.at(sq_at(5, rank_of(m.from))) = *b.at(sq_at(7, rank_of(m.from)));
        b.at(sq_at(7, rank_of(m.from))).reset();
    }
    if (m.castle_queenside) {
        b.at(sq_at(3, rank_of(m.from))) = *b.at(sq_at(0, rank_of(m.from)));
        b.at(sq_at(0, rank_of(m.from))).reset();
    }

    // Rights drop whenever a king or rook home square is touched.
    for (int s : {m.from, m.to}) {
        if (s == sq_at(4, 0)) {
            b.castling.white_kingside = b.castling.white_queenside = false;
        }
        if (s == sq_at(0, 0)) {
            b.castling.white_queenside = false;
        }
        if (s == sq_at(7, 0)) {
            b.castling.white_kingside = false;
        }
        if (s == sq_at(4, 7)) {
            b.castling.black_kingside = b.castling.black_queenside = false;
        }
        if (s == sq_at(0, 7)) {
            b.castling.black_queenside = false;
        }
        if (s == sq_at(7, 7)) {
            b.castling.black_kingside = false;
        }
    }

    if (mover.kind == PieceKind::pawn && std::abs(rank_of(m.to) - rank_of(m.from)) == 2) {
        b.en_passant_target = sq_at(file_of(m.from), (rank_of(m.from) + rank_of(m.to)) / 2);
    } else {
        b.en_passant_target.reset();
    }
    b.side_to_move = us == Color::white ? Color::black : Color::white;
    return b;
}

std::vector<OracleMove> oracle_legal_moves(const BoardState& board) {
    std::vector<OracleMove> candidates;
    const Color us = board.side_to_move;
    for (int from = 0; from < 64; ++from) {
        const auto& p = board.at(from);
        if (!p || p->color != us) {
            continue;
        }
        if (p->kind == PieceKind::pawn) {
            emit_pawn(board, from, candidates);
            continue;
        }
        for (int to = 0; to < 64; ++to) {
            const auto& target = board.at(to);
            if (target && target->color == us) {
                continue;
            }
            if (piece_attacks(board, from, to)) {
                candidates.push_back({from, to, -1, false, false, false});
            }
        }
    }
    emit_castles(board, candidates);

    std::vector<OracleMove> legal;
    for (const auto& m : candidates) {
        if (!self_check_after(board, m, us)) {
            legal.push_back(m);
        }
    }
    return legal;
}

uint64_t oracle_perft(const BoardState& board, int depth) {
    if (depth <= 0) {
        return 1;
    }
    const auto moves = oracle_legal_moves(board);
    if (depth == 1) {
        return moves.size();
    }
    uint64_t nodes = 0;
    for (const auto& m : moves) {
        nodes += oracle_perft(oracle_apply(board, m), depth - 1);
    }
    return nodes;
}

std::vector<std::tuple<int, int, int>> oracle_move_set(const BoardState& board) {
    std::vector<std::tuple<int, int, int>> set;
    for (const auto& m : oracle_legal_moves(board)) {
        set.emplace_back(m.from, m.to, m.promo);
    }
    std::sort(set.begin(), set.end());
    return set;
}

}  // namespace oracle
