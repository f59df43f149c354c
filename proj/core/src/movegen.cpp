#include "chesslm/movegen.hpp"

#include <algorithm>
#include <array>

#include "chesslm/util.hpp"

namespace chesslm::chess {

namespace {

constexpr std::array<std::pair<int, int>, 8> kKnightSteps{{
    {1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}};
constexpr std::array<std::pair<int, int>, 8> kKingSteps{{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr std::array<std::pair<int, int>, 4> kBishopDirs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
constexpr std::array<std::pair<int, int>, 4> kRookDirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

bool on_board(int file, int rank) {
    return file >= 0 && file < 8 && rank >= 0 && rank < 8;
}

bool ray_attack(const BoardState& b, Square target, Color by,
                const std::pair<int, int>& dir, PieceKind slider) {
    int f = file_of(target) + dir.first;
    int r = rank_of(target) + dir.second;
    while (on_board(f, r)) {
        const auto& p = b.at(make_square(f, r));
        if (p) {
            return p->color == by && (p->kind == slider || p->kind == PieceKind::queen);
        }
        f += dir.first;
        r += dir.second;
    }
    return false;
}

}  // namespace

bool is_square_attacked(const BoardState& b, Square sq, Color by) {
    const int f = file_of(sq);
    const int r = rank_of(sq);

    // Pawns: a white pawn attacks upward, so look one rank below the target.
    const int pawn_rank = by == Color::white ? r - 1 : r + 1;
    for (int df : {-1, 1}) {
        if (on_board(f + df, pawn_rank)) {
            const auto& p = b.at(make_square(f + df, pawn_rank));
            if (p && p->color == by && p->kind == PieceKind::pawn) {
                return true;
            }
        }
    }

    for (const auto& [df, dr] : kKnightSteps) {
        if (on_board(f + df, r + dr)) {
            const auto& p = b.at(make_square(f + df, r + dr));
            if (p && p->color == by && p->kind == PieceKind::knight) {
                return true;
            }
        }
    }

    for (const auto& [df, dr] : kKingSteps) {
        if (on_board(f + df, r + dr)) {
            const auto& p = b.at(make_square(f + df, r + dr));
            if (p && p->color == by && p->kind == PieceKind::king) {
                return true;
            }
        }
    }

    for (const auto& dir : kBishopDirs) {
        if (ray_attack(b, sq, by, dir, PieceKind::bishop)) {
            return true;
        }
    }
    for (const auto& dir : kRookDirs) {
        if (ray_attack(b, sq, by, dir, PieceKind::rook)) {
            return true;
        }
    }
    return false;
}

bool in_check(const BoardState& b, Color side) {
    const Square k = b.king_square(side);
    return k >= 0 && is_square_attacked(b, k, opposite(side));
}

namespace {

void push_pawn_moves(const BoardState& b, Square from, std::vector<Move>& out) {
    const Color us = b.side_to_move;
    const int dir = us == Color::white ? 1 : -1;
    const int start_rank = us == Color::white ? 1 : 6;
    const int promo_rank = us == Color::white ? 7 : 0;
    const int f = file_of(from);
    const int r = rank_of(from);

    auto add = [&](Square to, bool capture, bool en_passant, bool double_push) {
        Move m;
        m.from = from;
        m.to = to;
        m.is_capture = capture;
        m.is_en_passant = en_passant;
        m.is_double_push = double_push;
        if (rank_of(to) == promo_rank) {
            for (PieceKind k : {PieceKind::queen, PieceKind::rook, PieceKind::bishop,
                                PieceKind::knight}) {
                Move pm = m;
                pm.promotion = k;
                out.push_back(pm);
            }
        } else {
            out.push_back(m);
        }
    };

    if (on_board(f, r + dir) && !b.at(make_square(f, r + dir))) {
        add(make_square(f, r + dir), false, false, false);
        if (r == start_rank && !b.at(make_square(f, r + 2 * dir))) {
            add(make_square(f, r + 2 * dir), false, false, true);
        }
    }
    for (int df : {-1, 1}) {
        if (!on_board(f + df, r + dir)) {
            continue;
        }
        const Square to = make_square(f + df, r + dir);
        const auto& target = b.at(to);
        if (target && target->color != us) {
            add(to, true, false, false);
        } else if (b.en_passant_target && *b.en_passant_target == to) {
            add(to, true, true, false);
        }
    }
}

void push_step_moves(const BoardState& b, Square from,
                     const std::array<std::pair<int, int>, 8>& steps,
                     std::vector<Move>& out) {
    const Color us = b.side_to_move;
    for (const auto& [df, dr] : steps) {
        const int f = file_of(from) + df;
        const int r = rank_of(from) + dr;
        if (!on_board(f, r)) {
            continue;
        }
        const Square to = make_square(f, r);
        const auto& target = b.at(to);
        if (target && target->color == us) {
            continue;
        }
        Move m;
        m.from = from;
        m.to = to;
        m.is_capture = target.has_value();
        out.push_back(m);
    }
}

void push_slider_moves(const BoardState& b, Square from,
                       std::initializer_list<std::pair<int, int>> dirs,
                       std::vector<Move>& out) {
    const Color us = b.side_to_move;
    for (const auto& dir : dirs) {
        int f = file_of(from) + dir.first;
        int r = rank_of(from) + dir.second;
        while (on_board(f, r)) {
            const Square to = make_square(f, r);
            const auto& target = b.at(to);
            if (target && target->color == us) {
                break;
            }
            Move m;
            m.from = from;
            m.to = to;
            m.is_capture = target.has_value();
            out.push_back(m);
            if (target) {
                break;
            }
            f += dir.first;
            r += dir.second;
        }
    }
}

void push_castling(const BoardState& b, std::vector<Move>& out) {
    const Color us = b.side_to_move;
    const int rank = us == Color::white ? 0 : 7;
    const Square king_sq = make_square(4, rank);
    const auto& king = b.at(king_sq);
    if (!king || king->kind != PieceKind::king || king->color != us) {
        return;
    }
    if (in_check(b, us)) {
        return;
    }
    const Color them = opposite(us);

    const bool kingside =
        us == Color::white ? b.castling.white_kingside : b.castling.black_kingside;
    if (kingside && !b.at(make_square(5, rank)) && !b.at(make_square(6, rank)) &&
        !is_square_attacked(b, make_square(5, rank), them) &&
        !is_square_attacked(b, make_square(6, rank), them)) {
        Move m;
        m.from = king_sq;
        m.to = make_square(6, rank);
        m.is_castle_kingside = true;
        out.push_back(m);
    }

    const bool queenside =
        us == Color::white ? b.castling.white_queenside : b.castling.black_queenside;
    if (queenside && !b.at(make_square(3, rank)) && !b.at(make_square(2, rank)) &&
        !b.at(make_square(1, rank)) &&
        !is_square_attacked(b, make_square(3, rank), them) &&
        !is_square_attacked(b, make_square(2, rank), them)) {
        Move m;
        m.from = king_sq;
        m.to = make_square(2, rank);
        m.is_castle_queenside = true;
        out.push_back(m);
    }
}

std::vector<Move> generate_pseudo(const BoardState& b) {
    std::vector<Move> out;
    out.reserve(64);
    const Color us = b.side_to_move;
    for (Square from = 0; from < 64; ++from) {
        const auto& p = b.at(from);
        if (!p || p->color != us) {
            continue;
        }
        switch (p->kind) {
            case PieceKind::pawn:
                push_pawn_moves(b, from, out);
                break;
            case PieceKind::knight:
                push_step_moves(b, from, kKnightSteps, out);
                break;
            case PieceKind::bishop:
                push_slider_moves(b, from, {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, out);
                break;
            case PieceKind::rook:
                push_slider_moves(b, from, {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, out);
                break;
            case PieceKind::queen:
                push_slider_moves(b, from,
                                  {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                   {1, 1}, {1, -1}, {-1, 1}, {-1, -1}},
                                  out);
                break;
            case PieceKind::king:
                push_step_moves(b, from, kKingSteps, out);
                break;
        }
    }
    push_castling(b, out);
    return out;
}

void clear_rights_for_square(BoardState& b, Square sq) {
    if (sq == make_square(4, 0)) {
        b.castling.white_kingside = b.castling.white_queenside = false;
    } else if (sq == make_square(0, 0)) {
        b.castling.white_queenside = false;
    } else if (sq == make_square(7, 0)) {
        b.castling.white_kingside = false;
    } else if (sq == make_square(4, 7)) {
        b.castling.black_kingside = b.castling.black_queenside = false;
    } else if (sq == make_square(0, 7)) {
        b.castling.black_queenside = false;
    } else if (sq == make_square(7, 7)) {
        b.castling.black_kingside = false;
    }
}

}  // namespace

BoardState apply_move_unchecked(const BoardState& board, const Move& move) {
    BoardState b = board;
    const Color us = b.side_to_move;
    const Piece mover = *b.at(move.from);

    const bool is_pawn_move = mover.kind == PieceKind::pawn;
    if (is_pawn_move || move.is_capture) {
        b.halfmove_clock = 0;
    } else {
        b.halfmove_clock += 1;
    }

    if (move.is_en_passant) {
        const Square captured = make_square(file_of(move.to), rank_of(move.from));
        b.at(captured).reset();
    }

    b.at(move.from).reset();
    if (move.promotion) {
        b.at(move.to) = Piece{*move.promotion, us};
    } else {
        b.at(move.to) = mover;
    }

    if (move.is_castle_kingside) {
        const int rank = rank_of(move.from);
        b.at(make_square(5, rank)) = *b.at(make_square(7, rank));
        b.at(make_square(7, rank)).reset();
    } else if (move.is_castle_queenside) {
        const int rank = rank_of(move.from);
        b.at(make_square(3, rank)) = *b.at(make_square(0, rank));
        b.at(make_square(0, rank)).reset();
    }

    clear_rights_for_square(b, move.from);
    clear_rights_for_square(b, move.to);

    if (move.is_double_push) {
        const int mid_rank = (rank_of(move.from) + rank_of(move.to)) / 2;
        b.en_passant_target = make_square(file_of(move.from), mid_rank);
    } else {
        b.en_passant_target.reset();
    }

    if (us == Color::black) {
        b.fullmove_number += 1;
    }
    b.side_to_move = opposite(us);
    return b;
}

std::vector<Move> generate_legal(const BoardState& board) {
    std::vector<Move> out;
    for (const Move& m : generate_pseudo(board)) {
        const BoardState next = apply_move_unchecked(board, m);
        if (!in_check(next, board.side_to_move)) {
            out.push_back(m);
        }
    }
    return out;
}

std::string move_to_san(const BoardState& board, const Move& move) {
    std::string san;
    const Piece mover = *board.at(move.from);

    if (move.is_castle_kingside) {
        san = "O-O";
    } else if (move.is_castle_queenside) {
        san = "O-O-O";
    } else if (mover.kind == PieceKind::pawn) {
        if (move.is_capture) {
            san += static_cast<char>('a' + file_of(move.from));
            san += 'x';
        }
        san += square_name(move.to);
        if (move.promotion) {
            san += '=';
            san += piece_char(Piece{*move.promotion, Color::white});
        }
    } else {
        san += piece_char(Piece{mover.kind, Color::white});
        // Minimal disambiguation: prefer the file, then the rank, then both.
        bool need_file = false;
        bool need_rank = false;
        bool ambiguous = false;
        for (const Move& other : generate_legal(board)) {
            if (other.from == move.from || other.to != move.to) {
                continue;
            }
            const auto& p = board.at(other.from);
            if (!p || p->kind != mover.kind) {
                continue;
            }
            ambiguous = true;
            if (file_of(other.from) == file_of(move.from)) {
                need_rank = true;
            }
            if (rank_of(other.from) == rank_of(move.from)) {
                need_file = true;
            }
        }
        if (ambiguous && !need_file && !need_rank) {
            need_file = true;
        }
        if (need_file) {
            san += static_cast<char>('a' + file_of(move.from));
        }
        if (need_rank) {
            san += static_cast<char>('1' + rank_of(move.from));
        }
        if (move.is_capture) {
            san += 'x';
        }
        san += square_name(move.to);
    }

    const BoardState next = apply_move_unchecked(board, move);
    if (in_check(next, next.side_to_move)) {
        san += generate_legal(next).empty() ? '#' : '+';
    }
    return san;
}

std::vector<MoveRecord> legal_moves(const BoardState& board) {
    std::vector<MoveRecord> out;
    for (const Move& m : generate_legal(board)) {
        MoveRecord rec;
        rec.san = move_to_san(board, m);
        rec.from_square = m.from;
        rec.to_square = m.to;
        rec.promotion = m.promotion;
        rec.is_capture = m.is_capture;
        rec.is_mate = rec.san.ends_with('#');
        rec.is_check = rec.is_mate || rec.san.ends_with('+');
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(),
              [](const MoveRecord& a, const MoveRecord& b) { return a.san < b.san; });
    return out;
}

Move record_to_move(const BoardState& board, const MoveRecord& record) {
    for (const Move& m : generate_legal(board)) {
        if (m.from == record.from_square && m.to == record.to_square &&
            m.promotion == record.promotion) {
            return m;
        }
    }
    throw IllegalMoveError("illegal move: " + record.san);
}

BoardState apply_move(const BoardState& board, const MoveRecord& record) {
    return apply_move_unchecked(board, record_to_move(board, record));
}

namespace {

std::string strip_suffixes(const std::string& san) {
    std::string s = san;
    while (!s.empty() && (s.back() == '!' || s.back() == '?')) {
        s.pop_back();
    }
    while (!s.empty() && (s.back() == '+' || s.back() == '#')) {
        s.pop_back();
    }
    return s;
}

}  // namespace

MoveRecord parse_san(const BoardState& board, const std::string& san) {
    std::string wanted = san;
    while (!wanted.empty() && (wanted.back() == '!' || wanted.back() == '?')) {
        wanted.pop_back();
    }
    const auto moves = legal_moves(board);
    for (const MoveRecord& m : moves) {
        if (m.san == wanted) {
            return m;
        }
    }
    const std::string bare = strip_suffixes(wanted);
    for (const MoveRecord& m : moves) {
        if (strip_suffixes(m.san) == bare) {
            return m;
        }
    }
    throw IllegalMoveError("illegal move: " + san);
}

std::string move_to_uci(const Move& move) {
    std::string s = square_name(move.from) + square_name(move.to);
    if (move.promotion) {
        s += static_cast<char>(
            std::tolower(piece_char(Piece{*move.promotion, Color::white})));
    }
    return s;
}

std::optional<MoveRecord> parse_uci_move(const BoardState& board, const std::string& uci) {
    if (uci.size() < 4 || uci.size() > 5) {
        return std::nullopt;
    }
    const auto from = parse_square(uci.substr(0, 2));
    const auto to = parse_square(uci.substr(2, 2));
    if (!from || !to) {
        return std::nullopt;
    }
    std::optional<PieceKind> promo;
    if (uci.size() == 5) {
        const auto p = piece_from_char(uci[4]);
        if (!p || p->kind == PieceKind::pawn || p->kind == PieceKind::king) {
            return std::nullopt;
        }
        promo = p->kind;
    }
    for (const MoveRecord& m : legal_moves(board)) {
        if (m.from_square == *from && m.to_square == *to && m.promotion == promo) {
            return m;
        }
    }
    return std::nullopt;
}

uint64_t perft(const BoardState& board, int depth) {
    if (depth <= 0) {
        return 1;
    }
    const auto moves = generate_legal(board);
    if (depth == 1) {
        return moves.size();
    }
    uint64_t nodes = 0;
    for (const Move& m : moves) {
        nodes += perft(apply_move_unchecked(board, m), depth - 1);
    }
    return nodes;
}

}  // namespace chesslm::chess
