#include "chesslm/board.hpp"

#include <cctype>
#include <sstream>

#include "chesslm/util.hpp"

namespace chesslm::chess {

std::optional<Square> parse_square(std::string_view text) {
    if (text.size() != 2) {
        return std::nullopt;
    }
    const char f = text[0];
    const char r = text[1];
    if (f < 'a' || f > 'h' || r < '1' || r > '8') {
        return std::nullopt;
    }
    return make_square(f - 'a', r - '1');
}

char piece_char(Piece p) {
    static constexpr char kWhite[] = {'P', 'N', 'B', 'R', 'Q', 'K'};
    const char c = kWhite[static_cast<int>(p.kind)];
    return p.color == Color::white ? c : static_cast<char>(std::tolower(c));
}

std::optional<Piece> piece_from_char(char c) {
    const Color color = std::isupper(static_cast<unsigned char>(c)) ? Color::white : Color::black;
    switch (std::toupper(static_cast<unsigned char>(c))) {
        case 'P': return Piece{PieceKind::pawn, color};
        case 'N': return Piece{PieceKind::knight, color};
        case 'B': return Piece{PieceKind::bishop, color};
        case 'R': return Piece{PieceKind::rook, color};
        case 'Q': return Piece{PieceKind::queen, color};
        case 'K': return Piece{PieceKind::king, color};
        default: return std::nullopt;
    }
}

Square BoardState::king_square(Color c) const {
    for (Square s = 0; s < 64; ++s) {
        const auto& p = squares[static_cast<size_t>(s)];
        if (p && p->kind == PieceKind::king && p->color == c) {
            return s;
        }
    }
    return -1;
}

BoardState start_position() {
    return parse_fen(kStartFen);
}

namespace {

bool has_piece_at(const BoardState& b, Square s, Piece p) {
    return b.at(s).has_value() && *b.at(s) == p;
}

// Rights are only meaningful while the king and the matching rook sit on
// their home squares; anything else is dropped during parsing.
void sanitize_castling(BoardState& b) {
    const Piece wk{PieceKind::king, Color::white};
    const Piece wr{PieceKind::rook, Color::white};
    const Piece bk{PieceKind::king, Color::black};
    const Piece br{PieceKind::rook, Color::black};
    if (!has_piece_at(b, make_square(4, 0), wk)) {
        b.castling.white_kingside = b.castling.white_queenside = false;
    }
    if (!has_piece_at(b, make_square(7, 0), wr)) {
        b.castling.white_kingside = false;
    }
    if (!has_piece_at(b, make_square(0, 0), wr)) {
        b.castling.white_queenside = false;
    }
    if (!has_piece_at(b, make_square(4, 7), bk)) {
        b.castling.black_kingside = b.castling.black_queenside = false;
    }
    if (!has_piece_at(b, make_square(7, 7), br)) {
        b.castling.black_kingside = false;
    }
    if (!has_piece_at(b, make_square(0, 7), br)) {
        b.castling.black_queenside = false;
    }
}

}  // namespace

BoardState parse_fen(const std::string& text) {
    std::istringstream in(text);
    std::string placement, side, castling, en_passant, halfmove, fullmove;
    if (!(in >> placement >> side >> castling >> en_passant >> halfmove >> fullmove)) {
        throw ParseError("FEN must have six whitespace-separated fields: \"" + text + "\"");
    }
    std::string extra;
    if (in >> extra) {
        throw ParseError("FEN has trailing fields: \"" + text + "\"");
    }

    BoardState board;

    int rank = 7;
    int file = 0;
    for (char c : placement) {
        if (c == '/') {
            if (file != 8) {
                throw ParseError("FEN rank has wrong length before '/'");
            }
            file = 0;
            --rank;
            if (rank < 0) {
                throw ParseError("FEN has more than eight ranks");
            }
        } else if (c >= '1' && c <= '8') {
            file += c - '0';
            if (file > 8) {
                throw ParseError("FEN rank expands past eight squares");
            }
        } else {
            const auto piece = piece_from_char(c);
            if (!piece) {
                throw ParseError(std::string("illegal piece letter '") + c + "' in FEN");
            }
            if (file > 7) {
                throw ParseError("FEN rank expands past eight squares");
            }
            board.at(make_square(file, rank)) = *piece;
            ++file;
        }
    }
    if (rank != 0 || file != 8) {
        throw ParseError("FEN placement does not cover eight ranks of eight squares");
    }

    if (side == "w") {
        board.side_to_move = Color::white;
    } else if (side == "b") {
        board.side_to_move = Color::black;
    } else {
        throw ParseError("FEN side-to-move must be 'w' or 'b'");
    }

    if (castling != "-") {
        for (char c : castling) {
            bool* flag = nullptr;
            switch (c) {
                case 'K': flag = &board.castling.white_kingside; break;
                case 'Q': flag = &board.castling.white_queenside; break;
                case 'k': flag = &board.castling.black_kingside; break;
                case 'q': flag = &board.castling.black_queenside; break;
                default: throw ParseError(std::string("bad castling flag '") + c + "'");
            }
            if (*flag) {
                throw ParseError("duplicate castling flag in FEN");
            }
            *flag = true;
        }
    }

    if (en_passant != "-") {
        const auto sq = parse_square(en_passant);
        if (!sq) {
            throw ParseError("bad en-passant square \"" + en_passant + "\"");
        }
        if (rank_of(*sq) != 2 && rank_of(*sq) != 5) {
            throw ParseError("en-passant target must be on rank 3 or rank 6");
        }
        board.en_passant_target = *sq;
    }

    try {
        board.halfmove_clock = std::stoi(halfmove);
        board.fullmove_number = std::stoi(fullmove);
    } catch (const std::exception&) {
        throw ParseError("FEN clock fields must be integers");
    }
    if (board.halfmove_clock < 0) {
        throw ParseError("halfmove clock must be non-negative");
    }
    if (board.fullmove_number < 1) {
        throw ParseError("fullmove number must be positive");
    }

    int white_kings = 0;
    int black_kings = 0;
    for (const auto& p : board.squares) {
        if (p && p->kind == PieceKind::king) {
            (p->color == Color::white ? white_kings : black_kings)++;
        }
    }
    if (white_kings != 1 || black_kings != 1) {
        throw ParseError("position must have exactly one king per color");
    }

    sanitize_castling(board);
    return board;
}

std::string serialize_fen(const BoardState& board) {
    std::string out;
    for (int rank = 7; rank >= 0; --rank) {
        int empties = 0;
        for (int file = 0; file < 8; ++file) {
            const auto& p = board.at(make_square(file, rank));
            if (!p) {
                ++empties;
                continue;
            }
            if (empties > 0) {
                out += static_cast<char>('0' + empties);
                empties = 0;
            }
            out += piece_char(*p);
        }
        if (empties > 0) {
            out += static_cast<char>('0' + empties);
        }
        if (rank > 0) {
            out += '/';
        }
    }

    out += board.side_to_move == Color::white ? " w " : " b ";

    if (board.castling.any()) {
        if (board.castling.white_kingside) out += 'K';
        if (board.castling.white_queenside) out += 'Q';
        if (board.castling.black_kingside) out += 'k';
        if (board.castling.black_queenside) out += 'q';
    } else {
        out += '-';
    }

    out += ' ';
    out += board.en_passant_target ? square_name(*board.en_passant_target) : "-";
    out += ' ';
    out += std::to_string(board.halfmove_clock);
    out += ' ';
    out += std::to_string(board.fullmove_number);
    return out;
}

std::string canonical_fen(const std::string& text) {
    return serialize_fen(parse_fen(text));
}

}  // namespace chesslm::chess
