#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace chesslm::chess {

enum class Color : uint8_t { white, black };

constexpr Color opposite(Color c) {
    return c == Color::white ? Color::black : Color::white;
}

enum class PieceKind : uint8_t { pawn, knight, bishop, rook, queen, king };

struct Piece {
    PieceKind kind;
    Color color;

    bool operator==(const Piece&) const = default;
};

// Squares are 0..63, a1 = 0, b1 = 1, ..., h8 = 63.
using Square = int;

constexpr Square make_square(int file, int rank) { return rank * 8 + file; }
constexpr int file_of(Square s) { return s & 7; }
constexpr int rank_of(Square s) { return s >> 3; }

inline std::string square_name(Square s) {
    return {static_cast<char>('a' + file_of(s)), static_cast<char>('1' + rank_of(s))};
}

// Parses "e4" style coordinates; returns nullopt on malformed input.
std::optional<Square> parse_square(std::string_view text);

char piece_char(Piece p);
std::optional<Piece> piece_from_char(char c);

struct CastlingRights {
    bool white_kingside = false;
    bool white_queenside = false;
    bool black_kingside = false;
    bool black_queenside = false;

    bool any() const {
        return white_kingside || white_queenside || black_kingside || black_queenside;
    }
    bool operator==(const CastlingRights&) const = default;
};

// One chess position: piece placement plus the five FEN side fields.
// Immutable in practice; operations return fresh copies.
struct BoardState {
    std::array<std::optional<Piece>, 64> squares{};
    Color side_to_move = Color::white;
    CastlingRights castling;
    std::optional<Square> en_passant_target;
    int halfmove_clock = 0;
    int fullmove_number = 1;

    const std::optional<Piece>& at(Square s) const { return squares[static_cast<size_t>(s)]; }
    std::optional<Piece>& at(Square s) { return squares[static_cast<size_t>(s)]; }

    Square king_square(Color c) const;

    bool operator==(const BoardState&) const = default;
};

inline constexpr const char* kStartFen =
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

BoardState start_position();

// Parses a six-field FEN string. Castling rights that do not match the
// king/rook home squares are dropped so the result always satisfies the
// BoardState invariants. Throws ParseError on malformed input or an
// impossible state (missing or duplicated king, bad en-passant rank).
BoardState parse_fen(const std::string& text);

// Canonical six-field FEN: maximal digit runs, "-" for empty castling and
// en-passant fields, single spaces.
std::string serialize_fen(const BoardState& board);

// serialize_fen(parse_fen(text)); the canonical spelling of any accepted FEN.
std::string canonical_fen(const std::string& text);

}  // namespace chesslm::chess
