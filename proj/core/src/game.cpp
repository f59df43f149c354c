#include "chesslm/game.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "chesslm/util.hpp"

namespace chesslm::chess {

namespace {

// True when the side to move has a legal en-passant capture.
bool en_passant_capturable(const BoardState& board) {
    if (!board.en_passant_target) {
        return false;
    }
    const Square target = *board.en_passant_target;
    const Color us = board.side_to_move;
    const int from_rank = us == Color::white ? 4 : 3;
    for (int df : {-1, 1}) {
        const int f = file_of(target) + df;
        if (f < 0 || f > 7) {
            continue;
        }
        const Square from = make_square(f, from_rank);
        const auto& p = board.at(from);
        if (!p || p->kind != PieceKind::pawn || p->color != us) {
            continue;
        }
        Move m;
        m.from = from;
        m.to = target;
        m.is_capture = true;
        m.is_en_passant = true;
        const BoardState next = apply_move_unchecked(board, m);
        if (!in_check(next, us)) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::string position_key(const BoardState& board) {
    std::string fen = serialize_fen(board);
    // First four FEN fields, with the en-passant field blanked when no
    // en-passant capture is actually available.
    auto fields = split(fen, ' ');
    if (!en_passant_capturable(board)) {
        fields[3] = "-";
    }
    return fields[0] + ' ' + fields[1] + ' ' + fields[2] + ' ' + fields[3];
}

GameHistory::GameHistory() : GameHistory(start_position()) {}

GameHistory::GameHistory(BoardState start)
    : start_(start), current_(std::move(start)) {
    keys_.push_back(position_key(current_));
}

void GameHistory::push(const MoveRecord& move) {
    current_ = apply_move(current_, move);
    moves_.push_back(move);
    keys_.push_back(position_key(current_));
}

void GameHistory::push_san(const std::string& san) {
    push(parse_san(current_, san));
}

int repetition_count(const GameHistory& history) {
    const std::string& key = history.position_keys().back();
    return static_cast<int>(
        std::count(history.position_keys().begin(), history.position_keys().end(), key));
}

BoardState pgn_to_fen(const std::vector<std::string>& san_moves) {
    BoardState board = start_position();
    for (size_t i = 0; i < san_moves.size(); ++i) {
        try {
            board = apply_move(board, parse_san(board, san_moves[i]));
        } catch (const IllegalMoveError&) {
            throw IllegalMoveError("illegal move at index " + std::to_string(i) + ": " +
                                   san_moves[i]);
        }
    }
    return board;
}

std::vector<std::string> parse_pgn_movetext(const std::string& text) {
    std::vector<std::string> moves;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '[') {
            const size_t end = text.find(']', i);
            if (end == std::string::npos) {
                throw ParseError("unterminated PGN header");
            }
            i = end + 1;
            continue;
        }
        if (c == '{') {
            const size_t end = text.find('}', i);
            if (end == std::string::npos) {
                throw ParseError("unterminated PGN comment");
            }
            i = end + 1;
            continue;
        }
        if (c == '(') {
            throw ParseError("PGN variations are not supported");
        }
        size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(text[j])) &&
               text[j] != '{' && text[j] != '[' && text[j] != '(') {
            ++j;
        }
        std::string token = text.substr(i, j - i);
        i = j;

        if (token.empty() || token[0] == '$') {
            continue;
        }
        if (token == "1-0" || token == "0-1" || token == "1/2-1/2" || token == "*") {
            continue;
        }
        // Strip a leading move number: "12." or "12...".
        size_t k = 0;
        while (k < token.size() && std::isdigit(static_cast<unsigned char>(token[k]))) {
            ++k;
        }
        if (k > 0 && k < token.size() && token[k] == '.') {
            while (k < token.size() && token[k] == '.') {
                ++k;
            }
            token = token.substr(k);
            if (token.empty()) {
                continue;
            }
        } else if (k == token.size()) {
            // Bare number, e.g. a split "12." with the dot lost to wrapping.
            continue;
        }
        moves.push_back(token);
    }
    return moves;
}

std::string outcome_token(GameOutcome outcome) {
    switch (outcome) {
        case GameOutcome::white_win: return "1-0";
        case GameOutcome::black_win: return "0-1";
        case GameOutcome::draw: return "1/2-1/2";
    }
    return "*";
}

std::string render_movetext(const GameRecord& game) {
    std::ostringstream out;
    std::string line;
    auto emit = [&](const std::string& token) {
        if (line.empty()) {
            line = token;
        } else if (line.size() + 1 + token.size() > 80) {
            out << line << '\n';
            line = token;
        } else {
            line += ' ';
            line += token;
        }
    };
    for (size_t i = 0; i < game.moves.size(); ++i) {
        if (i % 2 == 0) {
            emit(std::to_string(i / 2 + 1) + ".");
        }
        emit(game.moves[i]);
    }
    emit(outcome_token(game.result));
    if (!line.empty()) {
        out << line << '\n';
    }
    return out.str();
}

}  // namespace chesslm::chess
