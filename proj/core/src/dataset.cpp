#include "chesslm/dataset.hpp"

#include <sstream>

#include "chesslm/movegen.hpp"
#include "chesslm/util.hpp"

namespace chesslm::data {

std::string annotated_to_tsv(const std::vector<engine::AnnotatedPosition>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.fen;
        out += '\t';
        for (size_t i = 0; i < r.legal_moves.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += r.legal_moves[i];
        }
        out += '\t';
        out += r.best_move;
        out += '\n';
    }
    return out;
}

std::vector<engine::AnnotatedPosition> parse_annotated_tsv(const std::string& text) {
    std::vector<engine::AnnotatedPosition> records;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 3) {
            throw ParseError("dataset line " + std::to_string(line_no) +
                             " must have three tab-separated fields");
        }
        engine::AnnotatedPosition record;
        record.fen = fields[0];
        for (const auto& m : split(fields[1], ',')) {
            record.legal_moves.push_back(trim(m));
        }
        record.best_move = trim(fields[2]);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<engine::AnnotatedPosition> load_annotated_tsv(const std::string& path) {
    return parse_annotated_tsv(read_file(path));
}

std::string games_to_corpus(const std::vector<chess::GameRecord>& games) {
    std::string out;
    for (const auto& game : games) {
        out += chess::render_movetext(game);
        out += '\n';
    }
    return out;
}

std::vector<std::vector<std::string>> parse_pgn_corpus(const std::string& text) {
    std::vector<std::vector<std::string>> games;
    std::string block;
    std::istringstream in(text);
    std::string line;
    auto flush = [&] {
        if (!trim(block).empty()) {
            const auto moves = chess::parse_pgn_movetext(block);
            if (!moves.empty()) {
                games.push_back(moves);
            }
        }
        block.clear();
    };
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            flush();
        } else {
            block += line;
            block += '\n';
        }
    }
    flush();
    return games;
}

std::vector<std::vector<std::string>> load_pgn_corpus(const std::string& path) {
    return parse_pgn_corpus(read_file(path));
}

std::vector<std::vector<std::string>> parse_opening_book(const std::string& text) {
    std::vector<std::vector<std::string>> book;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (!stripped.empty() && stripped[0] == '#') {
            continue;
        }
        book.push_back(chess::parse_pgn_movetext(stripped));
    }
    if (book.empty()) {
        book.push_back({});
    }
    return book;
}

std::vector<std::vector<std::string>> load_opening_book(const std::string& path) {
    return parse_opening_book(read_file(path));
}

std::vector<std::string> game_positions(const std::vector<std::string>& san_moves,
                                        bool white_to_move_only) {
    std::vector<std::string> fens;
    chess::BoardState board = chess::start_position();
    auto maybe_emit = [&](const chess::BoardState& b) {
        if (white_to_move_only && b.side_to_move != chess::Color::white) {
            return;
        }
        if (chess::generate_legal(b).empty()) {
            return;  // terminal
        }
        fens.push_back(chess::serialize_fen(b));
    };
    maybe_emit(board);
    for (const auto& san : san_moves) {
        board = chess::apply_move(board, chess::parse_san(board, san));
        maybe_emit(board);
    }
    return fens;
}

std::string movetext_for_training(const std::vector<std::string>& san_moves) {
    std::string body;
    for (size_t i = 0; i < san_moves.size(); ++i) {
        if (!body.empty()) {
            body += ' ';
        }
        if (i % 2 == 0) {
            body += std::to_string(i / 2 + 1) + ". ";
        }
        body += san_moves[i];
    }
    return body;
}

}  // namespace chesslm::data
