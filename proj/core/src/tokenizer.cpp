#include "chesslm/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "chesslm/util.hpp"

namespace chesslm::text {

namespace {

bool is_piece_letter(char c) {
    switch (c) {
        case 'p': case 'n': case 'b': case 'r': case 'q': case 'k':
        case 'P': case 'N': case 'B': case 'R': case 'Q': case 'K':
            return true;
        default:
            return false;
    }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 3 || symbols_[0] != kBeginOfText || symbols_[1] != kEndOfText ||
        symbols_[2] != kPad) {
        throw ParseError("vocabulary must start with the three reserved specials");
    }
    for (size_t i = 0; i < symbols_.size(); ++i) {
        if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
            throw ParseError("duplicate vocabulary symbol: " + symbols_[i]);
        }
    }
}

const std::string& Vocabulary::symbol(int id) const {
    if (id < 0 || id >= size()) {
        throw ParseError("token id out of range: " + std::to_string(id));
    }
    return symbols_[static_cast<size_t>(id)];
}

int Vocabulary::id_of(const std::string& symbol) const {
    const auto it = ids_.find(symbol);
    return it == ids_.end() ? -1 : it->second;
}

int Vocabulary::id_of_char(char c) const {
    return id_of(std::string(1, c));
}

std::string Vocabulary::to_text() const {
    std::string out;
    for (const auto& s : symbols_) {
        out += s;
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
    std::vector<std::string> symbols;
    size_t start = 0;
    while (start < text.size()) {
        const size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            throw ParseError("vocabulary file must end with a newline");
        }
        symbols.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return Vocabulary(std::move(symbols));
}

void Vocabulary::save(const std::string& path) const {
    write_file(path, to_text());
}

Vocabulary Vocabulary::load(const std::string& path) {
    return from_text(read_file(path));
}

std::string Vocabulary::content_hash() const {
    return fnv1a64_hex(to_text());
}

Vocabulary build_vocab(const std::vector<std::string>& corpus) {
    if (corpus.empty()) {
        throw ParseError("cannot build a vocabulary from an empty sample");
    }
    std::set<char> chars;
    for (const auto& s : corpus) {
        for (char c : s) {
            chars.insert(c);
        }
    }
    std::vector<std::string> symbols{kBeginOfText, kEndOfText, kPad};
    for (char c : chars) {
        symbols.emplace_back(1, c);
    }
    return Vocabulary(std::move(symbols));
}

Vocabulary build_move_vocab(const std::vector<std::string>& sans) {
    if (sans.empty()) {
        throw ParseError("cannot build a vocabulary from an empty sample");
    }
    std::set<std::string> unique(sans.begin(), sans.end());
    std::vector<std::string> symbols{kBeginOfText, kEndOfText, kPad};
    symbols.insert(symbols.end(), unique.begin(), unique.end());
    return Vocabulary(std::move(symbols));
}

int TokenSequence::sum_w() const {
    int total = 0;
    for (uint8_t v : w) {
        total += v;
    }
    return total;
}

std::vector<int> TokenSequence::masked_targets() const {
    std::vector<int> out;
    for (size_t t = 0; t < w.size(); ++t) {
        if (w[t]) {
            out.push_back(ids.at(t + 1));
        }
    }
    return out;
}

std::string flatten_fen(const std::string& fen) {
    const size_t space = fen.find(' ');
    const std::string placement = space == std::string::npos ? fen : fen.substr(0, space);
    std::string out;
    int rank_len = 0;
    int ranks = 1;
    for (char c : placement) {
        if (c == '/') {
            if (rank_len != 8) {
                throw ParseError("FEN rank does not expand to eight squares");
            }
            out += '/';
            rank_len = 0;
            ++ranks;
        } else if (c >= '1' && c <= '8') {
            out.append(static_cast<size_t>(c - '0'), '.');
            rank_len += c - '0';
        } else if (is_piece_letter(c)) {
            out += c;
            ++rank_len;
        } else {
            throw ParseError(std::string("bad character in FEN placement: '") + c + "'");
        }
    }
    if (ranks != 8 || rank_len != 8) {
        throw ParseError("FEN placement does not hold eight ranks of eight squares");
    }
    if (space == std::string::npos) {
        return out;
    }
    return out + fen.substr(space);
}

std::string unflatten_fen(const std::string& flattened) {
    const size_t space = flattened.find(' ');
    const std::string placement =
        space == std::string::npos ? flattened : flattened.substr(0, space);
    if (placement.size() != 71) {
        throw ParseError("flattened placement must be 64 symbols plus 7 slashes");
    }
    std::string out;
    int rank_len = 0;
    int run = 0;
    auto flush = [&] {
        if (run > 0) {
            out += static_cast<char>('0' + run);
            run = 0;
        }
    };
    for (char c : placement) {
        if (c == '/') {
            if (rank_len != 8) {
                throw ParseError("flattened rank is not eight symbols long");
            }
            flush();
            out += '/';
            rank_len = 0;
        } else if (c == '.') {
            ++run;
            ++rank_len;
        } else if (is_piece_letter(c)) {
            flush();
            out += c;
            ++rank_len;
        } else {
            throw ParseError(std::string("bad character in flattened placement: '") + c + "'");
        }
    }
    if (rank_len != 8) {
        throw ParseError("flattened rank is not eight symbols long");
    }
    flush();
    if (space == std::string::npos) {
        return out;
    }
    return out + flattened.substr(space);
}

std::vector<int> char_tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        const int id = vocab.id_of_char(text[i]);
        if (id < 0) {
            throw ParseError(std::string("unknown character '") + text[i] +
                             "' at position " + std::to_string(i));
        }
        ids.push_back(id);
    }
    return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        out += vocab.symbol(id);
    }
    return out;
}

std::vector<int> tokenize_with_markers(const std::string& text, const Vocabulary& vocab) {
    static const std::pair<const char*, int> kMarkers[] = {
        {kBeginOfText, Vocabulary::kBeginId},
        {kEndOfText, Vocabulary::kEndId},
        {kPad, Vocabulary::kPadId},
    };
    std::vector<int> ids;
    size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (const auto& [marker, id] : kMarkers) {
            const std::string_view m(marker);
            if (text.compare(i, m.size(), m) == 0) {
                ids.push_back(id);
                i += m.size();
                matched = true;
                break;
            }
        }
        if (matched) {
            continue;
        }
        const int id = vocab.id_of_char(text[i]);
        if (id < 0) {
            throw ParseError(std::string("unknown character '") + text[i] +
                             "' at position " + std::to_string(i));
        }
        ids.push_back(id);
        ++i;
    }
    return ids;
}

TokenSequence pad_sequence(const TokenSequence& seq, int target_len) {
    if (seq.length() > target_len) {
        throw ParseError("sequence of length " + std::to_string(seq.length()) +
                         " overflows target length " + std::to_string(target_len));
    }
    TokenSequence out = seq;
    out.ids.resize(static_cast<size_t>(target_len), Vocabulary::kPadId);
    out.w.resize(static_cast<size_t>(target_len), 0);
    out.attention_pad_mask.resize(static_cast<size_t>(target_len), 0);
    return out;
}

}  // namespace chesslm::text
