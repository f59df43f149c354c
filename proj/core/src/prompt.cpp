#include "chesslm/prompt.hpp"

#include <algorithm>
#include <sstream>

#include "chesslm/util.hpp"

namespace chesslm::prompt {

namespace {

constexpr const char* kFenSlot = "{FEN}";
constexpr const char* kLegalSlot = "{LEGAL_MOVES}";
constexpr const char* kBestSlot = "{BEST_MOVE}";

const char* kTemplateTexts[6] = {
    // 1: the selected training prompt.
    "<|begin_of_text|> You are a chess grandmaster. This is the board in FEN "
    "notation: {FEN}. The legal moves are: {LEGAL_MOVES}. Which of these is the "
    "best move? Best move: {BEST_MOVE} <|end_of_text|>",
    // 2
    "<|begin_of_text|> [White 'Magnus Carlsen'] [Black 'Stockfish'] Board "
    "position: {FEN}, Legal Moves: {LEGAL_MOVES}, Best Move: {BEST_MOVE} "
    "<|end_of_text|>",
    // 3: the doubled period and double space are kept as-is.
    "<|begin_of_text|> You are a chess grandmaster. This is the board in fen "
    "(Forsyth-Edwards notation). It is your move: {FEN}. Please select the best "
    "move from this list: {LEGAL_MOVES}.. Please ONLY PLAY MOVES LISTED HERE. "
    "ANY move not in here is illegal. Best move:  {BEST_MOVE} <|end_of_text|>",
    // 4
    "<|begin_of_text|> You are analyzing a competitive chess game. The current "
    "board position is represented in FEN notation: {FEN}. The legal moves "
    "available are: {LEGAL_MOVES}.. Based on the position, decide which move is "
    "the best. Best move: {BEST_MOVE} <|end_of_text|>",
    // 5
    "<|begin_of_text|> [FEN '{FEN}'] Legal Moves: {LEGAL_MOVES}. Based on the "
    "current board, determine the best move from the provided options. Best "
    "Move: {BEST_MOVE} <|end_of_text|>",
    // 6
    "<|begin_of_text|> As a world-class chess engine, your task is to analyze "
    "the following board position and select the best move. Board in FEN: "
    "{FEN}. Legal moves available: {LEGAL_MOVES}. Best move: {BEST_MOVE} "
    "<|end_of_text|>",
};

constexpr int kDefaultFixedLength = 512;

void validate_template(const PromptTemplate& tmpl) {
    int best_slots = 0;
    size_t best_index = 0;
    size_t last_content = 0;
    for (size_t i = 0; i < tmpl.segments.size(); ++i) {
        const auto& seg = tmpl.segments[i];
        if (seg.kind == SlotKind::best_move) {
            ++best_slots;
            best_index = i;
        }
        if (seg.kind != SlotKind::literal) {
            last_content = i;
        }
    }
    if (best_slots != 1) {
        throw ParseError("template must contain exactly one {BEST_MOVE} slot");
    }
    if (best_index != last_content) {
        throw ParseError("{BEST_MOVE} must be the final content slot");
    }
}

}  // namespace

PromptTemplate template_from_text_line(int id, const std::string& text, int fixed_length) {
    PromptTemplate tmpl;
    tmpl.template_id = id;
    tmpl.fixed_length = fixed_length;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find('{', pos);
        if (next == std::string::npos) {
            tmpl.segments.push_back({SlotKind::literal, text.substr(pos)});
            break;
        }
        if (next > pos) {
            tmpl.segments.push_back({SlotKind::literal, text.substr(pos, next - pos)});
        }
        if (text.compare(next, std::string(kFenSlot).size(), kFenSlot) == 0) {
            tmpl.segments.push_back({SlotKind::fen, ""});
            pos = next + std::string(kFenSlot).size();
        } else if (text.compare(next, std::string(kLegalSlot).size(), kLegalSlot) == 0) {
            tmpl.segments.push_back({SlotKind::legal_moves, ""});
            pos = next + std::string(kLegalSlot).size();
        } else if (text.compare(next, std::string(kBestSlot).size(), kBestSlot) == 0) {
            tmpl.segments.push_back({SlotKind::best_move, ""});
            pos = next + std::string(kBestSlot).size();
        } else {
            throw ParseError("unknown slot marker in template at position " +
                             std::to_string(next));
        }
    }
    validate_template(tmpl);
    return tmpl;
}

const std::vector<PromptTemplate>& builtin_templates() {
    static const std::vector<PromptTemplate> templates = [] {
        std::vector<PromptTemplate> out;
        for (int i = 0; i < 6; ++i) {
            out.push_back(template_from_text_line(i + 1, kTemplateTexts[i],
                                                  kDefaultFixedLength));
        }
        return out;
    }();
    return templates;
}

const PromptTemplate& builtin_template(int id) {
    for (const auto& t : builtin_templates()) {
        if (t.template_id == id) {
            return t;
        }
    }
    throw ParseError("no builtin template with id " + std::to_string(id));
}

std::vector<PromptTemplate> parse_templates(const std::string& text) {
    std::vector<PromptTemplate> out;
    std::istringstream in(text);
    std::string line;
    std::optional<int> pending_id;
    int pending_len = kDefaultFixedLength;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        if (!pending_id) {
            std::istringstream header(stripped);
            std::string kw_template, kw_len;
            int id = 0;
            int len = 0;
            if (!(header >> kw_template >> id >> kw_len >> len) ||
                kw_template != "template" || kw_len != "fixed_length") {
                throw ParseError("bad template header line: " + stripped);
            }
            pending_id = id;
            pending_len = len;
        } else {
            out.push_back(template_from_text_line(*pending_id, line, pending_len));
            pending_id.reset();
        }
    }
    if (pending_id) {
        throw ParseError("template header without a text line");
    }
    if (out.empty()) {
        throw ParseError("no templates in file");
    }
    return out;
}

std::string templates_to_text(const std::vector<PromptTemplate>& templates) {
    std::string out;
    for (const auto& t : templates) {
        out += "template " + std::to_string(t.template_id) + " fixed_length " +
               std::to_string(t.fixed_length) + "\n";
        for (const auto& seg : t.segments) {
            switch (seg.kind) {
                case SlotKind::literal: out += seg.text; break;
                case SlotKind::fen: out += kFenSlot; break;
                case SlotKind::legal_moves: out += kLegalSlot; break;
                case SlotKind::best_move: out += kBestSlot; break;
            }
        }
        out += '\n';
    }
    return out;
}

std::vector<PromptTemplate> load_templates(const std::string& path) {
    return parse_templates(read_file(path));
}

std::string render_prompt(const PromptTemplate& tmpl, const std::string& fen,
                          const std::vector<std::string>& legal_moves,
                          const std::optional<std::string>& best_move) {
    if (legal_moves.empty()) {
        throw ParseError("cannot render a prompt with no legal moves");
    }
    if (best_move &&
        std::find(legal_moves.begin(), legal_moves.end(), *best_move) == legal_moves.end()) {
        throw ParseError("best move \"" + *best_move + "\" is not in the legal move list");
    }
    std::string joined;
    for (size_t i = 0; i < legal_moves.size(); ++i) {
        if (i > 0) {
            joined += ", ";
        }
        joined += legal_moves[i];
    }

    std::string out;
    for (const auto& seg : tmpl.segments) {
        switch (seg.kind) {
            case SlotKind::literal:
                out += seg.text;
                break;
            case SlotKind::fen:
                out += fen;
                break;
            case SlotKind::legal_moves:
                out += joined;
                break;
            case SlotKind::best_move:
                if (!best_move) {
                    return out;  // inference form ends right after the cue
                }
                out += *best_move;
                break;
        }
    }
    return out;
}

std::vector<uint8_t> build_loss_mask(const std::vector<int>& tokens,
                                     const std::vector<int>& span) {
    if (span.empty() || span.size() > tokens.size()) {
        throw ParseError("best-move span not found in token list");
    }
    for (size_t start = tokens.size() - span.size() + 1; start-- > 0;) {
        if (std::equal(span.begin(), span.end(), tokens.begin() + static_cast<long>(start))) {
            std::vector<uint8_t> w(tokens.size(), 0);
            std::fill(w.begin() + static_cast<long>(start),
                      w.begin() + static_cast<long>(start + span.size()), 1);
            return w;
        }
    }
    throw ParseError("best-move span not found in token list");
}

}  // namespace chesslm::prompt
