#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chesslm/tokenizer.hpp"

namespace chesslm::prompt {

enum class SlotKind { literal, fen, legal_moves, best_move };

struct Segment {
    SlotKind kind = SlotKind::literal;
    std::string text;  // literal segments only
};

// One prompt template: ordered literal/slot segments with exactly one
// BEST_MOVE slot as the final content slot before end-of-text.
struct PromptTemplate {
    int template_id = 0;
    std::vector<Segment> segments;
    int fixed_length = 0;
};

// The six shipped templates (ids 1..6); template 1 is the training default.
const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate& builtin_template(int id);

// Data-file round trip so ablations can add templates without code changes.
// Format per template: a header line "template <id> fixed_length <n>" and a
// text line using the {FEN}, {LEGAL_MOVES}, {BEST_MOVE} slot markers.
std::vector<PromptTemplate> parse_templates(const std::string& text);
std::string templates_to_text(const std::vector<PromptTemplate>& templates);
std::vector<PromptTemplate> load_templates(const std::string& path);

PromptTemplate template_from_text_line(int id, const std::string& text, int fixed_length);

// Fills the slots. The legal-move list renders comma-separated in the order
// given (chess-core emits it SAN-sorted). With best_move absent the text
// ends immediately after the cue preceding the BEST_MOVE slot, which is the
// inference form. Throws ParseError when best_move is not in legal_moves.
std::string render_prompt(const PromptTemplate& tmpl, const std::string& fen,
                          const std::vector<std::string>& legal_moves,
                          const std::optional<std::string>& best_move);

// Binary mask over token positions: 1 exactly on the last occurrence of
// `span` in `tokens` (the best-move slot is the final content span, so the
// search runs backward). Throws ParseError when the span is absent.
std::vector<uint8_t> build_loss_mask(const std::vector<int>& tokens,
                                     const std::vector<int>& span);

}  // namespace chesslm::prompt
