#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chesslm/engine.hpp"
#include "chesslm/model.hpp"
#include "chesslm/prompt.hpp"

namespace chesslm::eval {

// Ordered strictly: best implies legal implies valid SAN.
enum class MoveCategory { malformed, valid_san_illegal, legal_not_best, best };

struct MoveJudgment {
    std::string raw_output;
    MoveCategory category = MoveCategory::malformed;
};

// Grammar-only SAN shape check ("could have been legal on any board").
bool is_san_shaped(const std::string& text);

// malformed if not SAN-shaped; valid_san_illegal if shaped but not legal
// here; legal_not_best if legal but not the engine move; best otherwise.
// '+'/'#' suffixes are ignored when matching.
MoveJudgment judge_move(const std::string& output, const chess::BoardState& board,
                        const std::string& engine_best);

enum class EvalMode { teacher_forced, autoregressive };

std::string eval_mode_name(EvalMode mode);

struct EvalReport {
    int n_samples = 0;
    double valid_rate = 0.0;
    double legal_rate = 0.0;
    double best_rate = 0.0;
    EvalMode mode = EvalMode::teacher_forced;
};

// One benchmark position in both prompt forms. `forced` is the full sample
// with the target span masked; `prompt_ids` is the inference prompt that
// stops after the best-move cue.
struct EvalSample {
    std::vector<int> prompt_ids;
    text::TokenSequence forced;
    std::string fen;
    std::string engine_best;
    bool single_token_target = false;
};

EvalSample make_fen_eval_sample(const engine::AnnotatedPosition& record,
                                const prompt::PromptTemplate& tmpl,
                                const text::Vocabulary& vocab);

// PGN pathway: the prompt is the movetext prefix up to and including the
// move-number cue for the side to move; the target is the annotated best
// move for the reached position.
EvalSample make_pgn_eval_sample(const std::vector<std::string>& prefix_moves,
                                const engine::AnnotatedPosition& record,
                                const text::Vocabulary& vocab);

// Scores every sample. teacher_forced decodes argmax at the masked span
// conditioned on ground truth; autoregressive decodes greedily from the
// inference prompt, trimming at the first whitespace or end-of-text.
EvalReport evaluate(const nn::Model& model, const std::vector<EvalSample>& samples,
                    const text::Vocabulary& vocab, EvalMode mode, int n_threads = 0);

struct ExposureBiasResult {
    EvalReport teacher_forced;
    EvalReport autoregressive;
    double valid_delta = 0.0;  // teacher_forced - autoregressive
    double legal_delta = 0.0;
    double best_delta = 0.0;
};

ExposureBiasResult exposure_bias_delta(const nn::Model& model,
                                       const std::vector<EvalSample>& samples,
                                       const text::Vocabulary& vocab, int n_threads = 0);

// Mean per-sample masked negative log likelihood: the FEN representation
// masks only the best-move span (the per-position CE), the PGN
// representation masks every move token (the per-game double sum).
double mean_ce(const nn::Model& model, const std::vector<text::TokenSequence>& samples,
               int n_threads = 0);

// Count histogram of |legal_moves| per position; invalid FENs are skipped
// with a diagnostic.
std::map<int, int> legal_move_histogram(const std::vector<std::string>& fens,
                                        std::vector<std::string>* diagnostics = nullptr);

std::string histogram_to_csv(const std::map<int, int>& histogram);
std::string reports_to_csv(const std::vector<EvalReport>& reports);
std::string report_table(const std::vector<EvalReport>& reports);

}  // namespace chesslm::eval
