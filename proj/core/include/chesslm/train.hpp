#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chesslm/model.hpp"
#include "chesslm/prompt.hpp"
#include "chesslm/tokenizer.hpp"

namespace chesslm::train {

enum class ClipMode { element, norm };

struct TrainConfig {
    double learning_rate = 8e-5;
    double min_lr = 5e-6;
    int warmup_iters = 2000;
    int lr_decay_iters = 200000;
    int max_iters = 5000;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    double weight_decay = 0.1;
    double grad_clip = 1.0;
    ClipMode clip_mode = ClipMode::element;
    int batch_size = 16;
    int grad_accum_steps = 1;
    uint64_t seed = 0;
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    int n_threads = 0;            // 0 = hardware concurrency

    void validate() const;
};

// key = value config file; '#' starts a comment. Unknown keys are rejected.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_text(const TrainConfig& cfg);

// Linear ramp 0 -> learning_rate over warmup_iters, cosine decay to min_lr
// at lr_decay_iters, min_lr afterwards.
double lr_schedule(int64_t step, const TrainConfig& cfg);

// Element-wise clamp to [-limit, +limit] (norm mode rescales by the global
// L2 norm instead). Throws NumericError on non-finite gradients.
void clip_gradients(std::vector<double>& grads, double limit,
                    ClipMode mode = ClipMode::element);

// Adam with decoupled weight decay over the flat parameter buffer. Weight
// decay applies only to rank >= 2 tensors (matrices and embeddings).
class AdamW {
public:
    AdamW(const nn::ParamLayout& layout, const TrainConfig& cfg);

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr);
    int64_t steps_taken() const { return t_; }

private:
    const TrainConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::vector<uint8_t> decay_;  // per-parameter weight-decay flag
    int64_t t_ = 0;
};

struct TracePoint {
    int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;  // per-masked-token mean over the effective batch
};

std::string trace_to_csv(const std::vector<TracePoint>& trace);

// Pull-based sample source; implementations must be deterministic given
// their seed.
class SampleStream {
public:
    virtual ~SampleStream() = default;
    virtual const text::TokenSequence& next() = 0;
};

// In-memory dataset cycled in a seeded shuffle order, reshuffled per epoch.
class ShuffledStream : public SampleStream {
public:
    ShuffledStream(std::vector<text::TokenSequence> samples, uint64_t seed);
    const text::TokenSequence& next() override;

private:
    void reshuffle();

    std::vector<text::TokenSequence> samples_;
    std::vector<size_t> order_;
    size_t cursor_ = 0;
    Rng rng_;
};

struct TrainResult {
    std::vector<TracePoint> trace;
    int64_t steps = 0;
};

using CheckpointHook = std::function<void(const nn::Model&, int64_t step)>;

// Optimizes the model in place: grad_accum_steps micro-batches of
// batch_size samples per update, per-masked-token mean objective, schedule,
// clipping, AdamW. Deterministic given cfg.seed regardless of n_threads.
TrainResult train(nn::Model& model, SampleStream& stream, const TrainConfig& cfg,
                  const CheckpointHook& on_checkpoint = nullptr);

// Loss (per-token mean) and flat parameter gradient for one batch of
// samples; reduction order is fixed by sample index.
double batch_loss_and_grad(const nn::Model& model,
                           const std::vector<const text::TokenSequence*>& batch,
                           std::vector<double>& grad, int n_threads,
                           Rng* dropout_rng = nullptr);

// Character-tokenized PGN movetext with next-token loss over every content
// position (the whole-game language-model objective). Throws on illegal
// games. Game text longer than target_len - 2 characters is truncated at a
// move boundary before padding.
text::TokenSequence make_pgn_sample(const std::vector<std::string>& san_moves,
                                    const text::Vocabulary& vocab, int target_len);

// Rendered prompt with the loss mask covering exactly the best-move span.
// The FEN is flattened before rendering. Throws when the best move is not
// legal or the rendered prompt overflows target_len; target_len 0 skips
// padding (per-sample evaluation form).
text::TokenSequence make_fen_sample(const std::string& fen,
                                    const std::vector<std::string>& legal_moves,
                                    const std::string& best_move,
                                    const prompt::PromptTemplate& tmpl,
                                    const text::Vocabulary& vocab, int target_len);

// The inference-form prompt (no best move), unpadded.
std::vector<int> make_fen_prompt_ids(const std::string& fen,
                                     const std::vector<std::string>& legal_moves,
                                     const prompt::PromptTemplate& tmpl,
                                     const text::Vocabulary& vocab);

}  // namespace chesslm::train
