#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chesslm/tokenizer.hpp"
#include "chesslm/util.hpp"

namespace chesslm::nn {

enum class AttentionMode { causal, bidirectional };

std::string attention_mode_name(AttentionMode mode);
AttentionMode attention_mode_from_name(const std::string& name);

struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int max_seq_len = 512;
    int vocab_size = 0;
    AttentionMode attention_mode = AttentionMode::causal;
    double dropout = 0.0;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
    std::string name;
    std::vector<int> shape;
    size_t offset = 0;
    size_t size = 0;
};

// Named flat layout of every parameter tensor; the same manifest is written
// into checkpoints.
class ParamLayout {
public:
    static ParamLayout for_config(const ModelConfig& cfg);

    const std::vector<TensorSpec>& specs() const { return specs_; }
    const TensorSpec& find(const std::string& name) const;
    size_t total_size() const { return total_; }

private:
    std::vector<TensorSpec> specs_;
    size_t total_ = 0;
};

// Scratch space for one sample's forward pass, retained for backward.
struct ForwardCache {
    int seq_len = 0;
    std::vector<int> ids;
    std::vector<uint8_t> pad_mask;
    std::vector<double> x0;                        // T x D after embeddings
    std::vector<std::vector<double>> ln1_xhat;     // per layer, T x D
    std::vector<std::vector<double>> ln1_rstd;     // per layer, T
    std::vector<std::vector<double>> qkv;          // per layer, T x 3D
    std::vector<std::vector<double>> attn_probs;   // per layer, H x T x T
    std::vector<std::vector<double>> attn_ctx;     // per layer, T x D
    std::vector<std::vector<double>> attn_drop;    // per layer, T x D keep-scale or empty
    std::vector<std::vector<double>> ff_drop;      // per layer, T x D keep-scale or empty
    std::vector<std::vector<double>> x_mid;        // per layer, T x D (after attn residual)
    std::vector<std::vector<double>> ln2_xhat;     // per layer, T x D
    std::vector<std::vector<double>> ln2_rstd;     // per layer, T
    std::vector<std::vector<double>> ff_pre;       // per layer, T x F (pre-GELU)
    std::vector<std::vector<double>> ff_act;       // per layer, T x F
    std::vector<std::vector<double>> x_out;        // per layer, T x D (layer output)
    std::vector<double> lnf_xhat;                  // T x D
    std::vector<double> lnf_rstd;                  // T
    std::vector<double> logits;                    // T x V
};

// Decoder-style transformer with a switchable causal/bidirectional mask.
// Parameters live in one flat double buffer addressed through the layout.
class Model {
public:
    explicit Model(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    void init_parameters(Rng& rng, double std_dev = 0.02);
    bool parameters_finite() const;

    double* tensor(const std::string& name);
    const double* tensor(const std::string& name) const;

    // Logits [T x vocab_size]. In causal mode row t depends on ids[0..t]
    // only; pad columns are excluded from attention in both modes. Throws on
    // over-long sequences or non-finite activations.
    std::vector<double> forward(const std::vector<int>& ids,
                                const std::vector<uint8_t>& pad_mask) const;

    // Forward keeping activations for backward. Residual-branch dropout is
    // applied only when a dropout rng is supplied and config dropout > 0;
    // evaluation paths never pass one.
    ForwardCache forward_cached(const std::vector<int>& ids,
                                const std::vector<uint8_t>& pad_mask,
                                Rng* dropout_rng = nullptr) const;

    // Accumulates parameter gradients for dL/dlogits into grad (flat, layout
    // order). grad must be zero-initialized by the caller or hold a running
    // accumulation.
    void backward(const ForwardCache& cache, const std::vector<double>& dlogits,
                  std::vector<double>& grad) const;

    // Autoregressive extension. temperature 0 decodes argmax (lowest id wins
    // ties); stops at stop_id, the token budget, or max_seq_len.
    std::vector<int> generate(const std::vector<int>& prompt_ids, double temperature,
                              int max_new_tokens, int stop_id, Rng& rng) const;

    // Argmax prediction at each masked position, conditioning on the ground
    // truth prefix (including earlier target tokens): prediction at position
    // t is scored against ids[t+1] under the sample's w convention.
    std::vector<int> teacher_forced_predictions(const text::TokenSequence& sample) const;

private:
    ModelConfig cfg_;
    ParamLayout layout_;
    std::vector<double> params_;
};

struct MaskedLoss {
    double loss_sum = 0.0;  // -sum_t w_t log p(target_t)
    int token_count = 0;    // sum of w

    double mean() const { return token_count > 0 ? loss_sum / token_count : 0.0; }
};

// Masked cross entropy over prediction positions: logits row t is scored
// against targets[t] wherever w[t] = 1; w[t] = 0 rows contribute exactly
// zero. Throws NumericError when the mask is empty.
MaskedLoss masked_ce_loss(const std::vector<double>& logits, const std::vector<int>& targets,
                          const std::vector<uint8_t>& w, int vocab_size);

// Gradient of the summed masked CE w.r.t. logits; rows with w[t] = 0 are
// exactly zero. scale multiplies the whole gradient (1/token_count gives the
// per-token mean objective).
std::vector<double> masked_ce_loss_backward(const std::vector<double>& logits,
                                            const std::vector<int>& targets,
                                            const std::vector<uint8_t>& w, int vocab_size,
                                            double scale);

// Next-token targets and mask for a sequence: targets[t] = ids[t+1].
std::vector<int> shifted_targets(const std::vector<int>& ids);

// Row-wise softmax of a [rows x cols] matrix (numerically stabilized).
std::vector<double> softmax_rows(const std::vector<double>& logits, int rows, int cols);

// Checkpoint: one-line JSON header (config, vocab hash, step, tensor
// manifest) followed by the flat little-endian float32 payload.
void save_checkpoint(const std::string& path, const Model& model,
                     const std::string& vocab_hash, int64_t step);

struct Checkpoint {
    ModelConfig config;
    std::string vocab_hash;
    int64_t step = 0;
    Model model;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace chesslm::nn
