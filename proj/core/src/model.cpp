#include "chesslm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace chesslm::nn {

namespace {

constexpr double kLnEps = 1e-5;

// C[M x N] += A[M x K] * B[K x N], all row-major.
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) {
                continue;
            }
            const double* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[M x N] += A[M x K] * B^T, with B row-major [N x K].
void matmul_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<size_t>(j) * k;
            double dot = 0.0;
            for (int p = 0; p < k; ++p) {
                dot += arow[p] * brow[p];
            }
            crow[j] += dot;
        }
    }
}

// C[K x N] += A^T * B, with A row-major [M x K], B row-major [M x N].
void matmul_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        const double* brow = b + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) {
                continue;
            }
            double* crow = c + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

// y = (x - mean) * rstd * gain + bias, per row of length d.
void layer_norm_forward(const double* x, const double* gain, const double* bias, int t,
                        int d, double* xhat, double* rstd_out, double* y) {
    for (int i = 0; i < t; ++i) {
        const double* row = x + static_cast<size_t>(i) * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) {
            mean += row[j];
        }
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dv = row[j] - mean;
            var += dv * dv;
        }
        var /= d;
        const double rstd = 1.0 / std::sqrt(var + kLnEps);
        rstd_out[i] = rstd;
        double* xh = xhat + static_cast<size_t>(i) * d;
        double* yrow = y + static_cast<size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            xh[j] = (row[j] - mean) * rstd;
            yrow[j] = xh[j] * gain[j] + bias[j];
        }
    }
}

void layer_norm_backward(const double* dy, const double* xhat, const double* rstd,
                         const double* gain, int t, int d, double* dx, double* dgain,
                         double* dbias) {
    for (int i = 0; i < t; ++i) {
        const double* dyrow = dy + static_cast<size_t>(i) * d;
        const double* xh = xhat + static_cast<size_t>(i) * d;
        double* dxrow = dx + static_cast<size_t>(i) * d;
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dxh = dyrow[j] * gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[j];
            dgain[j] += dyrow[j] * xh[j];
            dbias[j] += dyrow[j];
        }
        const double inv_d = 1.0 / d;
        for (int j = 0; j < d; ++j) {
            const double dxh = dyrow[j] * gain[j];
            dxrow[j] += rstd[i] * (dxh - inv_d * sum_dxhat - xh[j] * inv_d * sum_dxhat_xhat);
        }
    }
}

}  // namespace

std::string attention_mode_name(AttentionMode mode) {
    return mode == AttentionMode::causal ? "causal" : "bidirectional";
}

AttentionMode attention_mode_from_name(const std::string& name) {
    if (name == "causal") {
        return AttentionMode::causal;
    }
    if (name == "bidirectional") {
        return AttentionMode::bidirectional;
    }
    throw ParseError("unknown attention mode: " + name);
}

void ModelConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || max_seq_len < 1 ||
        vocab_size < 1) {
        throw NumericError("model config fields must be positive");
    }
    if (d_model % n_heads != 0) {
        throw NumericError("d_model must be divisible by n_heads");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw NumericError("dropout must lie in [0, 1)");
    }
}

ParamLayout ParamLayout::for_config(const ModelConfig& cfg) {
    cfg.validate();
    ParamLayout layout;
    auto add = [&](const std::string& name, std::vector<int> shape) {
        size_t size = 1;
        for (int s : shape) {
            size *= static_cast<size_t>(s);
        }
        layout.specs_.push_back({name, std::move(shape), layout.total_, size});
        layout.total_ += size;
    };
    add("tok_embed", {cfg.vocab_size, cfg.d_model});
    add("pos_embed", {cfg.max_seq_len, cfg.d_model});
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        add(p + "ln1.gain", {cfg.d_model});
        add(p + "ln1.bias", {cfg.d_model});
        add(p + "attn.wqkv", {cfg.d_model, 3 * cfg.d_model});
        add(p + "attn.bqkv", {3 * cfg.d_model});
        add(p + "attn.wo", {cfg.d_model, cfg.d_model});
        add(p + "attn.bo", {cfg.d_model});
        add(p + "ln2.gain", {cfg.d_model});
        add(p + "ln2.bias", {cfg.d_model});
        add(p + "ff.w1", {cfg.d_model, cfg.d_ff});
        add(p + "ff.b1", {cfg.d_ff});
        add(p + "ff.w2", {cfg.d_ff, cfg.d_model});
        add(p + "ff.b2", {cfg.d_model});
    }
    add("lnf.gain", {cfg.d_model});
    add("lnf.bias", {cfg.d_model});
    add("out.w", {cfg.d_model, cfg.vocab_size});
    add("out.b", {cfg.vocab_size});
    return layout;
}

const TensorSpec& ParamLayout::find(const std::string& name) const {
    for (const auto& spec : specs_) {
        if (spec.name == name) {
            return spec;
        }
    }
    throw NumericError("no parameter tensor named " + name);
}

Model::Model(ModelConfig cfg)
    : cfg_(cfg), layout_(ParamLayout::for_config(cfg)), params_(layout_.total_size(), 0.0) {}

void Model::init_parameters(Rng& rng, double std_dev) {
    for (const auto& spec : layout_.specs()) {
        const bool is_gain = spec.name.ends_with("gain");
        const bool is_bias = spec.name.ends_with("bias") || spec.name.ends_with(".b") ||
                             spec.name.ends_with("bqkv") || spec.name.ends_with("bo") ||
                             spec.name.ends_with("b1") || spec.name.ends_with("b2");
        for (size_t i = 0; i < spec.size; ++i) {
            double v = 0.0;
            if (is_gain) {
                v = 1.0;
            } else if (!is_bias) {
                v = rng.gauss() * std_dev;
            }
            params_[spec.offset + i] = v;
        }
    }
}

bool Model::parameters_finite() const {
    return std::all_of(params_.begin(), params_.end(),
                       [](double v) { return std::isfinite(v); });
}

double* Model::tensor(const std::string& name) {
    return params_.data() + layout_.find(name).offset;
}

const double* Model::tensor(const std::string& name) const {
    return params_.data() + layout_.find(name).offset;
}

ForwardCache Model::forward_cached(const std::vector<int>& ids,
                                   const std::vector<uint8_t>& pad_mask,
                                   Rng* dropout_rng) const {
    const int t_len = static_cast<int>(ids.size());
    if (t_len == 0 || t_len > cfg_.max_seq_len) {
        throw NumericError("sequence length " + std::to_string(t_len) +
                           " outside [1, max_seq_len=" + std::to_string(cfg_.max_seq_len) + "]");
    }
    if (pad_mask.size() != ids.size()) {
        throw NumericError("pad mask length does not match ids");
    }
    const int d = cfg_.d_model;
    const int h = cfg_.n_heads;
    const int dh = d / h;
    const int f = cfg_.d_ff;
    const int v = cfg_.vocab_size;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool causal = cfg_.attention_mode == AttentionMode::causal;

    ForwardCache cache;
    cache.seq_len = t_len;
    cache.ids = ids;
    cache.pad_mask = pad_mask;

    const double* tok = tensor("tok_embed");
    const double* pos = tensor("pos_embed");
    cache.x0.assign(static_cast<size_t>(t_len) * d, 0.0);
    for (int i = 0; i < t_len; ++i) {
        const int id = ids[static_cast<size_t>(i)];
        if (id < 0 || id >= cfg_.vocab_size) {
            throw NumericError("token id out of vocabulary range");
        }
        for (int j = 0; j < d; ++j) {
            cache.x0[static_cast<size_t>(i) * d + j] =
                tok[static_cast<size_t>(id) * d + j] + pos[static_cast<size_t>(i) * d + j];
        }
    }

    std::vector<double> x = cache.x0;
    std::vector<double> normed(static_cast<size_t>(t_len) * d);
    std::vector<double> branch(static_cast<size_t>(t_len) * d);

    const bool use_dropout = dropout_rng != nullptr && cfg_.dropout > 0.0;
    auto make_drop_mask = [&](std::vector<double>& mask) {
        mask.assign(static_cast<size_t>(t_len) * d, 0.0);
        const double keep_scale = 1.0 / (1.0 - cfg_.dropout);
        for (double& m : mask) {
            m = dropout_rng->uniform() < cfg_.dropout ? 0.0 : keep_scale;
        }
    };

    for (int l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        cache.ln1_xhat.emplace_back(static_cast<size_t>(t_len) * d);
        cache.ln1_rstd.emplace_back(static_cast<size_t>(t_len));
        layer_norm_forward(x.data(), tensor(p + "ln1.gain"), tensor(p + "ln1.bias"), t_len,
                           d, cache.ln1_xhat[l].data(), cache.ln1_rstd[l].data(),
                           normed.data());

        cache.qkv.emplace_back(static_cast<size_t>(t_len) * 3 * d, 0.0);
        auto& qkv = cache.qkv[l];
        const double* bqkv = tensor(p + "attn.bqkv");
        for (int i = 0; i < t_len; ++i) {
            std::memcpy(qkv.data() + static_cast<size_t>(i) * 3 * d, bqkv,
                        sizeof(double) * 3 * d);
        }
        matmul_acc(normed.data(), tensor(p + "attn.wqkv"), qkv.data(), t_len, d, 3 * d);

        cache.attn_probs.emplace_back(static_cast<size_t>(h) * t_len * t_len, 0.0);
        cache.attn_ctx.emplace_back(static_cast<size_t>(t_len) * d, 0.0);
        auto& probs = cache.attn_probs[l];
        auto& ctx = cache.attn_ctx[l];
        std::vector<double> scores(static_cast<size_t>(t_len));
        for (int head = 0; head < h; ++head) {
            const int qoff = head * dh;
            const int koff = d + head * dh;
            const int voff = 2 * d + head * dh;
            for (int i = 0; i < t_len; ++i) {
                const double* qrow = qkv.data() + static_cast<size_t>(i) * 3 * d + qoff;
                const int jmax = causal ? i : t_len - 1;
                double max_score = -1e300;
                for (int j = 0; j <= jmax; ++j) {
                    if (!pad_mask[static_cast<size_t>(j)]) {
                        continue;
                    }
                    const double* krow = qkv.data() + static_cast<size_t>(j) * 3 * d + koff;
                    double dot = 0.0;
                    for (int q = 0; q < dh; ++q) {
                        dot += qrow[q] * krow[q];
                    }
                    scores[static_cast<size_t>(j)] = dot * inv_sqrt_dh;
                    max_score = std::max(max_score, scores[static_cast<size_t>(j)]);
                }
                // Pure-pad rows (no attendable column) keep a zero context.
                if (max_score == -1e300) {
                    continue;
                }
                double denom = 0.0;
                for (int j = 0; j <= jmax; ++j) {
                    if (!pad_mask[static_cast<size_t>(j)]) {
                        continue;
                    }
                    const double e = std::exp(scores[static_cast<size_t>(j)] - max_score);
                    probs[(static_cast<size_t>(head) * t_len + i) * t_len + j] = e;
                    denom += e;
                }
                const double inv = 1.0 / denom;
                double* ctxrow = ctx.data() + static_cast<size_t>(i) * d + head * dh;
                for (int j = 0; j <= jmax; ++j) {
                    double& pj = probs[(static_cast<size_t>(head) * t_len + i) * t_len + j];
                    if (pj == 0.0) {
                        continue;
                    }
                    pj *= inv;
                    const double* vrow = qkv.data() + static_cast<size_t>(j) * 3 * d + voff;
                    for (int q = 0; q < dh; ++q) {
                        ctxrow[q] += pj * vrow[q];
                    }
                }
            }
        }

        const double* bo = tensor(p + "attn.bo");
        for (int i = 0; i < t_len; ++i) {
            std::memcpy(branch.data() + static_cast<size_t>(i) * d, bo, sizeof(double) * d);
        }
        matmul_acc(ctx.data(), tensor(p + "attn.wo"), branch.data(), t_len, d, d);

        cache.attn_drop.emplace_back();
        if (use_dropout) {
            make_drop_mask(cache.attn_drop[l]);
            for (size_t i = 0; i < branch.size(); ++i) {
                branch[i] *= cache.attn_drop[l][i];
            }
        }

        cache.x_mid.emplace_back(static_cast<size_t>(t_len) * d);
        auto& x_mid = cache.x_mid[l];
        for (size_t i = 0; i < x_mid.size(); ++i) {
            x_mid[i] = x[i] + branch[i];
        }

        cache.ln2_xhat.emplace_back(static_cast<size_t>(t_len) * d);
        cache.ln2_rstd.emplace_back(static_cast<size_t>(t_len));
        layer_norm_forward(x_mid.data(), tensor(p + "ln2.gain"), tensor(p + "ln2.bias"),
                           t_len, d, cache.ln2_xhat[l].data(), cache.ln2_rstd[l].data(),
                           normed.data());

        cache.ff_pre.emplace_back(static_cast<size_t>(t_len) * f, 0.0);
        auto& pre = cache.ff_pre[l];
        const double* b1 = tensor(p + "ff.b1");
        for (int i = 0; i < t_len; ++i) {
            std::memcpy(pre.data() + static_cast<size_t>(i) * f, b1, sizeof(double) * f);
        }
        matmul_acc(normed.data(), tensor(p + "ff.w1"), pre.data(), t_len, d, f);

        cache.ff_act.emplace_back(static_cast<size_t>(t_len) * f);
        auto& act = cache.ff_act[l];
        for (size_t i = 0; i < pre.size(); ++i) {
            act[i] = gelu(pre[i]);
        }

        const double* b2 = tensor(p + "ff.b2");
        for (int i = 0; i < t_len; ++i) {
            std::memcpy(branch.data() + static_cast<size_t>(i) * d, b2, sizeof(double) * d);
        }
        matmul_acc(act.data(), tensor(p + "ff.w2"), branch.data(), t_len, f, d);

        cache.ff_drop.emplace_back();
        if (use_dropout) {
            make_drop_mask(cache.ff_drop[l]);
            for (size_t i = 0; i < branch.size(); ++i) {
                branch[i] *= cache.ff_drop[l][i];
            }
        }

        cache.x_out.emplace_back(static_cast<size_t>(t_len) * d);
        auto& x_out = cache.x_out[l];
        for (size_t i = 0; i < x_out.size(); ++i) {
            x_out[i] = x_mid[i] + branch[i];
        }
        x = x_out;
    }

    cache.lnf_xhat.assign(static_cast<size_t>(t_len) * d, 0.0);
    cache.lnf_rstd.assign(static_cast<size_t>(t_len), 0.0);
    layer_norm_forward(x.data(), tensor("lnf.gain"), tensor("lnf.bias"), t_len, d,
                       cache.lnf_xhat.data(), cache.lnf_rstd.data(), normed.data());

    cache.logits.assign(static_cast<size_t>(t_len) * v, 0.0);
    const double* bout = tensor("out.b");
    for (int i = 0; i < t_len; ++i) {
        std::memcpy(cache.logits.data() + static_cast<size_t>(i) * v, bout,
                    sizeof(double) * v);
    }
    matmul_acc(normed.data(), tensor("out.w"), cache.logits.data(), t_len, d, v);

    double probe = 0.0;
    for (double lv : cache.logits) {
        probe += lv;
    }
    if (!std::isfinite(probe)) {
        throw NumericError("non-finite logits; a parameter is likely NaN/Inf");
    }
    return cache;
}

std::vector<double> Model::forward(const std::vector<int>& ids,
                                   const std::vector<uint8_t>& pad_mask) const {
    return forward_cached(ids, pad_mask).logits;
}

void Model::backward(const ForwardCache& cache, const std::vector<double>& dlogits,
                     std::vector<double>& grad) const {
    const int t_len = cache.seq_len;
    const int d = cfg_.d_model;
    const int h = cfg_.n_heads;
    const int dh = d / h;
    const int f = cfg_.d_ff;
    const int v = cfg_.vocab_size;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool causal = cfg_.attention_mode == AttentionMode::causal;
    if (grad.size() != params_.size()) {
        throw NumericError("gradient buffer size mismatch");
    }
    auto g = [&](const std::string& name) { return grad.data() + layout_.find(name).offset; };

    // Final projection and layer norm.
    std::vector<double> lnf_y(static_cast<size_t>(t_len) * d);
    {
        const double* gain = tensor("lnf.gain");
        const double* bias = tensor("lnf.bias");
        for (int i = 0; i < t_len; ++i) {
            for (int j = 0; j < d; ++j) {
                lnf_y[static_cast<size_t>(i) * d + j] =
                    cache.lnf_xhat[static_cast<size_t>(i) * d + j] * gain[j] + bias[j];
            }
        }
    }
    matmul_tn_acc(lnf_y.data(), dlogits.data(), g("out.w"), t_len, d, v);
    {
        double* dbout = g("out.b");
        for (int i = 0; i < t_len; ++i) {
            const double* row = dlogits.data() + static_cast<size_t>(i) * v;
            for (int j = 0; j < v; ++j) {
                dbout[j] += row[j];
            }
        }
    }
    std::vector<double> d_lnf_y(static_cast<size_t>(t_len) * d, 0.0);
    matmul_nt_acc(dlogits.data(), tensor("out.w"), d_lnf_y.data(), t_len, v, d);

    std::vector<double> dx(static_cast<size_t>(t_len) * d, 0.0);
    layer_norm_backward(d_lnf_y.data(), cache.lnf_xhat.data(), cache.lnf_rstd.data(),
                        tensor("lnf.gain"), t_len, d, dx.data(), g("lnf.gain"),
                        g("lnf.bias"));

    std::vector<double> normed(static_cast<size_t>(t_len) * d);
    std::vector<double> d_normed(static_cast<size_t>(t_len) * d);
    std::vector<double> d_pre(static_cast<size_t>(t_len) * f);
    std::vector<double> d_ctx(static_cast<size_t>(t_len) * d);
    std::vector<double> d_qkv(static_cast<size_t>(t_len) * 3 * d);
    std::vector<double> d_branch(static_cast<size_t>(t_len) * d);

    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
        const std::string p = "layer" + std::to_string(l) + ".";

        // Feed-forward branch; dx currently holds dL/dx_out.
        if (cache.ff_drop[l].empty()) {
            d_branch = dx;
        } else {
            for (size_t i = 0; i < dx.size(); ++i) {
                d_branch[i] = dx[i] * cache.ff_drop[l][i];
            }
        }
        {
            const double* gain = tensor(p + "ln2.gain");
            const double* bias = tensor(p + "ln2.bias");
            for (int i = 0; i < t_len; ++i) {
                for (int j = 0; j < d; ++j) {
                    normed[static_cast<size_t>(i) * d + j] =
                        cache.ln2_xhat[l][static_cast<size_t>(i) * d + j] * gain[j] + bias[j];
                }
            }
        }
        {
            double* db2 = g(p + "ff.b2");
            for (int i = 0; i < t_len; ++i) {
                const double* row = d_branch.data() + static_cast<size_t>(i) * d;
                for (int j = 0; j < d; ++j) {
                    db2[j] += row[j];
                }
            }
        }
        matmul_tn_acc(cache.ff_act[l].data(), d_branch.data(), g(p + "ff.w2"), t_len, f, d);
        std::fill(d_pre.begin(), d_pre.end(), 0.0);
        matmul_nt_acc(d_branch.data(), tensor(p + "ff.w2"), d_pre.data(), t_len, d, f);
        for (size_t i = 0; i < d_pre.size(); ++i) {
            d_pre[i] *= gelu_grad(cache.ff_pre[l][i]);
        }
        {
            double* db1 = g(p + "ff.b1");
            for (int i = 0; i < t_len; ++i) {
                const double* row = d_pre.data() + static_cast<size_t>(i) * f;
                for (int j = 0; j < f; ++j) {
                    db1[j] += row[j];
                }
            }
        }
        matmul_tn_acc(normed.data(), d_pre.data(), g(p + "ff.w1"), t_len, d, f);
        std::fill(d_normed.begin(), d_normed.end(), 0.0);
        matmul_nt_acc(d_pre.data(), tensor(p + "ff.w1"), d_normed.data(), t_len, f, d);

        // Residual: dL/dx_mid = dx (skip) + LN2 backward of branch grad.
        layer_norm_backward(d_normed.data(), cache.ln2_xhat[l].data(),
                            cache.ln2_rstd[l].data(), tensor(p + "ln2.gain"), t_len, d,
                            dx.data(), g(p + "ln2.gain"), g(p + "ln2.bias"));

        // Attention branch; dx now holds dL/dx_mid.
        if (cache.attn_drop[l].empty()) {
            d_branch = dx;
        } else {
            for (size_t i = 0; i < dx.size(); ++i) {
                d_branch[i] = dx[i] * cache.attn_drop[l][i];
            }
        }
        {
            double* dbo = g(p + "attn.bo");
            for (int i = 0; i < t_len; ++i) {
                const double* row = d_branch.data() + static_cast<size_t>(i) * d;
                for (int j = 0; j < d; ++j) {
                    dbo[j] += row[j];
                }
            }
        }
        matmul_tn_acc(cache.attn_ctx[l].data(), d_branch.data(), g(p + "attn.wo"), t_len, d, d);
        std::fill(d_ctx.begin(), d_ctx.end(), 0.0);
        matmul_nt_acc(d_branch.data(), tensor(p + "attn.wo"), d_ctx.data(), t_len, d, d);

        std::fill(d_qkv.begin(), d_qkv.end(), 0.0);
        const auto& probs = cache.attn_probs[l];
        const auto& qkv = cache.qkv[l];
        std::vector<double> dp(static_cast<size_t>(t_len));
        for (int head = 0; head < h; ++head) {
            const int qoff = head * dh;
            const int koff = d + head * dh;
            const int voff = 2 * d + head * dh;
            for (int i = 0; i < t_len; ++i) {
                const int jmax = causal ? i : t_len - 1;
                const double* dctxrow = d_ctx.data() + static_cast<size_t>(i) * d + head * dh;
                const double* prow = probs.data() + (static_cast<size_t>(head) * t_len + i) * t_len;
                double dot_pd = 0.0;
                for (int j = 0; j <= jmax; ++j) {
                    const double pj = prow[j];
                    if (pj == 0.0) {
                        dp[static_cast<size_t>(j)] = 0.0;
                        continue;
                    }
                    const double* vrow = qkv.data() + static_cast<size_t>(j) * 3 * d + voff;
                    double* dvrow = d_qkv.data() + static_cast<size_t>(j) * 3 * d + voff;
                    double dpj = 0.0;
                    for (int q = 0; q < dh; ++q) {
                        dpj += dctxrow[q] * vrow[q];
                        dvrow[q] += pj * dctxrow[q];
                    }
                    dp[static_cast<size_t>(j)] = dpj;
                    dot_pd += pj * dpj;
                }
                const double* qrow = qkv.data() + static_cast<size_t>(i) * 3 * d + qoff;
                double* dqrow = d_qkv.data() + static_cast<size_t>(i) * 3 * d + qoff;
                for (int j = 0; j <= jmax; ++j) {
                    const double pj = prow[j];
                    if (pj == 0.0) {
                        continue;
                    }
                    const double ds = pj * (dp[static_cast<size_t>(j)] - dot_pd) * inv_sqrt_dh;
                    const double* krow = qkv.data() + static_cast<size_t>(j) * 3 * d + koff;
                    double* dkrow = d_qkv.data() + static_cast<size_t>(j) * 3 * d + koff;
                    for (int q = 0; q < dh; ++q) {
                        dqrow[q] += ds * krow[q];
                        dkrow[q] += ds * qrow[q];
                    }
                }
            }
        }

        {
            double* dbqkv = g(p + "attn.bqkv");
            for (int i = 0; i < t_len; ++i) {
                const double* row = d_qkv.data() + static_cast<size_t>(i) * 3 * d;
                for (int j = 0; j < 3 * d; ++j) {
                    dbqkv[j] += row[j];
                }
            }
        }
        {
            const double* gain = tensor(p + "ln1.gain");
            const double* bias = tensor(p + "ln1.bias");
            for (int i = 0; i < t_len; ++i) {
                for (int j = 0; j < d; ++j) {
                    normed[static_cast<size_t>(i) * d + j] =
                        cache.ln1_xhat[l][static_cast<size_t>(i) * d + j] * gain[j] + bias[j];
                }
            }
        }
        matmul_tn_acc(normed.data(), d_qkv.data(), g(p + "attn.wqkv"), t_len, d, 3 * d);
        std::fill(d_normed.begin(), d_normed.end(), 0.0);
        matmul_nt_acc(d_qkv.data(), tensor(p + "attn.wqkv"), d_normed.data(), t_len, 3 * d, d);

        layer_norm_backward(d_normed.data(), cache.ln1_xhat[l].data(),
                            cache.ln1_rstd[l].data(), tensor(p + "ln1.gain"), t_len, d,
                            dx.data(), g(p + "ln1.gain"), g(p + "ln1.bias"));
    }

    // Embedding gradients.
    double* dtok = g("tok_embed");
    double* dpos = g("pos_embed");
    for (int i = 0; i < t_len; ++i) {
        const int id = cache.ids[static_cast<size_t>(i)];
        const double* row = dx.data() + static_cast<size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            dtok[static_cast<size_t>(id) * d + j] += row[j];
            dpos[static_cast<size_t>(i) * d + j] += row[j];
        }
    }
}

MaskedLoss masked_ce_loss(const std::vector<double>& logits, const std::vector<int>& targets,
                          const std::vector<uint8_t>& w, int vocab_size) {
    const size_t t_len = w.size();
    if (targets.size() != t_len || logits.size() != t_len * static_cast<size_t>(vocab_size)) {
        throw NumericError("masked_ce_loss shape mismatch");
    }
    MaskedLoss result;
    for (size_t t = 0; t < t_len; ++t) {
        if (!w[t]) {
            continue;
        }
        const double* row = logits.data() + t * static_cast<size_t>(vocab_size);
        double max_logit = row[0];
        for (int j = 1; j < vocab_size; ++j) {
            max_logit = std::max(max_logit, row[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < vocab_size; ++j) {
            denom += std::exp(row[j] - max_logit);
        }
        const int target = targets[t];
        if (target < 0 || target >= vocab_size) {
            throw NumericError("target id out of range in masked_ce_loss");
        }
        result.loss_sum += std::log(denom) - (row[target] - max_logit);
        result.token_count += 1;
    }
    if (result.token_count == 0) {
        throw NumericError("loss mask selects no positions");
    }
    return result;
}

std::vector<double> masked_ce_loss_backward(const std::vector<double>& logits,
                                            const std::vector<int>& targets,
                                            const std::vector<uint8_t>& w, int vocab_size,
                                            double scale) {
    const size_t t_len = w.size();
    std::vector<double> dlogits(logits.size(), 0.0);
    for (size_t t = 0; t < t_len; ++t) {
        if (!w[t]) {
            continue;
        }
        const double* row = logits.data() + t * static_cast<size_t>(vocab_size);
        double* drow = dlogits.data() + t * static_cast<size_t>(vocab_size);
        double max_logit = row[0];
        for (int j = 1; j < vocab_size; ++j) {
            max_logit = std::max(max_logit, row[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < vocab_size; ++j) {
            denom += std::exp(row[j] - max_logit);
        }
        const double inv = 1.0 / denom;
        for (int j = 0; j < vocab_size; ++j) {
            drow[j] = std::exp(row[j] - max_logit) * inv * scale;
        }
        drow[targets[t]] -= scale;
    }
    return dlogits;
}

std::vector<int> shifted_targets(const std::vector<int>& ids) {
    std::vector<int> targets(ids.size(), 0);
    for (size_t t = 0; t + 1 < ids.size(); ++t) {
        targets[t] = ids[t + 1];
    }
    return targets;
}

std::vector<double> softmax_rows(const std::vector<double>& logits, int rows, int cols) {
    std::vector<double> out(logits.size());
    for (int i = 0; i < rows; ++i) {
        const double* row = logits.data() + static_cast<size_t>(i) * cols;
        double* orow = out.data() + static_cast<size_t>(i) * cols;
        double max_logit = row[0];
        for (int j = 1; j < cols; ++j) {
            max_logit = std::max(max_logit, row[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < cols; ++j) {
            orow[j] = std::exp(row[j] - max_logit);
            denom += orow[j];
        }
        for (int j = 0; j < cols; ++j) {
            orow[j] /= denom;
        }
    }
    return out;
}

std::vector<int> Model::generate(const std::vector<int>& prompt_ids, double temperature,
                                 int max_new_tokens, int stop_id, Rng& rng) const {
    if (prompt_ids.empty()) {
        throw NumericError("generate requires a nonempty prompt");
    }
    if (static_cast<int>(prompt_ids.size()) > cfg_.max_seq_len) {
        throw NumericError("prompt exceeds max_seq_len");
    }
    if (temperature < 0.0) {
        throw NumericError("temperature must be >= 0");
    }
    std::vector<int> ids = prompt_ids;
    for (int n = 0; n < max_new_tokens; ++n) {
        if (static_cast<int>(ids.size()) >= cfg_.max_seq_len) {
            break;
        }
        const std::vector<uint8_t> pad(ids.size(), 1);
        const auto logits = forward(ids, pad);
        const double* row =
            logits.data() + (ids.size() - 1) * static_cast<size_t>(cfg_.vocab_size);
        int next = 0;
        if (temperature == 0.0) {
            for (int j = 1; j < cfg_.vocab_size; ++j) {
                if (row[j] > row[next]) {
                    next = j;
                }
            }
        } else {
            double max_logit = row[0];
            for (int j = 1; j < cfg_.vocab_size; ++j) {
                max_logit = std::max(max_logit, row[j]);
            }
            std::vector<double> probs(static_cast<size_t>(cfg_.vocab_size));
            double denom = 0.0;
            for (int j = 0; j < cfg_.vocab_size; ++j) {
                probs[static_cast<size_t>(j)] = std::exp((row[j] - max_logit) / temperature);
                denom += probs[static_cast<size_t>(j)];
            }
            double u = rng.uniform() * denom;
            next = cfg_.vocab_size - 1;
            for (int j = 0; j < cfg_.vocab_size; ++j) {
                u -= probs[static_cast<size_t>(j)];
                if (u <= 0.0) {
                    next = j;
                    break;
                }
            }
        }
        ids.push_back(next);
        if (next == stop_id) {
            break;
        }
    }
    return ids;
}

std::vector<int> Model::teacher_forced_predictions(const text::TokenSequence& sample) const {
    const auto cache = forward_cached(sample.ids, sample.attention_pad_mask);
    std::vector<int> preds;
    for (size_t t = 0; t < sample.w.size(); ++t) {
        if (!sample.w[t]) {
            continue;
        }
        const double* row =
            cache.logits.data() + t * static_cast<size_t>(cfg_.vocab_size);
        int best = 0;
        for (int j = 1; j < cfg_.vocab_size; ++j) {
            if (row[j] > row[best]) {
                best = j;
            }
        }
        preds.push_back(best);
    }
    return preds;
}

void save_checkpoint(const std::string& path, const Model& model,
                     const std::string& vocab_hash, int64_t step) {
    nlohmann::json header;
    const auto& cfg = model.config();
    header["format"] = "chesslm-checkpoint-v1";
    header["config"] = {
        {"n_layers", cfg.n_layers},
        {"n_heads", cfg.n_heads},
        {"d_model", cfg.d_model},
        {"d_ff", cfg.d_ff},
        {"max_seq_len", cfg.max_seq_len},
        {"vocab_size", cfg.vocab_size},
        {"attention_mode", attention_mode_name(cfg.attention_mode)},
        {"dropout", cfg.dropout},
    };
    header["vocab_hash"] = vocab_hash;
    header["step"] = step;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& spec : model.layout().specs()) {
        manifest.push_back({{"name", spec.name}, {"shape", spec.shape}, {"offset", spec.offset}});
    }
    header["tensors"] = manifest;
    header["param_count"] = model.params().size();

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot write checkpoint: " + path);
    }
    out << header.dump() << '\n';
    std::vector<float> payload(model.params().size());
    for (size_t i = 0; i < payload.size(); ++i) {
        payload[i] = static_cast<float>(model.params()[i]);
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open checkpoint: " + path);
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw ParseError("checkpoint has no header");
    }
    nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.value("format", "") != "chesslm-checkpoint-v1") {
        throw ParseError("unrecognized checkpoint format");
    }
    ModelConfig cfg;
    const auto& jc = header.at("config");
    cfg.n_layers = jc.at("n_layers").get<int>();
    cfg.n_heads = jc.at("n_heads").get<int>();
    cfg.d_model = jc.at("d_model").get<int>();
    cfg.d_ff = jc.at("d_ff").get<int>();
    cfg.max_seq_len = jc.at("max_seq_len").get<int>();
    cfg.vocab_size = jc.at("vocab_size").get<int>();
    cfg.attention_mode = attention_mode_from_name(jc.at("attention_mode").get<std::string>());
    cfg.dropout = jc.at("dropout").get<double>();

    Checkpoint ckpt{cfg, header.at("vocab_hash").get<std::string>(),
                    header.at("step").get<int64_t>(), Model(cfg)};
    const size_t count = header.at("param_count").get<size_t>();
    if (count != ckpt.model.params().size()) {
        throw ParseError("checkpoint parameter count does not match config");
    }
    std::vector<float> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != count * sizeof(float)) {
        throw ParseError("checkpoint payload truncated");
    }
    for (size_t i = 0; i < count; ++i) {
        ckpt.model.params()[i] = static_cast<double>(payload[i]);
    }
    return ckpt;
}

}  // namespace chesslm::nn
