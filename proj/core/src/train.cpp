#include "chesslm/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "chesslm/game.hpp"

namespace chesslm::train {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || min_lr <= 0.0) {
        throw NumericError("learning rates must be positive");
    }
    if (min_lr > learning_rate) {
        throw NumericError("min_lr must not exceed learning_rate");
    }
    if (warmup_iters < 1 || lr_decay_iters < 1 || max_iters < 0) {
        throw NumericError("iteration counts must be positive");
    }
    if (warmup_iters > lr_decay_iters) {
        throw NumericError("warmup_iters must not exceed lr_decay_iters");
    }
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
        throw NumericError("betas must lie in (0, 1)");
    }
    if (grad_clip <= 0.0) {
        throw NumericError("grad_clip must be positive");
    }
    if (batch_size < 1 || grad_accum_steps < 1) {
        throw NumericError("batch_size and grad_accum_steps must be positive");
    }
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line without '=': " + stripped);
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "learning_rate") cfg.learning_rate = std::stod(value);
            else if (key == "min_lr") cfg.min_lr = std::stod(value);
            else if (key == "warmup_iters") cfg.warmup_iters = std::stoi(value);
            else if (key == "lr_decay_iters") cfg.lr_decay_iters = std::stoi(value);
            else if (key == "max_iters") cfg.max_iters = std::stoi(value);
            else if (key == "beta1") cfg.beta1 = std::stod(value);
            else if (key == "beta2") cfg.beta2 = std::stod(value);
            else if (key == "adam_eps") cfg.adam_eps = std::stod(value);
            else if (key == "weight_decay") cfg.weight_decay = std::stod(value);
            else if (key == "grad_clip") cfg.grad_clip = std::stod(value);
            else if (key == "clip_mode") {
                if (value == "element") cfg.clip_mode = ClipMode::element;
                else if (value == "norm") cfg.clip_mode = ClipMode::norm;
                else throw ParseError("clip_mode must be element or norm");
            }
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "grad_accum_steps") cfg.grad_accum_steps = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = std::stoi(value);
            else if (key == "n_threads") cfg.n_threads = std::stoi(value);
            else throw ParseError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw ParseError("bad value for config key " + key + ": " + value);
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    return parse_train_config(read_file(path));
}

std::string train_config_to_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "learning_rate = " << format_double(cfg.learning_rate) << '\n'
        << "min_lr = " << format_double(cfg.min_lr) << '\n'
        << "warmup_iters = " << cfg.warmup_iters << '\n'
        << "lr_decay_iters = " << cfg.lr_decay_iters << '\n'
        << "max_iters = " << cfg.max_iters << '\n'
        << "beta1 = " << format_double(cfg.beta1) << '\n'
        << "beta2 = " << format_double(cfg.beta2) << '\n'
        << "adam_eps = " << format_double(cfg.adam_eps) << '\n'
        << "weight_decay = " << format_double(cfg.weight_decay) << '\n'
        << "grad_clip = " << format_double(cfg.grad_clip) << '\n'
        << "clip_mode = " << (cfg.clip_mode == ClipMode::element ? "element" : "norm") << '\n'
        << "batch_size = " << cfg.batch_size << '\n'
        << "grad_accum_steps = " << cfg.grad_accum_steps << '\n'
        << "seed = " << cfg.seed << '\n'
        << "checkpoint_interval = " << cfg.checkpoint_interval << '\n'
        << "n_threads = " << cfg.n_threads << '\n';
    return out.str();
}

double lr_schedule(int64_t step, const TrainConfig& cfg) {
    if (step < 0) {
        throw NumericError("schedule step must be non-negative");
    }
    if (step < cfg.warmup_iters) {
        return cfg.learning_rate * static_cast<double>(step) /
               static_cast<double>(cfg.warmup_iters);
    }
    if (step >= cfg.lr_decay_iters) {
        return cfg.min_lr;
    }
    const double progress = static_cast<double>(step - cfg.warmup_iters) /
                            static_cast<double>(cfg.lr_decay_iters - cfg.warmup_iters);
    return cfg.min_lr +
           0.5 * (cfg.learning_rate - cfg.min_lr) * (1.0 + std::cos(M_PI * progress));
}

void clip_gradients(std::vector<double>& grads, double limit, ClipMode mode) {
    if (limit <= 0.0) {
        throw NumericError("clip limit must be positive");
    }
    for (double v : grads) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite gradient component");
        }
    }
    if (mode == ClipMode::element) {
        for (double& v : grads) {
            v = std::clamp(v, -limit, limit);
        }
    } else {
        double norm_sq = 0.0;
        for (double v : grads) {
            norm_sq += v * v;
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > limit) {
            const double scale = limit / norm;
            for (double& v : grads) {
                v *= scale;
            }
        }
    }
}

AdamW::AdamW(const nn::ParamLayout& layout, const TrainConfig& cfg)
    : cfg_(cfg),
      m_(layout.total_size(), 0.0),
      v_(layout.total_size(), 0.0),
      decay_(layout.total_size(), 0) {
    for (const auto& spec : layout.specs()) {
        if (spec.shape.size() >= 2) {
            std::fill(decay_.begin() + static_cast<long>(spec.offset),
                      decay_.begin() + static_cast<long>(spec.offset + spec.size), 1);
        }
    }
}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw NumericError("optimizer buffer size mismatch");
    }
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        const double gi = grads[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * gi;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
        if (decay_[i]) {
            params[i] -= lr * cfg_.weight_decay * params[i];
        }
    }
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
    std::ostringstream out;
    out << "step,lr,loss\n";
    for (const auto& p : trace) {
        out << p.step << ',' << format_double(p.lr) << ',' << format_double(p.loss) << '\n';
    }
    return out.str();
}

ShuffledStream::ShuffledStream(std::vector<text::TokenSequence> samples, uint64_t seed)
    : samples_(std::move(samples)), rng_(seed) {
    if (samples_.empty()) {
        throw NumericError("sample stream needs at least one sample");
    }
    order_.resize(samples_.size());
    for (size_t i = 0; i < order_.size(); ++i) {
        order_[i] = i;
    }
    reshuffle();
}

void ShuffledStream::reshuffle() {
    for (size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[rng_.below(i)]);
    }
    cursor_ = 0;
}

const text::TokenSequence& ShuffledStream::next() {
    if (cursor_ >= order_.size()) {
        reshuffle();
    }
    return samples_[order_[cursor_++]];
}

namespace {

struct SampleGrad {
    double loss_sum = 0.0;
    int token_count = 0;
    std::vector<double> grad;
};

void compute_sample_grad(const nn::Model& model, const text::TokenSequence& sample,
                         SampleGrad& out, uint64_t dropout_seed, bool use_dropout) {
    out.grad.assign(model.params().size(), 0.0);
    Rng drop_rng(dropout_seed);
    const auto cache = model.forward_cached(sample.ids, sample.attention_pad_mask,
                                            use_dropout ? &drop_rng : nullptr);
    const auto targets = nn::shifted_targets(sample.ids);
    const auto loss =
        nn::masked_ce_loss(cache.logits, targets, sample.w, model.config().vocab_size);
    out.loss_sum = loss.loss_sum;
    out.token_count = loss.token_count;
    // Gradients of the raw sum; the caller normalizes by the batch token
    // count after the fixed-order reduction.
    const auto dlogits = nn::masked_ce_loss_backward(cache.logits, targets, sample.w,
                                                     model.config().vocab_size, 1.0);
    model.backward(cache, dlogits, out.grad);
}

}  // namespace

double batch_loss_and_grad(const nn::Model& model,
                           const std::vector<const text::TokenSequence*>& batch,
                           std::vector<double>& grad, int n_threads, Rng* dropout_rng) {
    const size_t n = batch.size();
    std::vector<SampleGrad> per_sample(n);
    std::vector<uint64_t> drop_seeds(n, 0);
    const bool use_dropout = dropout_rng != nullptr && model.config().dropout > 0.0;
    if (use_dropout) {
        for (size_t i = 0; i < n; ++i) {
            drop_seeds[i] = dropout_rng->next_u64();
        }
    }

    int threads = n_threads > 0 ? n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads == 1) {
        for (size_t i = 0; i < n; ++i) {
            compute_sample_grad(model, *batch[i], per_sample[i], drop_seeds[i], use_dropout);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> cursor{0};
        std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    while (true) {
                        const size_t i = cursor.fetch_add(1);
                        if (i >= n) {
                            return;
                        }
                        compute_sample_grad(model, *batch[i], per_sample[i], drop_seeds[i],
                                            use_dropout);
                    }
                } catch (...) {
                    errors[static_cast<size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    // Fixed-order reduction keeps results bit-identical across thread counts.
    double loss_sum = 0.0;
    int64_t token_count = 0;
    for (size_t i = 0; i < n; ++i) {
        loss_sum += per_sample[i].loss_sum;
        token_count += per_sample[i].token_count;
        const auto& sg = per_sample[i].grad;
        for (size_t j = 0; j < grad.size(); ++j) {
            grad[j] += sg[j];
        }
    }
    if (token_count == 0) {
        throw NumericError("batch contains no masked positions");
    }
    const double inv = 1.0 / static_cast<double>(token_count);
    for (double& v : grad) {
        v *= inv;
    }
    return loss_sum * inv;
}

TrainResult train(nn::Model& model, SampleStream& stream, const TrainConfig& cfg,
                  const CheckpointHook& on_checkpoint) {
    cfg.validate();
    AdamW opt(model.layout(), cfg);
    Rng dropout_rng = Rng(cfg.seed).fork(0x64726f70);  // dropout stream

    TrainResult result;
    std::vector<double> grad(model.params().size(), 0.0);
    for (int64_t step = 0; step < cfg.max_iters; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);

        // Accumulated micro-batches are equivalent to one large batch: the
        // per-sample grads are summed in draw order and normalized once.
        std::vector<const text::TokenSequence*> all;
        all.reserve(static_cast<size_t>(cfg.batch_size) * cfg.grad_accum_steps);
        for (int micro = 0; micro < cfg.grad_accum_steps; ++micro) {
            for (int b = 0; b < cfg.batch_size; ++b) {
                all.push_back(&stream.next());
            }
        }
        const double loss = batch_loss_and_grad(model, all, grad, cfg.n_threads,
                                                model.config().dropout > 0.0 ? &dropout_rng
                                                                             : nullptr);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss at step " + std::to_string(step));
        }
        clip_gradients(grad, cfg.grad_clip, cfg.clip_mode);
        const double lr = lr_schedule(step, cfg);
        opt.step(model.params(), grad, lr);
        if (!model.parameters_finite()) {
            throw NumericError("non-finite parameter after update at step " +
                               std::to_string(step));
        }
        result.trace.push_back({step, lr, loss});
        result.steps = step + 1;

        if (on_checkpoint && cfg.checkpoint_interval > 0 &&
            (step + 1) % cfg.checkpoint_interval == 0) {
            on_checkpoint(model, step + 1);
        }
    }
    if (on_checkpoint) {
        on_checkpoint(model, result.steps);
    }
    return result;
}

text::TokenSequence make_pgn_sample(const std::vector<std::string>& san_moves,
                                    const text::Vocabulary& vocab, int target_len) {
    if (san_moves.empty()) {
        throw ParseError("cannot build a PGN sample from an empty game");
    }
    // Validates legality as a side effect.
    chess::pgn_to_fen(san_moves);

    // Movetext with move numbers kept in the character stream.
    std::string body;
    for (size_t i = 0; i < san_moves.size(); ++i) {
        std::string token = san_moves[i];
        if (i % 2 == 0) {
            token = std::to_string(i / 2 + 1) + ". " + token;
        }
        const std::string candidate = body.empty() ? token : body + " " + token;
        if (static_cast<int>(candidate.size()) > target_len - 2) {
            break;  // truncate at a move boundary; specials need two slots
        }
        body = candidate;
    }
    if (body.empty()) {
        throw ParseError("PGN sample does not fit the sequence budget");
    }

    text::TokenSequence seq;
    seq.ids.push_back(text::Vocabulary::kBeginId);
    for (int id : text::char_tokenize(body, vocab)) {
        seq.ids.push_back(id);
    }
    seq.ids.push_back(text::Vocabulary::kEndId);
    const int content = seq.length();
    seq.attention_pad_mask.assign(static_cast<size_t>(content), 1);
    // Next-token objective: every prediction position whose target is a
    // content token (including end-of-text) carries loss.
    seq.w.assign(static_cast<size_t>(content), 1);
    seq.w.back() = 0;
    return text::pad_sequence(seq, target_len);
}

text::TokenSequence make_fen_sample(const std::string& fen,
                                    const std::vector<std::string>& legal_moves,
                                    const std::string& best_move,
                                    const prompt::PromptTemplate& tmpl,
                                    const text::Vocabulary& vocab, int target_len) {
    const std::string flat = text::flatten_fen(fen);
    const std::string rendered = prompt::render_prompt(tmpl, flat, legal_moves, best_move);

    text::TokenSequence seq;
    seq.ids = text::tokenize_with_markers(rendered, vocab);
    const auto span = text::char_tokenize(best_move, vocab);
    const auto token_mask = prompt::build_loss_mask(seq.ids, span);

    const int content = seq.length();
    seq.attention_pad_mask.assign(static_cast<size_t>(content), 1);
    // Shift the token-position mask onto prediction positions: the model's
    // output at t is scored against ids[t+1].
    seq.w.assign(static_cast<size_t>(content), 0);
    for (int t = 1; t < content; ++t) {
        if (token_mask[static_cast<size_t>(t)]) {
            seq.w[static_cast<size_t>(t - 1)] = 1;
        }
    }
    if (target_len == 0) {
        return seq;  // unpadded form for per-sample evaluation
    }
    return text::pad_sequence(seq, target_len);
}

std::vector<int> make_fen_prompt_ids(const std::string& fen,
                                     const std::vector<std::string>& legal_moves,
                                     const prompt::PromptTemplate& tmpl,
                                     const text::Vocabulary& vocab) {
    const std::string flat = text::flatten_fen(fen);
    const std::string rendered = prompt::render_prompt(tmpl, flat, legal_moves, std::nullopt);
    return text::tokenize_with_markers(rendered, vocab);
}

}  // namespace chesslm::train
