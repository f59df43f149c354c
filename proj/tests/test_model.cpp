#include "doctest.h"

#include <cmath>
#include <cstring>

#include "chesslm/model.hpp"

using namespace chesslm;
using namespace chesslm::nn;

namespace {

ModelConfig tiny_config(AttentionMode mode, int vocab = 11) {
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    cfg.max_seq_len = 24;
    cfg.vocab_size = vocab;
    cfg.attention_mode = mode;
    return cfg;
}

Model random_model(AttentionMode mode, uint64_t seed, int vocab = 11) {
    Model model(tiny_config(mode, vocab));
    Rng rng(seed);
    model.init_parameters(rng);
    return model;
}

std::vector<int> random_ids(Rng& rng, int len, int vocab) {
    std::vector<int> ids(static_cast<size_t>(len));
    for (auto& id : ids) {
        id = static_cast<int>(rng.below(static_cast<uint64_t>(vocab)));
    }
    return ids;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig cfg = tiny_config(AttentionMode::causal);
    CHECK_NOTHROW(cfg.validate());
    cfg.d_model = 15;
    CHECK_THROWS_AS(cfg.validate(), NumericError);
    cfg = tiny_config(AttentionMode::causal);
    cfg.vocab_size = 0;
    CHECK_THROWS_AS(cfg.validate(), NumericError);
    cfg = tiny_config(AttentionMode::causal);
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(cfg.validate(), NumericError);
}

TEST_CASE("causal mode: perturbing a suffix token leaves prefix logits bit-identical") {
    const Model model = random_model(AttentionMode::causal, 42);
    Rng rng(7);
    const int t_len = 20;
    const int vocab = model.config().vocab_size;
    for (int trial = 0; trial < 20; ++trial) {
        auto ids = random_ids(rng, t_len, vocab);
        const std::vector<uint8_t> pad(ids.size(), 1);
        const auto before = model.forward(ids, pad);
        const int cut = 1 + static_cast<int>(rng.below(t_len - 1));
        const int pos = cut + static_cast<int>(rng.below(static_cast<uint64_t>(t_len - cut)));
        ids[static_cast<size_t>(pos)] = (ids[static_cast<size_t>(pos)] + 1) % vocab;
        const auto after = model.forward(ids, pad);
        // Rows 0..cut-1 must match bit-for-bit.
        CHECK(std::memcmp(before.data(), after.data(),
                          sizeof(double) * static_cast<size_t>(cut) * vocab) == 0);
    }
}

TEST_CASE("bidirectional mode: a last-token perturbation reaches position zero") {
    const Model model = random_model(AttentionMode::bidirectional, 43);
    Rng rng(8);
    const int vocab = model.config().vocab_size;
    auto ids = random_ids(rng, 16, vocab);
    const std::vector<uint8_t> pad(ids.size(), 1);
    const auto before = model.forward(ids, pad);
    ids.back() = (ids.back() + 1) % vocab;
    const auto after = model.forward(ids, pad);
    bool row0_changed = false;
    for (int j = 0; j < vocab; ++j) {
        if (before[static_cast<size_t>(j)] != after[static_cast<size_t>(j)]) {
            row0_changed = true;
        }
    }
    CHECK(row0_changed);
}

TEST_CASE("an all-pad suffix leaves content logits unchanged") {
    for (AttentionMode mode : {AttentionMode::causal, AttentionMode::bidirectional}) {
        const Model model = random_model(mode, 44);
        Rng rng(9);
        const int vocab = model.config().vocab_size;
        const auto content = random_ids(rng, 10, vocab);
        const std::vector<uint8_t> content_pad(content.size(), 1);
        const auto plain = model.forward(content, content_pad);

        auto padded = content;
        std::vector<uint8_t> pad_mask(content.size(), 1);
        for (int i = 0; i < 6; ++i) {
            padded.push_back(2);
            pad_mask.push_back(0);
        }
        const auto with_pad = model.forward(padded, pad_mask);
        CHECK(std::memcmp(plain.data(), with_pad.data(),
                          sizeof(double) * content.size() * static_cast<size_t>(vocab)) == 0);
    }
}

TEST_CASE("softmax rows of model logits are normalized") {
    const Model model = random_model(AttentionMode::causal, 45);
    Rng rng(10);
    const auto ids = random_ids(rng, 12, model.config().vocab_size);
    const auto logits = model.forward(ids, std::vector<uint8_t>(ids.size(), 1));
    const auto probs = softmax_rows(logits, 12, model.config().vocab_size);
    for (int t = 0; t < 12; ++t) {
        double sum = 0.0;
        for (int j = 0; j < model.config().vocab_size; ++j) {
            sum += probs[static_cast<size_t>(t) * model.config().vocab_size + j];
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("masked CE on uniform logits equals ln V at a single masked position") {
    const int vocab = 7;
    const int t_len = 5;
    const std::vector<double> logits(static_cast<size_t>(t_len) * vocab, 0.25);
    std::vector<int> targets(t_len, 3);
    std::vector<uint8_t> w(t_len, 0);
    w[2] = 1;
    const auto loss = masked_ce_loss(logits, targets, w, vocab);
    CHECK(loss.token_count == 1);
    CHECK(loss.loss_sum == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("masked CE is zero when the target has probability one") {
    const int vocab = 5;
    std::vector<double> logits(vocab, 0.0);
    logits[4] = 600.0;  // softmax saturates to certainty
    const std::vector<int> targets = {4};
    const std::vector<uint8_t> w = {1};
    const auto loss = masked_ce_loss(logits, targets, w, vocab);
    CHECK(loss.loss_sum == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("masked CE matches a brute-force recomputation on random fixtures") {
    Rng rng(77);
    const int vocab = 9;
    const int t_len = 8;
    std::vector<double> logits(static_cast<size_t>(t_len) * vocab);
    for (auto& v : logits) {
        v = rng.gauss();
    }
    std::vector<int> targets(t_len);
    std::vector<uint8_t> w(t_len);
    for (int t = 0; t < t_len; ++t) {
        targets[static_cast<size_t>(t)] = static_cast<int>(rng.below(vocab));
        w[static_cast<size_t>(t)] = rng.below(2) ? 1 : 0;
    }
    w[3] = 1;  // keep the mask nonempty

    double expected = 0.0;
    for (int t = 0; t < t_len; ++t) {
        if (!w[static_cast<size_t>(t)]) {
            continue;
        }
        double denom = 0.0;
        for (int j = 0; j < vocab; ++j) {
            denom += std::exp(logits[static_cast<size_t>(t) * vocab + j]);
        }
        expected -= std::log(
            std::exp(logits[static_cast<size_t>(t) * vocab +
                            targets[static_cast<size_t>(t)]]) / denom);
    }
    const auto loss = masked_ce_loss(logits, targets, w, vocab);
    CHECK(loss.loss_sum == doctest::Approx(expected).epsilon(1e-10));
    CHECK_THROWS_AS(masked_ce_loss(logits, targets, std::vector<uint8_t>(t_len, 0), vocab),
                    NumericError);
}

TEST_CASE("loss gradient w.r.t. logits is exactly zero off the masked rows") {
    Rng rng(78);
    const int vocab = 9;
    const int t_len = 10;
    std::vector<double> logits(static_cast<size_t>(t_len) * vocab);
    for (auto& v : logits) {
        v = rng.gauss();
    }
    std::vector<int> targets(t_len, 1);
    std::vector<uint8_t> w(t_len, 0);
    w[4] = w[5] = 1;
    const auto dlogits = masked_ce_loss_backward(logits, targets, w, vocab, 1.0);
    for (int t = 0; t < t_len; ++t) {
        for (int j = 0; j < vocab; ++j) {
            const double g = dlogits[static_cast<size_t>(t) * vocab + j];
            if (w[static_cast<size_t>(t)]) {
                continue;
            }
            CHECK(g == 0.0);
        }
    }
    // Masked rows carry softmax-minus-onehot.
    double row_sum = 0.0;
    for (int j = 0; j < vocab; ++j) {
        row_sum += dlogits[4 * static_cast<size_t>(vocab) + j];
    }
    CHECK(row_sum == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("analytic parameter gradients match central finite differences") {
    for (AttentionMode mode : {AttentionMode::causal, AttentionMode::bidirectional}) {
        CAPTURE(attention_mode_name(mode));
        Model model = random_model(mode, 99);
        Rng rng(100);
        const int vocab = model.config().vocab_size;
        text::TokenSequence sample;
        sample.ids = random_ids(rng, 12, vocab);
        sample.attention_pad_mask.assign(12, 1);
        // Pad tail exercises the pad-exclusion path under the gradient.
        sample.ids[10] = 2;
        sample.ids[11] = 2;
        sample.attention_pad_mask[10] = 0;
        sample.attention_pad_mask[11] = 0;
        sample.w.assign(12, 0);
        sample.w[4] = sample.w[5] = sample.w[8] = 1;

        const auto targets = shifted_targets(sample.ids);
        auto loss_at = [&]() {
            const auto logits = model.forward(sample.ids, sample.attention_pad_mask);
            return masked_ce_loss(logits, targets, sample.w, vocab).loss_sum;
        };

        std::vector<double> grad(model.params().size(), 0.0);
        const auto cache = model.forward_cached(sample.ids, sample.attention_pad_mask);
        const auto dlogits = masked_ce_loss_backward(cache.logits, targets, sample.w, vocab, 1.0);
        model.backward(cache, dlogits, grad);

        // Sample >= 1% of parameters, covering every named tensor.
        Rng pick(101);
        size_t checked = 0;
        size_t worst_index = 0;
        double worst_rel = 0.0;
        const double eps = 1e-5;
        for (const auto& spec : model.layout().specs()) {
            const size_t samples_here =
                std::max<size_t>(2, spec.size / 50);  // ~2% of each tensor
            for (size_t s = 0; s < samples_here; ++s) {
                const size_t i = spec.offset + pick.below(spec.size);
                const double saved = model.params()[i];
                model.params()[i] = saved + eps;
                const double up = loss_at();
                model.params()[i] = saved - eps;
                const double down = loss_at();
                model.params()[i] = saved;
                const double fd = (up - down) / (2.0 * eps);
                const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
                const double rel = std::abs(fd - grad[i]) / denom;
                if (rel > worst_rel) {
                    worst_rel = rel;
                    worst_index = i;
                }
                ++checked;
            }
        }
        CAPTURE(checked);
        CAPTURE(worst_index);
        CHECK(checked >= model.params().size() / 100);
        CHECK(worst_rel < 1e-4);
    }
}

TEST_CASE("generate at temperature zero is deterministic and respects budgets") {
    const Model model = random_model(AttentionMode::causal, 55);
    Rng rng_a(1);
    Rng rng_b(2);
    const std::vector<int> prompt = {0, 3, 4, 5};
    const auto out_a = model.generate(prompt, 0.0, 8, 1, rng_a);
    const auto out_b = model.generate(prompt, 0.0, 8, 1, rng_b);
    CHECK(out_a == out_b);
    CHECK(out_a.size() >= prompt.size());

    const auto unchanged = model.generate(prompt, 0.0, 0, 1, rng_a);
    CHECK(unchanged == prompt);

    CHECK_THROWS_AS(model.generate({}, 0.0, 4, 1, rng_a), NumericError);
    CHECK_THROWS_AS(model.generate(std::vector<int>(99, 3), 0.0, 4, 1, rng_a), NumericError);
    CHECK_THROWS_AS(model.generate(prompt, -1.0, 4, 1, rng_a), NumericError);
}

TEST_CASE("a peaked hand-built model generates a fixed continuation") {
    // Zeroed parameters except an output bias ramp: argmax is always the
    // same token regardless of input.
    ModelConfig cfg = tiny_config(AttentionMode::causal);
    Model model(cfg);
    double* out_b = model.tensor("out.b");
    out_b[6] = 5.0;
    Rng rng(3);
    const auto out = model.generate({0, 3}, 0.0, 3, 1, rng);
    CHECK(out == std::vector<int>{0, 3, 6, 6, 6});
}

TEST_CASE("teacher-forced predictions read argmax at masked positions only") {
    const Model model = random_model(AttentionMode::causal, 56);
    Rng rng(4);
    text::TokenSequence sample;
    sample.ids = random_ids(rng, 10, model.config().vocab_size);
    sample.attention_pad_mask.assign(10, 1);
    sample.w.assign(10, 0);
    sample.w[6] = sample.w[7] = 1;
    const auto preds = model.teacher_forced_predictions(sample);
    REQUIRE(preds.size() == 2);

    const auto logits = model.forward(sample.ids, sample.attention_pad_mask);
    const int vocab = model.config().vocab_size;
    for (size_t k = 0; k < 2; ++k) {
        const size_t row = k == 0 ? 6 : 7;
        int best = 0;
        for (int j = 1; j < vocab; ++j) {
            if (logits[row * vocab + j] > logits[row * vocab + best]) {
                best = j;
            }
        }
        CHECK(preds[k] == best);
    }
}

TEST_CASE("single-token target: teacher-forced equals greedy decoding") {
    const Model model = random_model(AttentionMode::causal, 57);
    Rng rng(5);
    std::vector<int> prompt = random_ids(rng, 7, model.config().vocab_size);
    prompt[0] = 0;

    text::TokenSequence sample;
    sample.ids = prompt;
    sample.ids.push_back(4);  // arbitrary single-token target
    sample.attention_pad_mask.assign(sample.ids.size(), 1);
    sample.w.assign(sample.ids.size(), 0);
    sample.w[prompt.size() - 1] = 1;

    const auto forced = model.teacher_forced_predictions(sample);
    Rng gen_rng(6);
    const auto generated = model.generate(prompt, 0.0, 1, 1, gen_rng);
    REQUIRE(forced.size() == 1);
    CHECK(generated.back() == forced[0]);
}

TEST_CASE("checkpoints round-trip config, step, vocab hash, and parameters") {
    Model model = random_model(AttentionMode::bidirectional, 58);
    const std::string path = "/tmp/chesslm_test_ckpt.bin";
    save_checkpoint(path, model, "cafebabe", 123);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.config == model.config());
    CHECK(loaded.vocab_hash == "cafebabe");
    CHECK(loaded.step == 123);
    REQUIRE(loaded.model.params().size() == model.params().size());
    for (size_t i = 0; i < model.params().size(); i += 97) {
        CHECK(loaded.model.params()[i] ==
              doctest::Approx(model.params()[i]).epsilon(1e-6));
    }
    CHECK_THROWS_AS(load_checkpoint("/tmp/does_not_exist_ckpt.bin"), ParseError);
}

TEST_CASE("dropout masks scale the branches and vanish at eval") {
    ModelConfig cfg = tiny_config(AttentionMode::causal);
    cfg.dropout = 0.5;
    Model model(cfg);
    Rng init(59);
    model.init_parameters(init);
    const std::vector<int> ids = {0, 3, 4, 5, 6};
    const std::vector<uint8_t> pad(ids.size(), 1);

    Rng drop_a(60);
    Rng drop_b(60);
    const auto with_a = model.forward_cached(ids, pad, &drop_a);
    const auto with_b = model.forward_cached(ids, pad, &drop_b);
    CHECK(with_a.logits == with_b.logits);  // same dropout stream

    const auto eval_logits = model.forward(ids, pad);
    CHECK(eval_logits != with_a.logits);
}
