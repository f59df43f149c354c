#include "doctest.h"

#include <cmath>

#include "chesslm/dataset.hpp"
#include "chesslm/evalsuite.hpp"
#include "chesslm/train.hpp"

using namespace chesslm;
using namespace chesslm::eval;

namespace {

nn::ModelConfig eval_model_config(int vocab, nn::AttentionMode mode) {
    nn::ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    cfg.max_seq_len = 512;
    cfg.vocab_size = vocab;
    cfg.attention_mode = mode;
    return cfg;
}

text::Vocabulary chess_vocab() {
    return text::build_vocab(
        {"abcdefgh1234567890pnbrqkPNBRQKOx=+#-/.,'[]?! AB",
         "You are a chess grandmaster. This is the board in FEN notation: The legal moves "
         "are: Which of these is the best move? Best move: w"});
}

}  // namespace

TEST_CASE("SAN shape grammar accepts real moves and rejects junk") {
    for (const char* good :
         {"e4", "exd5", "Nf3", "Nxe5", "Nbd2", "N1f3", "Qh4e1", "O-O", "O-O-O", "e8=Q",
          "exd8=N+", "Qxf7#", "Rad1", "h3", "bxa1=R"}) {
        CAPTURE(good);
        CHECK(is_san_shaped(good));
    }
    for (const char* bad : {"", "Qz9", "e9", "i4", "Nf", "O-O-O-O", "xe4", "e4=Q", "4e",
                            "Pe4", "Nf34", "e2e4", "move", "??"}) {
        CAPTURE(bad);
        CHECK(!is_san_shaped(bad));
    }
}

TEST_CASE("judge_move categories are exclusive, exhaustive, and ordered") {
    const auto board = chess::start_position();
    CHECK(judge_move("Qz9", board, "e4").category == MoveCategory::malformed);
    // SAN-shaped but impossible here.
    CHECK(judge_move("Qh4", board, "e4").category == MoveCategory::valid_san_illegal);
    CHECK(judge_move("Nf3", board, "e4").category == MoveCategory::legal_not_best);
    CHECK(judge_move("e4", board, "e4").category == MoveCategory::best);
    // Suffix-insensitive matching.
    CHECK(judge_move("e4+", board, "e4").category == MoveCategory::best);
}

TEST_CASE("a pinned-knight move is valid SAN but illegal") {
    // The d7 knight is pinned to the king by the e-file... use a rook pin.
    const auto board =
        chess::parse_fen("4r1k1/8/8/8/8/8/4N3/4K3 w - - 0 1");
    const auto judgment = judge_move("Nc3", board, "Kd1");
    CHECK(judgment.category == MoveCategory::valid_san_illegal);
    CHECK(judge_move("Kd1", board, "Kd1").category == MoveCategory::best);
}

TEST_CASE("engine best always judges as best on annotated positions") {
    const auto records = engine::annotate_dataset_mock(
        {chess::kStartFen,
         "r1bqkbnr/1ppp1ppp/p1n5/1B2p3/4P3/5N2/PPPP1PPP/RNBQK2R w KQkq - 0 4"},
        10);
    for (const auto& r : records) {
        CHECK(judge_move(r.best_move, chess::parse_fen(r.fen), r.best_move).category ==
              MoveCategory::best);
    }
}

TEST_CASE("legal_move_histogram bins by move count and skips bad FENs") {
    std::vector<std::string> diagnostics;
    const auto histogram = legal_move_histogram(
        {chess::kStartFen, chess::kStartFen, "6k1/5ppp/8/8/8/8/5PPP/R5K1 b - - 1 1",
         "rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3", "garbage"},
        &diagnostics);
    CHECK(histogram.at(20) == 2);
    REQUIRE(diagnostics.size() == 1);
    // The fool's mate position has zero legal moves.
    CHECK(histogram.at(0) == 1);
    const std::string csv = histogram_to_csv(histogram);
    CHECK(csv.find("legal_moves,count") == 0);
    CHECK(csv.find("20,2") != std::string::npos);
}

TEST_CASE("random-game histogram has low-count mass from in-check positions") {
    Rng rng(3);
    std::vector<std::string> fens;
    for (int g = 0; g < 30; ++g) {
        chess::BoardState board = chess::start_position();
        for (int ply = 0; ply < 40; ++ply) {
            const auto moves = chess::generate_legal(board);
            if (moves.empty()) {
                break;
            }
            board = chess::apply_move_unchecked(board, moves[rng.below(moves.size())]);
            fens.push_back(chess::serialize_fen(board));
        }
    }
    const auto histogram = legal_move_histogram(fens);
    int low = 0;
    int total = 0;
    for (const auto& [bin, count] : histogram) {
        total += count;
        if (bin <= 8) {
            low += count;
        }
    }
    CHECK(total == static_cast<int>(fens.size()));
    CHECK(low > 0);  // the in-check tail exists
}

TEST_CASE("mean_ce of a uniform model is ln V for single-token spans") {
    const auto vocab = chess_vocab();
    nn::Model uniform(eval_model_config(vocab.size(), nn::AttentionMode::causal));

    // Hand-built single-masked-position samples.
    std::vector<text::TokenSequence> samples;
    for (int k = 0; k < 4; ++k) {
        text::TokenSequence s;
        s.ids = {0, 5 + k, 6, 7 + k, 1};
        s.attention_pad_mask.assign(5, 1);
        s.w.assign(5, 0);
        s.w[2] = 1;
        samples.push_back(s);
    }
    CHECK(mean_ce(uniform, samples) ==
          doctest::Approx(std::log(vocab.size())).epsilon(1e-9));

    // k masked tokens cost k ln V.
    for (auto& s : samples) {
        s.w[1] = 1;
        s.w[3] = 1;
    }
    CHECK(mean_ce(uniform, samples) ==
          doctest::Approx(3.0 * std::log(vocab.size())).epsilon(1e-9));
}

TEST_CASE("evaluate upholds the monotone rate chain on a random model") {
    const auto vocab = chess_vocab();
    nn::Model model(eval_model_config(vocab.size(), nn::AttentionMode::causal));
    Rng rng(5);
    model.init_parameters(rng);

    const auto records = engine::annotate_dataset_mock(
        data::game_positions({"e4", "e5", "Nf3", "Nc6", "Bb5", "a6", "Ba4", "Nf6", "O-O"},
                             false),
        10);
    std::vector<EvalSample> samples;
    for (const auto& r : records) {
        samples.push_back(make_fen_eval_sample(r, prompt::builtin_template(1), vocab));
    }
    for (EvalMode mode : {EvalMode::teacher_forced, EvalMode::autoregressive}) {
        const auto report = evaluate(model, samples, vocab, mode);
        CHECK(report.n_samples == static_cast<int>(samples.size()));
        CHECK(report.best_rate <= report.legal_rate);
        CHECK(report.legal_rate <= report.valid_rate);
        CHECK(report.valid_rate <= 1.0);
    }
    CHECK_THROWS_AS(evaluate(model, {}, vocab, EvalMode::teacher_forced), NumericError);
}

TEST_CASE("an untrained near-uniform model scores near the uniform-string chance rate") {
    const auto vocab = chess_vocab();
    nn::Model model(eval_model_config(vocab.size(), nn::AttentionMode::causal));
    Rng rng(6);
    model.init_parameters(rng, 1e-4);  // tiny init: output is almost uniform

    const auto records = engine::annotate_dataset_mock(
        data::game_positions({"d4", "d5", "c4", "e6", "Nc3", "Nf6", "Bg5", "Be7"}, false),
        10);
    std::vector<EvalSample> samples;
    for (const auto& r : records) {
        samples.push_back(make_fen_eval_sample(r, prompt::builtin_template(1), vocab));
    }
    const auto report = evaluate(model, samples, vocab, EvalMode::autoregressive);

    // Monte-Carlo chance rate: uniform token strings judged the same way.
    Rng mc(7);
    int valid = 0;
    const int trials = 4000;
    const auto board = chess::start_position();
    for (int t = 0; t < trials; ++t) {
        std::string candidate;
        for (int k = 0; k < 12; ++k) {
            const int id = static_cast<int>(mc.below(vocab.size()));
            if (id < 3) {
                break;
            }
            const std::string& sym = vocab.symbol(id);
            if (sym == " ") {
                break;
            }
            candidate += sym;
        }
        if (judge_move(candidate, board, "e4").category != MoveCategory::malformed) {
            ++valid;
        }
    }
    const double chance = static_cast<double>(valid) / trials;
    CHECK(std::abs(report.valid_rate - chance) < 0.05);
}

TEST_CASE("single-token targets give exactly zero exposure-bias delta") {
    // Move-level vocabulary: each SAN is one symbol.
    std::vector<std::string> sans;
    const auto board = chess::start_position();
    for (const auto& m : chess::legal_moves(board)) {
        sans.push_back(m.san);
    }
    const auto vocab = text::build_move_vocab(sans);
    nn::Model model(eval_model_config(vocab.size(), nn::AttentionMode::causal));
    Rng rng(8);
    model.init_parameters(rng);

    std::vector<EvalSample> samples;
    for (int k = 0; k < 6; ++k) {
        EvalSample s;
        s.fen = chess::kStartFen;
        s.engine_best = sans[static_cast<size_t>(k * 3) % sans.size()];
        s.single_token_target = true;
        s.prompt_ids = {0, vocab.id_of(sans[0]), vocab.id_of(sans[1])};
        s.forced.ids = s.prompt_ids;
        s.forced.ids.push_back(vocab.id_of(s.engine_best));
        s.forced.attention_pad_mask.assign(s.forced.ids.size(), 1);
        s.forced.w.assign(s.forced.ids.size(), 0);
        s.forced.w[s.forced.ids.size() - 2] = 1;
        samples.push_back(std::move(s));
    }
    const auto result = exposure_bias_delta(model, samples, vocab);
    CHECK(result.best_delta == 0.0);
    CHECK(result.valid_delta == 0.0);
    CHECK(result.legal_delta == 0.0);
}

TEST_CASE("a stop-blind model shows teacher-forced above autoregressive") {
    // Train a tiny model that reproduces the span but continues with a
    // letter instead of stopping: autoregressive decoding overruns the
    // move, teacher forcing does not.
    const auto vocab = chess_vocab();
    nn::ModelConfig cfg = eval_model_config(vocab.size(), nn::AttentionMode::causal);
    cfg.n_layers = 2;
    cfg.max_seq_len = 48;
    nn::Model model(cfg);
    Rng rng(9);
    model.init_parameters(rng);

    const std::string cue = "Best move: ";
    const std::string target = "Qa4";
    // Conflicting continuation context teaches p('b' | ..."Qa4") to stay
    // high while the end-of-text transition after the real span is untrained.
    const std::string adversary = "Qa4b";

    auto build = [&](const std::string& prompt_head, const std::string& span,
                     int pad_to) {
        text::TokenSequence s;
        s.ids.push_back(text::Vocabulary::kBeginId);
        for (int id : text::char_tokenize(prompt_head + cue, vocab)) {
            s.ids.push_back(id);
        }
        const auto span_ids = text::char_tokenize(span, vocab);
        for (int id : span_ids) {
            s.ids.push_back(id);
        }
        s.ids.push_back(text::Vocabulary::kEndId);
        const int content = s.length();
        s.attention_pad_mask.assign(static_cast<size_t>(content), 1);
        s.w.assign(static_cast<size_t>(content), 0);
        // Mask the span predictions only (not the end-of-text transition).
        for (size_t k = 0; k < span_ids.size(); ++k) {
            s.w[content - 2 - span_ids.size() + k] = 1;
        }
        return pad_to > 0 ? text::pad_sequence(s, pad_to) : s;
    };

    std::vector<text::TokenSequence> train_set;
    for (int i = 0; i < 4; ++i) {
        train_set.push_back(build("position A. ", target, 40));
        train_set.push_back(build("position B. ", adversary, 40));
    }
    train::ShuffledStream stream(train_set, 11);
    train::TrainConfig tc;
    tc.learning_rate = 2e-2;
    tc.min_lr = 2e-3;
    tc.warmup_iters = 10;
    tc.lr_decay_iters = 300;
    tc.max_iters = 300;
    tc.batch_size = 8;
    tc.weight_decay = 0.0;
    tc.seed = 12;
    train::train(model, stream, tc);

    // Eval sample: prompt A with a real position where Qa4 is legal.
    const auto open_diag = chess::pgn_to_fen({"c4", "e5"});
    REQUIRE_NOTHROW(chess::parse_san(open_diag, "Qa4"));
    EvalSample sample;
    sample.fen = chess::serialize_fen(open_diag);
    sample.engine_best = target;
    sample.forced = build("position A. ", target, 0);
    sample.prompt_ids.push_back(text::Vocabulary::kBeginId);
    for (int id : text::char_tokenize("position A. " + cue, vocab)) {
        sample.prompt_ids.push_back(id);
    }
    const std::vector<EvalSample> samples(4, sample);
    const auto result = exposure_bias_delta(model, samples, vocab);
    CHECK(result.teacher_forced.best_rate == 1.0);
    CHECK(result.autoregressive.best_rate < result.teacher_forced.best_rate);
    CHECK(result.best_delta > 0.0);
}

TEST_CASE("report CSV and table render all rates") {
    EvalReport r;
    r.n_samples = 100;
    r.valid_rate = 0.99;
    r.legal_rate = 0.97;
    r.best_rate = 0.58;
    r.mode = EvalMode::teacher_forced;
    const std::string csv = reports_to_csv({r});
    CHECK(csv.find("mode,n_samples,valid_rate,legal_rate,best_rate") == 0);
    CHECK(csv.find("teacher_forced,100,") != std::string::npos);
    const std::string table = report_table({r});
    CHECK(table.find("58.00%") != std::string::npos);
}
