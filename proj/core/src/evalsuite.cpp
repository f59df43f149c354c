#include "chesslm/evalsuite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "chesslm/dataset.hpp"
#include "chesslm/train.hpp"

namespace chesslm::eval {

namespace {

bool is_file_char(char c) { return c >= 'a' && c <= 'h'; }
bool is_rank_char(char c) { return c >= '1' && c <= '8'; }
bool is_promo_char(char c) { return c == 'Q' || c == 'R' || c == 'B' || c == 'N'; }

std::string strip_check_suffix(std::string s) {
    if (!s.empty() && (s.back() == '+' || s.back() == '#')) {
        s.pop_back();
    }
    return s;
}

void run_parallel(size_t n, int n_threads, const std::function<void(size_t)>& fn) {
    int threads = n_threads > 0 ? n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads == 1) {
        for (size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                while (true) {
                    const size_t i = cursor.fetch_add(1);
                    if (i >= n) {
                        return;
                    }
                    fn(i);
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

}  // namespace

bool is_san_shaped(const std::string& text) {
    std::string s = strip_check_suffix(text);
    if (s.empty()) {
        return false;
    }
    if (s == "O-O" || s == "O-O-O") {
        return true;
    }
    const char head = s[0];
    if (head == 'K' || head == 'Q' || head == 'R' || head == 'B' || head == 'N') {
        // [KQRBN] [a-h]? [1-8]? x? [a-h][1-8]
        std::string body = s.substr(1);
        if (body.size() < 2 || body.size() > 5) {
            return false;
        }
        const std::string dest = body.substr(body.size() - 2);
        if (!is_file_char(dest[0]) || !is_rank_char(dest[1])) {
            return false;
        }
        std::string prefix = body.substr(0, body.size() - 2);
        if (!prefix.empty() && prefix.back() == 'x') {
            prefix.pop_back();
        }
        if (prefix.empty()) {
            return true;
        }
        if (prefix.size() == 1) {
            return is_file_char(prefix[0]) || is_rank_char(prefix[0]);
        }
        if (prefix.size() == 2) {
            return is_file_char(prefix[0]) && is_rank_char(prefix[1]);
        }
        return false;
    }
    if (!is_file_char(head)) {
        return false;
    }
    // Pawn move: ([a-h]x)? [a-h][1-8] (=[QRBN])?, promotion only on a back rank.
    std::string body = s;
    if (body.size() >= 4 && body[body.size() - 2] == '=') {
        if (!is_promo_char(body.back())) {
            return false;
        }
        body = body.substr(0, body.size() - 2);
        if (body.back() != '1' && body.back() != '8') {
            return false;
        }
    }
    if (body.size() == 2) {
        return is_rank_char(body[1]);
    }
    if (body.size() == 4 && body[1] == 'x') {
        return is_file_char(body[2]) && is_rank_char(body[3]);
    }
    return false;
}

MoveJudgment judge_move(const std::string& output, const chess::BoardState& board,
                        const std::string& engine_best) {
    MoveJudgment judgment;
    judgment.raw_output = output;
    const std::string candidate = trim(output);
    if (!is_san_shaped(candidate)) {
        judgment.category = MoveCategory::malformed;
        return judgment;
    }
    const std::string bare = strip_check_suffix(candidate);
    bool legal = false;
    for (const auto& m : chess::legal_moves(board)) {
        if (strip_check_suffix(m.san) == bare) {
            legal = true;
            break;
        }
    }
    if (!legal) {
        judgment.category = MoveCategory::valid_san_illegal;
        return judgment;
    }
    judgment.category = strip_check_suffix(engine_best) == bare ? MoveCategory::best
                                                                : MoveCategory::legal_not_best;
    return judgment;
}

std::string eval_mode_name(EvalMode mode) {
    return mode == EvalMode::teacher_forced ? "teacher_forced" : "autoregressive";
}

EvalSample make_fen_eval_sample(const engine::AnnotatedPosition& record,
                                const prompt::PromptTemplate& tmpl,
                                const text::Vocabulary& vocab) {
    EvalSample sample;
    sample.fen = record.fen;
    sample.engine_best = record.best_move;
    sample.forced = train::make_fen_sample(record.fen, record.legal_moves, record.best_move,
                                           tmpl, vocab, 0);
    sample.prompt_ids =
        train::make_fen_prompt_ids(record.fen, record.legal_moves, tmpl, vocab);
    return sample;
}

EvalSample make_pgn_eval_sample(const std::vector<std::string>& prefix_moves,
                                const engine::AnnotatedPosition& record,
                                const text::Vocabulary& vocab) {
    EvalSample sample;
    sample.fen = record.fen;
    sample.engine_best = record.best_move;

    const auto board = chess::parse_fen(record.fen);
    std::string cue;
    if (board.side_to_move == chess::Color::white) {
        cue = std::to_string(prefix_moves.size() / 2 + 1) + ". ";
    }
    std::string prompt_text;
    if (!prefix_moves.empty()) {
        prompt_text = data::movetext_for_training(prefix_moves) + " ";
    }
    prompt_text += cue;

    sample.prompt_ids.push_back(text::Vocabulary::kBeginId);
    for (int id : text::char_tokenize(prompt_text, vocab)) {
        sample.prompt_ids.push_back(id);
    }

    text::TokenSequence forced;
    forced.ids = sample.prompt_ids;
    const auto span = text::char_tokenize(record.best_move, vocab);
    for (int id : span) {
        forced.ids.push_back(id);
    }
    const int content = forced.length();
    forced.attention_pad_mask.assign(static_cast<size_t>(content), 1);
    forced.w.assign(static_cast<size_t>(content), 0);
    for (size_t k = 0; k < span.size(); ++k) {
        forced.w[forced.ids.size() - span.size() + k - 1] = 1;
    }
    sample.forced = std::move(forced);
    return sample;
}

namespace {

std::string decode_candidate(const std::vector<int>& ids, const text::Vocabulary& vocab,
                             bool single_token) {
    if (single_token) {
        if (ids.empty() || ids[0] < 3) {
            return "";
        }
        return vocab.symbol(ids[0]);
    }
    std::string out;
    for (int id : ids) {
        if (id == text::Vocabulary::kEndId || id == text::Vocabulary::kPadId ||
            id == text::Vocabulary::kBeginId) {
            break;
        }
        const std::string& sym = vocab.symbol(id);
        if (sym == " " || sym == "\t" || sym == "\n") {
            break;
        }
        out += sym;
    }
    return out;
}

}  // namespace

EvalReport evaluate(const nn::Model& model, const std::vector<EvalSample>& samples,
                    const text::Vocabulary& vocab, EvalMode mode, int n_threads) {
    if (samples.empty()) {
        throw NumericError("evaluate needs a nonempty dataset");
    }
    if (model.config().vocab_size != vocab.size()) {
        throw NumericError("model vocabulary size does not match the dataset vocabulary");
    }
    std::vector<MoveCategory> categories(samples.size());
    run_parallel(samples.size(), n_threads, [&](size_t i) {
        const EvalSample& sample = samples[i];
        std::string candidate;
        if (mode == EvalMode::teacher_forced) {
            const auto preds = model.teacher_forced_predictions(sample.forced);
            candidate = decode_candidate(preds, vocab, sample.single_token_target);
        } else {
            const int budget = sample.single_token_target ? 1 : 12;
            Rng rng(0);  // temperature 0, rng unused
            const auto out = model.generate(sample.prompt_ids, 0.0, budget,
                                            text::Vocabulary::kEndId, rng);
            const std::vector<int> generated(out.begin() + static_cast<long>(
                                                 sample.prompt_ids.size()),
                                             out.end());
            candidate = decode_candidate(generated, vocab, sample.single_token_target);
        }
        categories[i] =
            judge_move(candidate, chess::parse_fen(sample.fen), sample.engine_best).category;
    });

    EvalReport report;
    report.mode = mode;
    report.n_samples = static_cast<int>(samples.size());
    int valid = 0;
    int legal = 0;
    int best = 0;
    for (const auto c : categories) {
        if (c != MoveCategory::malformed) {
            ++valid;
        }
        if (c == MoveCategory::legal_not_best || c == MoveCategory::best) {
            ++legal;
        }
        if (c == MoveCategory::best) {
            ++best;
        }
    }
    report.valid_rate = static_cast<double>(valid) / report.n_samples;
    report.legal_rate = static_cast<double>(legal) / report.n_samples;
    report.best_rate = static_cast<double>(best) / report.n_samples;
    return report;
}

ExposureBiasResult exposure_bias_delta(const nn::Model& model,
                                       const std::vector<EvalSample>& samples,
                                       const text::Vocabulary& vocab, int n_threads) {
    ExposureBiasResult result;
    result.teacher_forced = evaluate(model, samples, vocab, EvalMode::teacher_forced, n_threads);
    result.autoregressive = evaluate(model, samples, vocab, EvalMode::autoregressive, n_threads);
    result.valid_delta = result.teacher_forced.valid_rate - result.autoregressive.valid_rate;
    result.legal_delta = result.teacher_forced.legal_rate - result.autoregressive.legal_rate;
    result.best_delta = result.teacher_forced.best_rate - result.autoregressive.best_rate;
    return result;
}

double mean_ce(const nn::Model& model, const std::vector<text::TokenSequence>& samples,
               int n_threads) {
    if (samples.empty()) {
        throw NumericError("mean_ce needs a nonempty dataset");
    }
    std::vector<double> per_sample(samples.size(), 0.0);
    run_parallel(samples.size(), n_threads, [&](size_t i) {
        const auto& sample = samples[i];
        const auto logits = model.forward(sample.ids, sample.attention_pad_mask);
        const auto targets = nn::shifted_targets(sample.ids);
        per_sample[i] =
            nn::masked_ce_loss(logits, targets, sample.w, model.config().vocab_size).loss_sum;
    });
    double total = 0.0;
    for (double v : per_sample) {
        total += v;
    }
    return total / static_cast<double>(samples.size());
}

std::map<int, int> legal_move_histogram(const std::vector<std::string>& fens,
                                        std::vector<std::string>* diagnostics) {
    std::map<int, int> histogram;
    for (const auto& fen : fens) {
        try {
            const auto board = chess::parse_fen(fen);
            histogram[static_cast<int>(chess::generate_legal(board).size())] += 1;
        } catch (const std::exception& e) {
            if (diagnostics) {
                diagnostics->push_back("skipped \"" + fen + "\": " + e.what());
            }
        }
    }
    return histogram;
}

std::string histogram_to_csv(const std::map<int, int>& histogram) {
    std::string out = "legal_moves,count\n";
    for (const auto& [bin, count] : histogram) {
        out += std::to_string(bin) + "," + std::to_string(count) + "\n";
    }
    return out;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::string out = "mode,n_samples,valid_rate,legal_rate,best_rate\n";
    for (const auto& r : reports) {
        out += eval_mode_name(r.mode) + "," + std::to_string(r.n_samples) + "," +
               format_double(r.valid_rate) + "," + format_double(r.legal_rate) + "," +
               format_double(r.best_rate) + "\n";
    }
    return out;
}

std::string report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "mode             samples   valid    legal    best\n";
    for (const auto& r : reports) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-16s %7d  %6.2f%%  %6.2f%%  %6.2f%%\n",
                      eval_mode_name(r.mode).c_str(), r.n_samples, 100.0 * r.valid_rate,
                      100.0 * r.legal_rate, 100.0 * r.best_rate);
        out << line;
    }
    return out.str();
}

}  // namespace chesslm::eval
