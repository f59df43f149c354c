// Workbench CLI: generate datasets from an engine (real or mock), train
// character-level models on FEN or PGN representations with a causal or
// bidirectional mask, evaluate them, and rate policies against the engine
// ladder.

#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "chesslm/dataset.hpp"
#include "chesslm/elo.hpp"
#include "chesslm/engine.hpp"
#include "chesslm/evalsuite.hpp"
#include "chesslm/manifest.hpp"
#include "chesslm/model_policy.hpp"
#include "chesslm/train.hpp"

namespace fs = std::filesystem;
using namespace chesslm;

namespace {

constexpr const char* kDefaultBook =
    "1. e4 e5\n"
    "1. e4 c5\n"
    "1. e4 e6\n"
    "1. d4 d5\n"
    "1. d4 Nf6\n"
    "1. c4 e5\n"
    "1. Nf3 d5\n"
    "1. e4 c6\n"
    "1. d4 f5\n"
    "1. c4 Nf6\n";

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> argv;
    std::istringstream in(command);
    std::string word;
    while (in >> word) {
        argv.push_back(word);
    }
    return argv;
}

std::vector<int> parse_level_list(const std::string& csv) {
    std::vector<int> levels;
    for (const auto& part : split(csv, ',')) {
        levels.push_back(std::stoi(trim(part)));
    }
    if (levels.empty()) {
        throw ParseError("empty level list");
    }
    return levels;
}

text::Vocabulary build_corpus_vocab(const std::vector<chess::GameRecord>& games,
                                    const std::vector<engine::AnnotatedPosition>& records) {
    std::vector<std::string> corpus;
    for (const auto& tmpl : prompt::builtin_templates()) {
        for (const auto& seg : tmpl.segments) {
            if (seg.kind == prompt::SlotKind::literal) {
                corpus.push_back(seg.text);
            }
        }
    }
    corpus.push_back("0123456789. ,");
    for (const auto& g : games) {
        corpus.push_back(data::movetext_for_training(g.moves));
    }
    for (const auto& r : records) {
        corpus.push_back(text::flatten_fen(r.fen));
        for (const auto& m : r.legal_moves) {
            corpus.push_back(m);
        }
    }
    return text::build_vocab(corpus);
}

prompt::PromptTemplate pick_template(const std::string& templates_path, int template_id,
                                     int seq_len) {
    prompt::PromptTemplate tmpl =
        templates_path.empty()
            ? prompt::builtin_template(template_id)
            : [&] {
                  for (const auto& t : prompt::load_templates(templates_path)) {
                      if (t.template_id == template_id) {
                          return t;
                      }
                  }
                  throw ParseError("template id " + std::to_string(template_id) +
                                   " not in " + templates_path);
              }();
    if (seq_len > 0) {
        tmpl.fixed_length = seq_len;
    }
    return tmpl;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string out_dir;
    bool mock = false;
    std::string engine_command;
    int games = 200;
    int positions = 2000;
    int annotate_level = 10;
    int white_level = 10;
    std::string black_levels = "0,2,4,6,8,10";
    std::string book_path;
    int movetime_ms = 50;
    int depth = 0;
    int stride = 3;
    bool white_to_move_only = false;
    int max_plies = 300;
    uint64_t seed = 0;
};

int run_gen_data(const GenDataArgs& args) {
    RunManifest manifest;
    manifest.command = "gen-data";
    manifest.seed = args.seed;
    manifest.started_at = now_iso8601();
    if (!args.mock && args.engine_command.empty()) {
        throw ParseError("gen-data needs --mock or --engine");
    }
    fs::create_directories(args.out_dir);

    const auto book = args.book_path.empty() ? data::parse_opening_book(kDefaultBook)
                                             : data::load_opening_book(args.book_path);
    if (!args.book_path.empty()) {
        manifest.dataset_hashes["book"] = file_hash_hex(args.book_path);
    }

    engine::UciLimits limits;
    if (args.depth > 0) {
        limits.depth = args.depth;
        limits.movetime_ms.reset();
    } else {
        limits.movetime_ms = args.movetime_ms;
    }

    // Game corpus: strong white against a cycle of attenuated black levels.
    engine::PlayerSpec white;
    engine::PlayerSpec black;
    white.level = args.white_level;
    black.level_cycle = parse_level_list(args.black_levels);
    if (!args.mock) {
        white.kind = engine::PlayerSpec::Kind::engine;
        black.kind = engine::PlayerSpec::Kind::engine;
        white.engine_argv = split_command(args.engine_command);
        black.engine_argv = white.engine_argv;
        white.limits = limits;
        black.limits = limits;
    }
    engine::GameGenConfig game_cfg;
    game_cfg.seed = args.seed;
    game_cfg.max_plies = args.max_plies;
    std::vector<std::string> diagnostics;
    const auto games =
        engine::generate_games(white, black, args.games, book, game_cfg, &diagnostics);
    std::cerr << "generated " << games.size() << " games";
    if (!diagnostics.empty()) {
        std::cerr << " (" << diagnostics.size() << " discarded)";
    }
    std::cerr << "\n";

    // Stride-sample positions from the games and annotate them.
    std::vector<std::string> fens;
    std::set<std::string> seen;
    for (const auto& g : games) {
        const auto positions = data::game_positions(g.moves, args.white_to_move_only);
        for (size_t i = 0; i < positions.size(); i += static_cast<size_t>(args.stride)) {
            if (static_cast<int>(fens.size()) >= args.positions) {
                break;
            }
            if (seen.insert(positions[i]).second) {
                fens.push_back(positions[i]);
            }
        }
        if (static_cast<int>(fens.size()) >= args.positions) {
            break;
        }
    }
    diagnostics.clear();
    std::vector<engine::AnnotatedPosition> records;
    if (args.mock) {
        records = engine::annotate_dataset_mock(fens, args.annotate_level, &diagnostics);
    } else {
        auto handle = engine::handshake(split_command(args.engine_command),
                                        args.annotate_level);
        records = engine::annotate_dataset(fens, *handle, limits, &diagnostics);
        handle->quit();
    }
    std::cerr << "annotated " << records.size() << " positions";
    if (!diagnostics.empty()) {
        std::cerr << " (" << diagnostics.size() << " skipped)";
    }
    std::cerr << "\n";

    const std::string games_path = (fs::path(args.out_dir) / "games.pgn").string();
    const std::string tsv_path = (fs::path(args.out_dir) / "annotated.tsv").string();
    const std::string vocab_path = (fs::path(args.out_dir) / "vocab.txt").string();
    write_file(games_path, data::games_to_corpus(games));
    write_file(tsv_path, data::annotated_to_tsv(records));
    build_corpus_vocab(games, records).save(vocab_path);

    manifest.output_paths = {games_path, tsv_path, vocab_path};
    manifest.dataset_hashes["games.pgn"] = file_hash_hex(games_path);
    manifest.dataset_hashes["annotated.tsv"] = file_hash_hex(tsv_path);
    manifest.dataset_hashes["vocab.txt"] = file_hash_hex(vocab_path);
    manifest.config_hashes["engine"] = args.mock ? "mock" : fnv1a64_hex(args.engine_command);
    manifest.finished_at = now_iso8601();
    manifest.write((fs::path(args.out_dir) / "manifest.json").string());
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string data_path;
    std::string vocab_path;
    std::string out_dir;
    std::string representation = "fen";
    std::string mask = "causal";
    std::string config_path;
    std::string templates_path;
    int template_id = 1;
    int seq_len = 0;
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    double dropout = 0.0;
    int64_t seed = -1;
};

int run_train(const TrainArgs& args) {
    RunManifest manifest;
    manifest.command = "train";
    manifest.started_at = now_iso8601();
    fs::create_directories(args.out_dir);

    train::TrainConfig tc;
    if (!args.config_path.empty()) {
        tc = train::load_train_config(args.config_path);
        manifest.config_hashes["train_config"] = file_hash_hex(args.config_path);
    }
    if (args.seed >= 0) {
        tc.seed = static_cast<uint64_t>(args.seed);
    }
    manifest.seed = tc.seed;

    const auto vocab = text::Vocabulary::load(args.vocab_path);
    manifest.dataset_hashes["vocab"] = vocab.content_hash();
    manifest.dataset_hashes["data"] = file_hash_hex(args.data_path);

    const auto representation = engine::representation_from_name(args.representation);
    std::vector<text::TokenSequence> samples;
    int target_len = args.seq_len;
    int dropped = 0;
    if (representation == engine::Representation::fen) {
        const auto tmpl = pick_template(args.templates_path, args.template_id, args.seq_len);
        target_len = tmpl.fixed_length;
        for (const auto& r : data::load_annotated_tsv(args.data_path)) {
            try {
                samples.push_back(train::make_fen_sample(r.fen, r.legal_moves, r.best_move,
                                                         tmpl, vocab, target_len));
            } catch (const ParseError&) {
                ++dropped;  // prompt overflows the fixed template length
            }
        }
    } else {
        if (target_len <= 0) {
            target_len = 256;
        }
        for (const auto& moves : data::load_pgn_corpus(args.data_path)) {
            samples.push_back(train::make_pgn_sample(moves, vocab, target_len));
        }
    }
    if (samples.empty()) {
        throw ParseError("no usable samples in " + args.data_path);
    }
    if (dropped > 0) {
        std::cerr << "dropped " << dropped << " over-length samples\n";
    }
    std::cerr << "training on " << samples.size() << " samples, seq len " << target_len
              << "\n";

    nn::ModelConfig mc;
    mc.n_layers = args.n_layers;
    mc.n_heads = args.n_heads;
    mc.d_model = args.d_model;
    mc.d_ff = args.d_ff;
    mc.max_seq_len = target_len;
    mc.vocab_size = vocab.size();
    mc.attention_mode = nn::attention_mode_from_name(args.mask);
    mc.dropout = args.dropout;

    nn::Model model(mc);
    Rng init_rng(Rng(tc.seed).fork(0x696e6974).next_u64());
    model.init_parameters(init_rng);

    train::ShuffledStream stream(std::move(samples), Rng(tc.seed).fork(0x64617461).next_u64());
    const std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.bin").string();
    const auto result =
        train::train(model, stream, tc, [&](const nn::Model& m, int64_t step) {
            nn::save_checkpoint(ckpt_path, m, vocab.content_hash(), step);
        });

    const std::string trace_path = (fs::path(args.out_dir) / "loss.csv").string();
    write_file(trace_path, train::trace_to_csv(result.trace));
    if (!result.trace.empty()) {
        std::cerr << "final loss " << result.trace.back().loss << " after " << result.steps
                  << " steps\n";
    }

    manifest.output_paths = {ckpt_path, trace_path};
    manifest.config_hashes["model"] =
        fnv1a64_hex(args.representation + "|" + args.mask + "|" +
                    std::to_string(args.n_layers) + "|" + std::to_string(args.d_model));
    manifest.finished_at = now_iso8601();
    manifest.write((fs::path(args.out_dir) / "manifest.json").string());
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint_path;
    std::string data_path;
    std::string vocab_path;
    std::string out_dir;
    std::string mode = "both";
    std::string representation = "fen";
    std::string templates_path;
    int template_id = 1;
    int annotator_level = 10;
    int max_samples = 0;
    bool histogram = false;
    uint64_t seed = 0;
};

int run_eval(const EvalArgs& args) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.seed = args.seed;
    manifest.started_at = now_iso8601();
    fs::create_directories(args.out_dir);

    const auto vocab = text::Vocabulary::load(args.vocab_path);
    auto ckpt = nn::load_checkpoint(args.checkpoint_path);
    if (ckpt.vocab_hash != vocab.content_hash()) {
        throw ParseError("vocabulary hash mismatch: checkpoint was trained with " +
                         ckpt.vocab_hash + " but " + args.vocab_path + " hashes to " +
                         vocab.content_hash());
    }
    manifest.dataset_hashes["vocab"] = vocab.content_hash();
    manifest.dataset_hashes["data"] = file_hash_hex(args.data_path);
    manifest.config_hashes["checkpoint"] = file_hash_hex(args.checkpoint_path);

    const auto representation = engine::representation_from_name(args.representation);
    std::vector<eval::EvalSample> samples;
    std::vector<std::string> histogram_fens;
    if (representation == engine::Representation::fen) {
        const auto tmpl = pick_template(args.templates_path, args.template_id, 0);
        for (const auto& r : data::load_annotated_tsv(args.data_path)) {
            if (args.max_samples > 0 &&
                static_cast<int>(samples.size()) >= args.max_samples) {
                break;
            }
            histogram_fens.push_back(r.fen);
            samples.push_back(eval::make_fen_eval_sample(r, tmpl, vocab));
        }
    } else {
        const int window = ckpt.config.max_seq_len;
        for (const auto& moves : data::load_pgn_corpus(args.data_path)) {
            if (args.max_samples > 0 &&
                static_cast<int>(samples.size()) >= args.max_samples) {
                break;
            }
            chess::GameHistory history;
            for (size_t ply = 0; ply < moves.size(); ++ply) {
                if (history.current().side_to_move == chess::Color::white) {
                    std::vector<std::string> prefix;
                    for (const auto& m : history.moves()) {
                        prefix.push_back(m.san);
                    }
                    try {
                        const auto record =
                            engine::annotate_position(history.current(), args.annotator_level);
                        auto sample = eval::make_pgn_eval_sample(prefix, record, vocab);
                        if (sample.forced.length() < window) {
                            histogram_fens.push_back(record.fen);
                            samples.push_back(std::move(sample));
                        }
                    } catch (const std::exception&) {
                        // Terminal or over-long positions are skipped.
                    }
                    if (args.max_samples > 0 &&
                        static_cast<int>(samples.size()) >= args.max_samples) {
                        break;
                    }
                }
                history.push_san(moves[ply]);
            }
        }
    }
    if (samples.empty()) {
        throw ParseError("no evaluable samples in " + args.data_path);
    }
    std::cerr << "evaluating " << samples.size() << " samples\n";

    std::vector<eval::EvalReport> reports;
    manifest.output_paths.clear();
    const std::string report_path = (fs::path(args.out_dir) / "report.csv").string();
    if (args.mode == "both") {
        const auto result = eval::exposure_bias_delta(ckpt.model, samples, vocab);
        reports = {result.teacher_forced, result.autoregressive};
        const std::string deltas =
            "metric,teacher_forced,autoregressive,delta\n"
            "valid_rate," + format_double(result.teacher_forced.valid_rate) + "," +
            format_double(result.autoregressive.valid_rate) + "," +
            format_double(result.valid_delta) + "\n" +
            "legal_rate," + format_double(result.teacher_forced.legal_rate) + "," +
            format_double(result.autoregressive.legal_rate) + "," +
            format_double(result.legal_delta) + "\n" +
            "best_rate," + format_double(result.teacher_forced.best_rate) + "," +
            format_double(result.autoregressive.best_rate) + "," +
            format_double(result.best_delta) + "\n";
        const std::string deltas_path = (fs::path(args.out_dir) / "deltas.csv").string();
        write_file(deltas_path, deltas);
        manifest.output_paths.push_back(deltas_path);
    } else {
        const auto mode = args.mode == "teacher_forced" ? eval::EvalMode::teacher_forced
                                                        : eval::EvalMode::autoregressive;
        reports = {eval::evaluate(ckpt.model, samples, vocab, mode)};
    }
    write_file(report_path, eval::reports_to_csv(reports));
    manifest.output_paths.push_back(report_path);
    std::cout << eval::report_table(reports);

    if (args.histogram) {
        const std::string hist_path = (fs::path(args.out_dir) / "histogram.csv").string();
        write_file(hist_path, eval::histogram_to_csv(eval::legal_move_histogram(histogram_fens)));
        manifest.output_paths.push_back(hist_path);
    }
    manifest.finished_at = now_iso8601();
    manifest.write((fs::path(args.out_dir) / "manifest.json").string());
    return 0;
}

// --------------------------------------------------------------- tournament

struct TournamentArgs {
    std::string policy;
    std::string out_dir;
    std::string ladder_path;
    std::string engine_command;
    std::string vocab_path;
    std::string representation = "fen";
    std::string templates_path;
    int template_id = 1;
    int games_per_level = 10;
    bool white_only = false;
    double temperature = 0.0;
    double initial_rating = 1500.0;
    double k_factor = 16.0;
    std::string book_path;
    uint64_t seed = 0;
    int max_plies = 300;
};

int run_tournament_cmd(const TournamentArgs& args) {
    RunManifest manifest;
    manifest.command = "tournament";
    manifest.seed = args.seed;
    manifest.started_at = now_iso8601();
    fs::create_directories(args.out_dir);

    const auto ladder = args.ladder_path.empty() ? elo::default_ladder()
                                                 : elo::load_ladder(args.ladder_path);
    const auto book = args.book_path.empty() ? data::parse_opening_book(kDefaultBook)
                                             : data::load_opening_book(args.book_path);

    elo::TournamentConfig cfg;
    cfg.games_per_level = args.games_per_level;
    cfg.white_only = args.white_only;
    cfg.initial_rating = args.initial_rating;
    cfg.k_factor = args.k_factor;
    cfg.seed = args.seed;
    cfg.rules.max_plies = args.max_plies;

    // Policy under test.
    std::unique_ptr<engine::MovePolicy> policy;
    std::unique_ptr<nn::Checkpoint> ckpt;
    std::unique_ptr<text::Vocabulary> vocab;
    std::vector<std::unique_ptr<engine::EngineHandle>> handles;
    std::string policy_id = args.policy;
    elo::GameRunner runner;

    if (starts_with(args.policy, "mock:")) {
        const double rating = std::stod(args.policy.substr(5));
        runner = elo::scripted_strength_runner(rating);
        policy_id = "scripted-strength-" + format_double(rating);
    } else {
        if (starts_with(args.policy, "checkpoint:")) {
            if (args.vocab_path.empty()) {
                throw ParseError("checkpoint policies need --vocab");
            }
            ckpt = std::make_unique<nn::Checkpoint>(
                nn::load_checkpoint(args.policy.substr(11)));
            vocab = std::make_unique<text::Vocabulary>(
                text::Vocabulary::load(args.vocab_path));
            if (ckpt->vocab_hash != vocab->content_hash()) {
                throw ParseError("vocabulary hash mismatch with checkpoint");
            }
            policy = std::make_unique<engine::ModelPolicy>(
                ckpt->model, *vocab, engine::representation_from_name(args.representation),
                pick_template(args.templates_path, args.template_id, 0), args.temperature,
                Rng(args.seed).fork(0x706f6c).next_u64());
            manifest.config_hashes["checkpoint"] = file_hash_hex(args.policy.substr(11));
        } else if (starts_with(args.policy, "heuristic:")) {
            policy = std::make_unique<engine::HeuristicPolicy>(
                std::stoi(args.policy.substr(10)), Rng(args.seed).fork(0x706f6c).next_u64());
        } else if (starts_with(args.policy, "engine-level:")) {
            if (args.engine_command.empty()) {
                throw ParseError("engine-level policies need --engine");
            }
            handles.push_back(engine::handshake(split_command(args.engine_command),
                                                std::stoi(args.policy.substr(13))));
            policy = std::make_unique<engine::EnginePolicy>(
                *handles.back(), engine::UciLimits{}, args.policy);
        } else {
            throw ParseError("policy must be checkpoint:PATH, mock:RATING, heuristic:N, "
                             "or engine-level:N");
        }
        policy_id = policy->id();

        elo::OpponentFactory opponents;
        if (args.engine_command.empty()) {
            opponents = [](const elo::LadderEntry& entry, uint64_t game_seed) {
                return std::unique_ptr<engine::MovePolicy>(
                    std::make_unique<engine::HeuristicPolicy>(entry.level, game_seed));
            };
        } else {
            const auto argv = split_command(args.engine_command);
            opponents = [argv, &handles](const elo::LadderEntry& entry, uint64_t) {
                handles.push_back(engine::handshake(argv, entry.level));
                return std::unique_ptr<engine::MovePolicy>(
                    std::make_unique<engine::EnginePolicy>(
                        *handles.back(), engine::UciLimits{},
                        "engine-l" + std::to_string(entry.level)));
            };
        }
        runner = elo::policy_runner(*policy, opponents, cfg.rules);
    }

    const auto result = elo::run_tournament(runner, ladder, cfg, book);

    const std::string csv_path = (fs::path(args.out_dir) / "per_level.csv").string();
    const std::string summary_path = (fs::path(args.out_dir) / "rating.json").string();
    const std::string pgn_path = (fs::path(args.out_dir) / "games.pgn").string();
    write_file(csv_path, elo::per_level_csv(result));
    write_file(summary_path, elo::rating_summary_json(result, policy_id));
    write_file(pgn_path, elo::games_to_pgn(result.games));
    std::cout << "final rating: " << result.ledger.rating << "\n";

    manifest.output_paths = {csv_path, summary_path, pgn_path};
    if (!args.ladder_path.empty()) {
        manifest.dataset_hashes["ladder"] = file_hash_hex(args.ladder_path);
    }
    manifest.finished_at = now_iso8601();
    manifest.write((fs::path(args.out_dir) / "manifest.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chess notation language-model workbench"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data",
                                       "generate a game corpus and annotated positions");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_flag("--mock", gen.mock, "use the in-process deterministic engine");
    gen_cmd->add_option("--engine", gen.engine_command, "UCI engine command line");
    gen_cmd->add_option("--games", gen.games, "number of games");
    gen_cmd->add_option("--positions", gen.positions, "number of annotated positions");
    gen_cmd->add_option("--annotate-level", gen.annotate_level, "annotator skill level");
    gen_cmd->add_option("--white-level", gen.white_level, "white player level");
    gen_cmd->add_option("--black-levels", gen.black_levels, "black level cycle, comma-separated");
    gen_cmd->add_option("--book", gen.book_path, "opening book file");
    gen_cmd->add_option("--movetime", gen.movetime_ms, "engine movetime in ms");
    gen_cmd->add_option("--depth", gen.depth, "engine depth limit (overrides movetime)");
    gen_cmd->add_option("--stride", gen.stride, "position sampling stride in plies");
    gen_cmd->add_flag("--white-to-move-only", gen.white_to_move_only,
                      "annotate only white-to-move positions");
    gen_cmd->add_option("--max-plies", gen.max_plies, "adjudication ply cap");
    gen_cmd->add_option("--seed", gen.seed, "random seed");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
    train_cmd->add_option("--data", tr.data_path, "annotated.tsv (fen) or games.pgn (pgn)")
        ->required();
    train_cmd->add_option("--vocab", tr.vocab_path, "vocabulary file")->required();
    train_cmd->add_option("--out", tr.out_dir, "output directory")->required();
    train_cmd->add_option("--representation", tr.representation, "fen or pgn");
    train_cmd->add_option("--mask", tr.mask, "causal or bidirectional");
    train_cmd->add_option("--config", tr.config_path, "key = value training config");
    train_cmd->add_option("--templates", tr.templates_path, "prompt template data file");
    train_cmd->add_option("--template-id", tr.template_id, "prompt template id (fen)");
    train_cmd->add_option("--seq-len", tr.seq_len, "sequence length override");
    train_cmd->add_option("--n-layers", tr.n_layers, "transformer layers");
    train_cmd->add_option("--n-heads", tr.n_heads, "attention heads");
    train_cmd->add_option("--d-model", tr.d_model, "model width");
    train_cmd->add_option("--d-ff", tr.d_ff, "feed-forward width");
    train_cmd->add_option("--dropout", tr.dropout, "residual dropout probability");
    train_cmd->add_option("--seed", tr.seed, "seed override");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ev.checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", ev.data_path, "dataset file")->required();
    eval_cmd->add_option("--vocab", ev.vocab_path, "vocabulary file")->required();
    eval_cmd->add_option("--out", ev.out_dir, "output directory")->required();
    eval_cmd->add_option("--mode", ev.mode, "teacher_forced, autoregressive, or both");
    eval_cmd->add_option("--representation", ev.representation, "fen or pgn");
    eval_cmd->add_option("--templates", ev.templates_path, "prompt template data file");
    eval_cmd->add_option("--template-id", ev.template_id, "prompt template id");
    eval_cmd->add_option("--annotator-level", ev.annotator_level,
                         "mock annotator level for pgn ground truth");
    eval_cmd->add_option("--max-samples", ev.max_samples, "cap on evaluated samples");
    eval_cmd->add_flag("--histogram", ev.histogram, "emit legal-move histogram CSV");
    eval_cmd->add_option("--seed", ev.seed, "random seed");

    TournamentArgs to;
    auto* tour_cmd = app.add_subcommand("tournament", "rate a policy against the ladder");
    tour_cmd->add_option("--policy", to.policy,
                         "checkpoint:PATH | mock:RATING | heuristic:N | engine-level:N")
        ->required();
    tour_cmd->add_option("--out", to.out_dir, "output directory")->required();
    tour_cmd->add_option("--ladder", to.ladder_path, "ladder file (level,rating)");
    tour_cmd->add_option("--engine", to.engine_command, "UCI engine command line");
    tour_cmd->add_option("--vocab", to.vocab_path, "vocabulary for checkpoint policies");
    tour_cmd->add_option("--representation", to.representation, "fen or pgn");
    tour_cmd->add_option("--templates", to.templates_path, "prompt template data file");
    tour_cmd->add_option("--template-id", to.template_id, "prompt template id");
    tour_cmd->add_option("--games-per-level", to.games_per_level, "games per ladder level");
    tour_cmd->add_flag("--white-only", to.white_only, "schedule the policy as White only");
    tour_cmd->add_option("--temperature", to.temperature, "sampling temperature");
    tour_cmd->add_option("--initial-rating", to.initial_rating, "starting rating");
    tour_cmd->add_option("--k-factor", to.k_factor, "Elo K factor");
    tour_cmd->add_option("--book", to.book_path, "opening book file");
    tour_cmd->add_option("--seed", to.seed, "random seed");
    tour_cmd->add_option("--max-plies", to.max_plies, "adjudication ply cap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            return run_gen_data(gen);
        }
        if (train_cmd->parsed()) {
            return run_train(tr);
        }
        if (eval_cmd->parsed()) {
            return run_eval(ev);
        }
        if (tour_cmd->parsed()) {
            return run_tournament_cmd(to);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
