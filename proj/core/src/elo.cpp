#include "chesslm/elo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace chesslm::elo {

std::vector<LadderEntry> parse_ladder(const std::string& text) {
    std::vector<LadderEntry> ladder;
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
        const auto parts = split(stripped, ',');
        if (parts.size() != 2) {
            throw ParseError("ladder line must be level,rating: " + stripped);
        }
        ladder.push_back({std::stoi(trim(parts[0])), std::stod(trim(parts[1]))});
    }
    if (ladder.empty()) {
        throw ParseError("ladder file holds no entries");
    }
    for (size_t i = 1; i < ladder.size(); ++i) {
        if (ladder[i].rating <= ladder[i - 1].rating || ladder[i].level <= ladder[i - 1].level) {
            throw ParseError("ladder ratings must increase strictly with level");
        }
    }
    return ladder;
}

std::vector<LadderEntry> load_ladder(const std::string& path) {
    return parse_ladder(read_file(path));
}

std::string ladder_to_text(const std::vector<LadderEntry>& ladder) {
    std::string out = "# level,rating\n";
    for (const auto& e : ladder) {
        out += std::to_string(e.level) + "," + format_double(e.rating) + "\n";
    }
    return out;
}

const std::vector<LadderEntry>& default_ladder() {
    static const std::vector<LadderEntry> ladder = {
        {0, 1320}, {1, 1467}, {2, 1608}, {3, 1742}, {4, 1922}, {5, 2203},
        {6, 2363}, {7, 2499}, {8, 2596}, {9, 2702}, {10, 2788},
    };
    return ladder;
}

void MatchResult::validate() const {
    if (wins + draws + losses != games) {
        throw NumericError("match result tallies do not sum to the game count");
    }
    if (forfeits > losses) {
        throw NumericError("forfeits cannot exceed losses");
    }
}

double expected_score(double r_self, double r_opp) {
    return 1.0 / (1.0 + std::pow(10.0, (r_opp - r_self) / 400.0));
}

double elo_update(const EloLedger& ledger, const MatchResult& result) {
    result.validate();
    const double score = result.wins + 0.5 * result.draws;
    const double expected = expected_score(ledger.rating, result.opponent_rating);
    return ledger.rating + ledger.k_factor * (score - result.games * expected);
}

namespace {

bool insufficient_material(const chess::BoardState& board) {
    int minor_count = 0;
    bool bishop_light = false;
    bool bishop_dark = false;
    bool knight_seen = false;
    for (chess::Square s = 0; s < 64; ++s) {
        const auto& p = board.at(s);
        if (!p || p->kind == chess::PieceKind::king) {
            continue;
        }
        switch (p->kind) {
            case chess::PieceKind::pawn:
            case chess::PieceKind::rook:
            case chess::PieceKind::queen:
                return false;
            case chess::PieceKind::knight:
                knight_seen = true;
                ++minor_count;
                break;
            case chess::PieceKind::bishop:
                ((chess::file_of(s) + chess::rank_of(s)) % 2 ? bishop_light : bishop_dark) =
                    true;
                ++minor_count;
                break;
            default:
                break;
        }
    }
    if (minor_count <= 1) {
        return true;  // K vs K, K+N vs K, K+B vs K
    }
    // Bishops only, all on one square color.
    return !knight_seen && !(bishop_light && bishop_dark);
}

chess::GameOutcome win_for(chess::Color color) {
    return color == chess::Color::white ? chess::GameOutcome::white_win
                                        : chess::GameOutcome::black_win;
}

}  // namespace

chess::GameRecord play_game(engine::MovePolicy& white, engine::MovePolicy& black,
                            const std::vector<std::string>& opening,
                            const ArenaRules& rules) {
    chess::GameRecord record;
    record.white_id = white.id();
    record.black_id = black.id();
    white.start_game();
    black.start_game();

    chess::GameHistory history;
    for (const auto& san : opening) {
        history.push_san(san);
        record.moves.push_back(history.moves().back().san);
    }

    int consecutive_illegal_white = 0;
    int consecutive_illegal_black = 0;

    while (true) {
        const chess::BoardState& board = history.current();
        const auto legal = chess::generate_legal(board);
        if (legal.empty()) {
            if (chess::in_check(board, board.side_to_move)) {
                record.result = win_for(chess::opposite(board.side_to_move));
                record.termination = chess::Termination::checkmate;
            } else {
                record.result = chess::GameOutcome::draw;
                record.termination = chess::Termination::draw_rule;  // stalemate
            }
            return record;
        }
        if (chess::repetition_count(history) >= 3 || board.halfmove_clock >= 100 ||
            insufficient_material(board)) {
            record.result = chess::GameOutcome::draw;
            record.termination = chess::Termination::draw_rule;
            return record;
        }
        if (static_cast<int>(history.moves().size()) >= rules.max_plies) {
            record.result = chess::GameOutcome::draw;
            record.termination = chess::Termination::adjudicated;
            return record;
        }

        const bool white_to_move = board.side_to_move == chess::Color::white;
        engine::MovePolicy& mover = white_to_move ? white : black;
        int& illegal_count = white_to_move ? consecutive_illegal_white : consecutive_illegal_black;

        while (true) {
            std::string proposal;
            try {
                proposal = mover.propose_move(history);
            } catch (const std::exception&) {
                // Transport/policy failure forfeits the game for this side.
                record.result = win_for(chess::opposite(board.side_to_move));
                record.termination = chess::Termination::forfeit;
                (white_to_move ? record.forfeits_by_white : record.forfeits_by_black) += 1;
                return record;
            }
            try {
                const auto move = chess::parse_san(board, trim(proposal));
                history.push(move);
                record.moves.push_back(move.san);
                illegal_count = 0;
                break;
            } catch (const std::exception&) {
                illegal_count += 1;
                if (illegal_count > rules.illegal_move_limit) {
                    record.result = win_for(chess::opposite(board.side_to_move));
                    record.termination = chess::Termination::forfeit;
                    (white_to_move ? record.forfeits_by_white : record.forfeits_by_black) += 1;
                    return record;
                }
            }
        }
    }
}

TournamentResult run_tournament(const GameRunner& runner,
                                const std::vector<LadderEntry>& ladder,
                                const TournamentConfig& cfg,
                                const std::vector<std::vector<std::string>>& opening_book) {
    if (cfg.games_per_level < 2 || (!cfg.white_only && cfg.games_per_level % 2 != 0)) {
        throw NumericError(
            "games_per_level must be at least 2 and even for a balanced color split");
    }
    TournamentResult result;
    result.white_only = cfg.white_only;
    result.ledger.rating = cfg.initial_rating;
    result.ledger.k_factor = cfg.k_factor;

    Rng rng(cfg.seed);
    size_t opening_cursor = 0;
    const std::vector<std::string> empty_opening;
    auto next_opening = [&]() -> const std::vector<std::string>& {
        if (opening_book.empty()) {
            return empty_opening;
        }
        const auto& line = opening_book[opening_cursor % opening_book.size()];
        ++opening_cursor;
        return line;
    };

    for (const auto& entry : ladder) {
        LevelRow row;
        row.level = entry.level;
        row.opponent_rating = entry.rating;

        std::vector<std::pair<chess::Color, int>> batches;
        if (cfg.white_only) {
            batches.push_back({chess::Color::white, cfg.games_per_level});
        } else {
            batches.push_back({chess::Color::white, cfg.games_per_level / 2});
            batches.push_back({chess::Color::black, cfg.games_per_level / 2});
        }

        for (const auto& [color, n_games] : batches) {
            MatchResult batch;
            batch.opponent_id = "level-" + std::to_string(entry.level);
            batch.opponent_rating = entry.rating;
            for (int g = 0; g < n_games; ++g) {
                const auto game = runner(entry, color, next_opening(), rng.next_u64());
                const bool model_won = (game.result == chess::GameOutcome::white_win &&
                                        color == chess::Color::white) ||
                                       (game.result == chess::GameOutcome::black_win &&
                                        color == chess::Color::black);
                batch.games += 1;
                if (game.result == chess::GameOutcome::draw) {
                    batch.draws += 1;
                } else if (model_won) {
                    batch.wins += 1;
                } else {
                    batch.losses += 1;
                    const int model_forfeits = color == chess::Color::white
                                                   ? game.forfeits_by_white
                                                   : game.forfeits_by_black;
                    if (game.termination == chess::Termination::forfeit && model_forfeits > 0) {
                        batch.forfeits += 1;
                    }
                }
                result.games.push_back(game);
            }
            result.ledger.rating = elo_update(result.ledger, batch);
            result.ledger.results.push_back(batch);
            row.games += batch.games;
            row.wins += batch.wins;
            row.draws += batch.draws;
            row.losses += batch.losses;
            row.forfeits += batch.forfeits;
        }
        row.rating_after = result.ledger.rating;
        result.table.push_back(row);
    }
    return result;
}

std::string per_level_csv(const TournamentResult& result) {
    std::ostringstream out;
    out << "level,rating,games,wins,draws,losses,forfeits\n";
    for (const auto& row : result.table) {
        out << row.level << ',' << format_double(row.rating_after) << ',' << row.games << ','
            << row.wins << ',' << row.draws << ',' << row.losses << ',' << row.forfeits
            << '\n';
    }
    return out.str();
}

std::string rating_summary_json(const TournamentResult& result, const std::string& policy_id) {
    nlohmann::json j;
    j["policy"] = policy_id;
    j["rating"] = result.ledger.rating;
    j["k_factor"] = result.ledger.k_factor;
    j["white_only"] = result.white_only;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& row : result.table) {
        levels.push_back({{"level", row.level},
                          {"opponent_rating", row.opponent_rating},
                          {"rating_after", row.rating_after},
                          {"games", row.games},
                          {"wins", row.wins},
                          {"draws", row.draws},
                          {"losses", row.losses},
                          {"forfeits", row.forfeits}});
    }
    j["levels"] = levels;
    return j.dump(2) + "\n";
}

std::string games_to_pgn(const std::vector<chess::GameRecord>& games) {
    std::string out;
    for (const auto& game : games) {
        out += "[White \"" + game.white_id + "\"]\n";
        out += "[Black \"" + game.black_id + "\"]\n";
        out += "[Result \"" + chess::outcome_token(game.result) + "\"]\n\n";
        out += chess::render_movetext(game);
        out += '\n';
    }
    return out;
}

namespace {

const std::vector<std::string>& white_win_line() {
    static const std::vector<std::string> line = {"e4", "e5", "Bc4", "Nc6",
                                                  "Qh5", "Nf6", "Qxf7#"};
    return line;
}

const std::vector<std::string>& black_win_line() {
    static const std::vector<std::string> line = {"f3", "e5", "g4", "Qh4#"};
    return line;
}

const std::vector<std::string>& draw_line() {
    static const std::vector<std::string> line = {"Nf3", "Nf6", "Ng1", "Ng8",
                                                  "Nf3", "Nf6", "Ng1", "Ng8"};
    return line;
}

}  // namespace

chess::GameRecord scripted_strength_game(double white_rating, double black_rating, Rng& rng) {
    const double e_white = expected_score(white_rating, black_rating);
    const double p_draw = 0.6 * std::min(e_white, 1.0 - e_white);
    const double p_win = e_white - 0.5 * p_draw;
    const double u = rng.uniform();
    const std::vector<std::string>* line = nullptr;
    if (u < p_win) {
        line = &white_win_line();
    } else if (u < p_win + p_draw) {
        line = &draw_line();
    } else {
        line = &black_win_line();
    }
    engine::LinePolicy white(*line, "scripted-" + format_double(white_rating));
    engine::LinePolicy black(*line, "scripted-" + format_double(black_rating));
    ArenaRules rules;
    return play_game(white, black, {}, rules);
}

GameRunner scripted_strength_runner(double model_rating) {
    return [model_rating](const LadderEntry& opponent, chess::Color model_color,
                          const std::vector<std::string>&, uint64_t game_seed) {
        Rng rng(game_seed);
        if (model_color == chess::Color::white) {
            return scripted_strength_game(model_rating, opponent.rating, rng);
        }
        return scripted_strength_game(opponent.rating, model_rating, rng);
    };
}

GameRunner policy_runner(engine::MovePolicy& rated_policy, const OpponentFactory& opponents,
                         const ArenaRules& rules) {
    return [&rated_policy, opponents, rules](const LadderEntry& entry,
                                             chess::Color model_color,
                                             const std::vector<std::string>& opening,
                                             uint64_t game_seed) {
        auto opponent = opponents(entry, game_seed);
        if (model_color == chess::Color::white) {
            return play_game(rated_policy, *opponent, opening, rules);
        }
        return play_game(*opponent, rated_policy, opening, rules);
    };
}

}  // namespace chesslm::elo
