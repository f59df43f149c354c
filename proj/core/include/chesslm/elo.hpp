#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chesslm/policy.hpp"

namespace chesslm::elo {

struct LadderEntry {
    int level = 0;
    double rating = 0.0;
};

// Ladder file: "level,rating" per line, '#' comments. Ratings must be
// strictly increasing with level.
std::vector<LadderEntry> parse_ladder(const std::string& text);
std::vector<LadderEntry> load_ladder(const std::string& path);
std::string ladder_to_text(const std::vector<LadderEntry>& ladder);

// The calibrated engine ladder shipped with the workbench (levels 0..10).
const std::vector<LadderEntry>& default_ladder();

struct MatchResult {
    std::string opponent_id;
    double opponent_rating = 0.0;
    int games = 0;
    int wins = 0;
    int draws = 0;
    int losses = 0;
    int forfeits = 0;

    void validate() const;
};

struct EloLedger {
    double rating = 1500.0;
    double k_factor = 16.0;
    std::vector<MatchResult> results;
};

// E = 1 / (1 + 10^((R_opp - R_self) / 400)).
double expected_score(double r_self, double r_opp);

// R_new = R + K * (S - N * E) with S = W + D/2; E is taken at the ledger's
// current rating against the result's opponent rating.
double elo_update(const EloLedger& ledger, const MatchResult& result);

struct ArenaRules {
    int max_plies = 300;
    // "More than 5 consecutive illegal moves" forfeits: the 6th consecutive
    // illegal attempt ends the game; any legal move resets the counter.
    int illegal_move_limit = 5;
};

// Plays one game: the opening line is applied first, then the policies
// alternate. Illegal proposals are re-prompted until the limit; mate,
// stalemate, threefold repetition, the fifty-move rule, insufficient
// material, and the ply cap adjudicate the rest.
chess::GameRecord play_game(engine::MovePolicy& white, engine::MovePolicy& black,
                            const std::vector<std::string>& opening,
                            const ArenaRules& rules);

struct LevelRow {
    int level = 0;
    double opponent_rating = 0.0;
    double rating_after = 0.0;
    int games = 0;
    int wins = 0;
    int draws = 0;
    int losses = 0;
    int forfeits = 0;
};

struct TournamentConfig {
    int games_per_level = 10;
    bool white_only = false;  // schedule the rated policy as White only
    double initial_rating = 1500.0;
    double k_factor = 16.0;
    uint64_t seed = 0;
    ArenaRules rules;
};

// Produces one finished game of the rated policy (playing model_color)
// against the given ladder opponent, starting from the opening line.
using GameRunner = std::function<chess::GameRecord(
    const LadderEntry& opponent, chess::Color model_color,
    const std::vector<std::string>& opening, uint64_t game_seed)>;

struct TournamentResult {
    EloLedger ledger;
    std::vector<LevelRow> table;
    std::vector<chess::GameRecord> games;
    bool white_only = false;
};

// Ladder levels in order; one Elo update per (level, color) batch. Openings
// rotate round-robin through the book (an empty book plays from the start
// position).
TournamentResult run_tournament(const GameRunner& runner,
                                const std::vector<LadderEntry>& ladder,
                                const TournamentConfig& cfg,
                                const std::vector<std::vector<std::string>>& opening_book);

std::string per_level_csv(const TournamentResult& result);
std::string rating_summary_json(const TournamentResult& result, const std::string& policy_id);
std::string games_to_pgn(const std::vector<chess::GameRecord>& games);

// Scripted-strength mock: one legal game whose outcome is drawn from the
// Elo expectation between the two ratings (wins via short mating lines,
// draws via a repetition shuffle). Used for engine-free calibration runs.
chess::GameRecord scripted_strength_game(double white_rating, double black_rating, Rng& rng);

// GameRunner over scripted-strength games for a policy of nominal strength
// `model_rating`.
GameRunner scripted_strength_runner(double model_rating);

// GameRunner over real policy-vs-policy play; the factory builds the
// opponent for a ladder entry per game.
using OpponentFactory =
    std::function<std::unique_ptr<engine::MovePolicy>(const LadderEntry&, uint64_t game_seed)>;
GameRunner policy_runner(engine::MovePolicy& rated_policy, const OpponentFactory& opponents,
                         const ArenaRules& rules);

}  // namespace chesslm::elo
