#include "chesslm/policy.hpp"

#include <algorithm>
#include <cmath>

#include "chesslm/util.hpp"

namespace chesslm::engine {

namespace {

double piece_value(chess::PieceKind kind) {
    switch (kind) {
        case chess::PieceKind::pawn: return 1.0;
        case chess::PieceKind::knight: return 3.0;
        case chess::PieceKind::bishop: return 3.1;
        case chess::PieceKind::rook: return 5.0;
        case chess::PieceKind::queen: return 9.0;
        case chess::PieceKind::king: return 100.0;
    }
    return 0.0;
}

bool on_board(int f, int r) { return f >= 0 && f < 8 && r >= 0 && r < 8; }

// Value of the cheapest piece of `by` attacking sq, or 0 when unattacked.
double cheapest_attacker(const chess::BoardState& board, chess::Square sq,
                         chess::Color by) {
    using chess::PieceKind;
    const int f = chess::file_of(sq);
    const int r = chess::rank_of(sq);

    const int pawn_rank = by == chess::Color::white ? r - 1 : r + 1;
    for (int df : {-1, 1}) {
        if (on_board(f + df, pawn_rank)) {
            const auto& p = board.at(chess::make_square(f + df, pawn_rank));
            if (p && p->color == by && p->kind == PieceKind::pawn) {
                return piece_value(PieceKind::pawn);
            }
        }
    }
    static constexpr int knight_steps[8][2] = {{1, 2},  {2, 1},  {2, -1}, {1, -2},
                                               {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
    for (const auto& d : knight_steps) {
        if (on_board(f + d[0], r + d[1])) {
            const auto& p = board.at(chess::make_square(f + d[0], r + d[1]));
            if (p && p->color == by && p->kind == PieceKind::knight) {
                return piece_value(PieceKind::knight);
            }
        }
    }

    double cheapest = 0.0;
    auto consider = [&](double v) {
        if (cheapest == 0.0 || v < cheapest) {
            cheapest = v;
        }
    };
    static constexpr int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1},
                                       {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (int d = 0; d < 8; ++d) {
        const bool diagonal = d >= 4;
        int cf = f + dirs[d][0];
        int cr = r + dirs[d][1];
        int steps = 1;
        while (on_board(cf, cr)) {
            const auto& p = board.at(chess::make_square(cf, cr));
            if (p) {
                if (p->color == by) {
                    const bool slider_fits = diagonal
                                                 ? (p->kind == PieceKind::bishop ||
                                                    p->kind == PieceKind::queen)
                                                 : (p->kind == PieceKind::rook ||
                                                    p->kind == PieceKind::queen);
                    if (slider_fits) {
                        consider(piece_value(p->kind));
                    } else if (steps == 1 && p->kind == PieceKind::king) {
                        consider(piece_value(PieceKind::king));
                    }
                }
                break;
            }
            cf += dirs[d][0];
            cr += dirs[d][1];
            ++steps;
        }
    }
    return cheapest;
}

// Worst single-piece material loss the mover leaves on the board: a piece
// attacked by a cheaper attacker, or attacked and undefended.
double exposure_after(const chess::BoardState& next, chess::Color us) {
    const chess::Color them = chess::opposite(us);
    double worst = 0.0;
    for (chess::Square s = 0; s < 64; ++s) {
        const auto& p = next.at(s);
        if (!p || p->color != us || p->kind == chess::PieceKind::king) {
            continue;
        }
        const double attacker = cheapest_attacker(next, s, them);
        if (attacker == 0.0) {
            continue;
        }
        const double own = piece_value(p->kind);
        const bool defended = chess::is_square_attacked(next, s, us);
        const double loss = defended ? std::max(0.0, own - attacker) : own;
        worst = std::max(worst, loss);
    }
    return worst;
}

}  // namespace

HeuristicPolicy::HeuristicPolicy(int level, uint64_t seed) : level_(level), seed_(seed) {
    if (level < 0 || level > kMaxLevel) {
        throw ParseError("heuristic level must lie in 0.." + std::to_string(kMaxLevel));
    }
}

double HeuristicPolicy::score_move(const chess::BoardState& board,
                                   const chess::MoveRecord& move) {
    if (move.is_mate) {
        return 1e9;
    }
    const chess::Color us = board.side_to_move;
    const auto& mover = board.at(move.from_square);
    double score = 0.0;
    if (move.is_capture) {
        const auto& victim = board.at(move.to_square);
        score += victim ? piece_value(victim->kind) : 1.0;  // empty target = en passant
    }
    if (move.promotion) {
        score += piece_value(*move.promotion) - 1.0;
    }
    const chess::BoardState next = chess::apply_move(board, move);
    score -= exposure_after(next, us);
    if (move.is_check) {
        score += 0.3;
    }
    // Mild progress bias so quiet play advances rather than shuffles.
    if (mover && mover->kind == chess::PieceKind::pawn) {
        score += 0.05;
    }
    if (move.san == "O-O" || move.san == "O-O-O") {
        score += 0.4;
    }
    return score;
}

namespace {

chess::MoveRecord pick_move(const chess::BoardState& board, int level, uint64_t seed,
                            const chess::GameHistory* history) {
    const auto moves = chess::legal_moves(board);
    if (moves.empty()) {
        throw IllegalMoveError("no legal moves in position " + chess::serialize_fen(board));
    }
    const double noise_amp =
        0.6 * static_cast<double>(HeuristicPolicy::kMaxLevel - level);
    const std::string fen = chess::serialize_fen(board);
    size_t best = 0;
    double best_score = -1e18;
    for (size_t i = 0; i < moves.size(); ++i) {
        double s = HeuristicPolicy::score_move(board, moves[i]);
        if (history) {
            // Revisiting earlier positions stalls games; steer away.
            const auto key = chess::position_key(chess::apply_move(board, moves[i]));
            const auto& keys = history->position_keys();
            const long prior = std::count(keys.begin(), keys.end(), key);
            s -= 1.2 * static_cast<double>(prior);
        }
        if (noise_amp > 0.0) {
            const uint64_t h = Rng::splitmix(fnv1a64(fen + '|' + moves[i].san) ^
                                             Rng::splitmix(seed));
            const double u = static_cast<double>(h >> 11) / 9007199254740992.0;
            s += noise_amp * u;
        }
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return moves[best];
}

}  // namespace

chess::MoveRecord HeuristicPolicy::choose(const chess::BoardState& board, int level,
                                          uint64_t seed) {
    return pick_move(board, level, seed, nullptr);
}

std::string HeuristicPolicy::propose_move(const chess::GameHistory& history) {
    return pick_move(history.current(), level_, seed_, &history).san;
}

std::string HeuristicPolicy::id() const {
    return "heuristic-l" + std::to_string(level_);
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> outputs, std::string name)
    : outputs_(std::move(outputs)), name_(std::move(name)) {
    if (outputs_.empty()) {
        throw ParseError("scripted policy needs at least one output");
    }
}

std::string ScriptedPolicy::propose_move(const chess::GameHistory&) {
    const size_t i = std::min(cursor_, outputs_.size() - 1);
    ++cursor_;
    return outputs_[i];
}

LinePolicy::LinePolicy(std::vector<std::string> line, std::string name)
    : line_(std::move(line)), name_(std::move(name)) {}

std::string LinePolicy::propose_move(const chess::GameHistory& history) {
    const size_t ply = history.moves().size();
    if (ply < line_.size()) {
        return line_[ply];
    }
    // Ran past the scripted line; any legal move keeps the game valid.
    const auto moves = chess::legal_moves(history.current());
    return moves.empty() ? "(none)" : moves.front().san;
}

RandomPolicy::RandomPolicy(uint64_t seed) : rng_(seed) {}

std::string RandomPolicy::propose_move(const chess::GameHistory& history) {
    const auto moves = chess::legal_moves(history.current());
    if (moves.empty()) {
        return "(none)";
    }
    return moves[rng_.below(moves.size())].san;
}

SplitColorPolicy::SplitColorPolicy(std::unique_ptr<MovePolicy> as_white,
                                   std::unique_ptr<MovePolicy> as_black)
    : white_(std::move(as_white)), black_(std::move(as_black)) {}

std::string SplitColorPolicy::propose_move(const chess::GameHistory& history) {
    return history.current().side_to_move == chess::Color::white
               ? white_->propose_move(history)
               : black_->propose_move(history);
}

std::string SplitColorPolicy::id() const {
    return white_->id() + "/" + black_->id();
}

void SplitColorPolicy::start_game() {
    white_->start_game();
    black_->start_game();
}

}  // namespace chesslm::engine
