#pragma once

#include <memory>
#include <string>
#include <vector>

#include "chesslm/game.hpp"
#include "chesslm/util.hpp"

namespace chesslm::engine {

// Produces candidate move text for the side to move. Output is free text;
// the arena judges legality and re-prompts or forfeits.
class MovePolicy {
public:
    virtual ~MovePolicy() = default;
    virtual std::string propose_move(const chess::GameHistory& history) = 0;
    virtual std::string id() const = 0;
    virtual void start_game() {}
};

// Deterministic material-greedy policy with a strength knob. Level 10 plays
// argmax of the static score with SAN-order tie-breaks; lower levels add
// hash-derived noise so play degrades smoothly toward random. The same
// scoring backs the mock UCI engine and the dataset annotator.
class HeuristicPolicy : public MovePolicy {
public:
    HeuristicPolicy(int level, uint64_t seed);

    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override;

    // Pure function of (board, level, seed); seed 0 level 10 is the
    // annotator used for best-move labels.
    static chess::MoveRecord choose(const chess::BoardState& board, int level, uint64_t seed);
    static double score_move(const chess::BoardState& board, const chess::MoveRecord& move);

    static constexpr int kMaxLevel = 10;

private:
    int level_;
    uint64_t seed_;
};

// Emits a fixed list of outputs in order, repeating the last entry once the
// script runs out. Outputs may be illegal; the arena decides.
class ScriptedPolicy : public MovePolicy {
public:
    ScriptedPolicy(std::vector<std::string> outputs, std::string name);

    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override { return name_; }
    void start_game() override { cursor_ = 0; }

private:
    std::vector<std::string> outputs_;
    std::string name_;
    size_t cursor_ = 0;
};

// Plays a predetermined game line by ply index; both sides of a scripted
// game share the same line.
class LinePolicy : public MovePolicy {
public:
    LinePolicy(std::vector<std::string> line, std::string name);

    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override { return name_; }

private:
    std::vector<std::string> line_;
    std::string name_;
};

// Uniform random legal move, seeded.
class RandomPolicy : public MovePolicy {
public:
    RandomPolicy(uint64_t seed);
    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override { return "random"; }

private:
    Rng rng_;
};

// Plays one policy as White and another as Black (asymmetric-strength
// fixture).
class SplitColorPolicy : public MovePolicy {
public:
    SplitColorPolicy(std::unique_ptr<MovePolicy> as_white, std::unique_ptr<MovePolicy> as_black);
    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override;
    void start_game() override;

private:
    std::unique_ptr<MovePolicy> white_;
    std::unique_ptr<MovePolicy> black_;
};

}  // namespace chesslm::engine
