#pragma once

#include <memory>

#include "chesslm/model.hpp"
#include "chesslm/policy.hpp"
#include "chesslm/prompt.hpp"

namespace chesslm::engine {

enum class Representation { fen, pgn };

Representation representation_from_name(const std::string& name);
std::string representation_name(Representation r);

// Plays a trained checkpoint as a tournament policy. FEN representation
// renders the prompt template for the current position; PGN representation
// feeds the movetext prefix. Decoding stops at whitespace or end-of-text;
// the arena judges whatever comes out.
class ModelPolicy : public MovePolicy {
public:
    ModelPolicy(const nn::Model& model, const text::Vocabulary& vocab,
                Representation representation, const prompt::PromptTemplate& tmpl,
                double temperature, uint64_t seed);

    std::string propose_move(const chess::GameHistory& history) override;
    std::string id() const override;
    void start_game() override;

private:
    const nn::Model& model_;
    const text::Vocabulary& vocab_;
    Representation representation_;
    prompt::PromptTemplate template_;
    double temperature_;
    Rng rng_;
};

}  // namespace chesslm::engine
