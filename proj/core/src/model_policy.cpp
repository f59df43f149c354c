#include "chesslm/model_policy.hpp"

#include "chesslm/dataset.hpp"
#include "chesslm/train.hpp"

namespace chesslm::engine {

Representation representation_from_name(const std::string& name) {
    if (name == "fen") {
        return Representation::fen;
    }
    if (name == "pgn") {
        return Representation::pgn;
    }
    throw ParseError("unknown representation: " + name);
}

std::string representation_name(Representation r) {
    return r == Representation::fen ? "fen" : "pgn";
}

ModelPolicy::ModelPolicy(const nn::Model& model, const text::Vocabulary& vocab,
                         Representation representation, const prompt::PromptTemplate& tmpl,
                         double temperature, uint64_t seed)
    : model_(model),
      vocab_(vocab),
      representation_(representation),
      template_(tmpl),
      temperature_(temperature),
      rng_(seed) {}

std::string ModelPolicy::propose_move(const chess::GameHistory& history) {
    const chess::BoardState& board = history.current();
    std::vector<int> prompt_ids;
    if (representation_ == Representation::fen) {
        std::vector<std::string> legal;
        for (const auto& m : chess::legal_moves(board)) {
            legal.push_back(m.san);
        }
        if (legal.empty()) {
            return "(none)";
        }
        prompt_ids = train::make_fen_prompt_ids(chess::serialize_fen(board), legal,
                                                template_, vocab_);
    } else {
        std::vector<std::string> played;
        for (const auto& m : history.moves()) {
            played.push_back(m.san);
        }
        std::string cue;
        if (board.side_to_move == chess::Color::white) {
            cue = std::to_string(played.size() / 2 + 1) + ". ";
        }
        std::string prompt_text;
        if (!played.empty()) {
            prompt_text = data::movetext_for_training(played) + " ";
        }
        prompt_text += cue;
        prompt_ids.push_back(text::Vocabulary::kBeginId);
        for (int id : text::char_tokenize(prompt_text, vocab_)) {
            prompt_ids.push_back(id);
        }
    }
    if (static_cast<int>(prompt_ids.size()) >= model_.config().max_seq_len) {
        return "(prompt overflow)";
    }

    const auto out =
        model_.generate(prompt_ids, temperature_, 12, text::Vocabulary::kEndId, rng_);
    std::string candidate;
    for (size_t i = prompt_ids.size(); i < out.size(); ++i) {
        const int id = out[i];
        if (id < 3) {
            break;
        }
        const std::string& sym = vocab_.symbol(id);
        if (sym == " ") {
            break;
        }
        candidate += sym;
    }
    return candidate;
}

std::string ModelPolicy::id() const {
    return "model-" + representation_name(representation_);
}

void ModelPolicy::start_game() {}

}  // namespace chesslm::engine
