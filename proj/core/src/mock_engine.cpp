#include "chesslm/mock_engine.hpp"

#include <iostream>
#include <sstream>

#include "chesslm/policy.hpp"
#include "chesslm/util.hpp"

namespace chesslm::engine {

int run_mock_uci(std::istream& in, std::ostream& out) {
    int skill_level = HeuristicPolicy::kMaxLevel;
    chess::BoardState board = chess::start_position();

    std::string line;
    while (std::getline(in, line)) {
        const std::string cmd = trim(line);
        if (cmd == "quit") {
            return 0;
        }
        if (cmd == "uci") {
            out << "id name chesslm-mock\n";
            out << "id author chesslm\n";
            out << "option name Skill Level type spin default 10 min 0 max 10\n";
            out << "uciok\n" << std::flush;
        } else if (cmd == "isready") {
            out << "readyok\n" << std::flush;
        } else if (cmd == "ucinewgame") {
            board = chess::start_position();
        } else if (starts_with(cmd, "setoption")) {
            std::istringstream parts(cmd);
            std::string word;
            std::string name;
            std::string value;
            bool in_name = false;
            bool in_value = false;
            while (parts >> word) {
                if (word == "name") {
                    in_name = true;
                    in_value = false;
                } else if (word == "value") {
                    in_value = true;
                    in_name = false;
                } else if (in_value) {
                    value = value.empty() ? word : value + " " + word;
                } else if (in_name) {
                    name = name.empty() ? word : name + " " + word;
                }
            }
            if (name == "Skill Level" && !value.empty()) {
                try {
                    const int level = std::stoi(value);
                    if (level >= 0 && level <= HeuristicPolicy::kMaxLevel) {
                        skill_level = level;
                    }
                } catch (const std::exception&) {
                    // Malformed values are ignored, as real engines do.
                }
            }
        } else if (starts_with(cmd, "position")) {
            try {
                std::string rest = trim(cmd.substr(8));
                std::vector<std::string> uci_moves;
                const size_t moves_at = rest.find(" moves ");
                if (moves_at != std::string::npos) {
                    std::istringstream ms(rest.substr(moves_at + 7));
                    std::string m;
                    while (ms >> m) {
                        uci_moves.push_back(m);
                    }
                    rest = trim(rest.substr(0, moves_at));
                }
                if (rest == "startpos") {
                    board = chess::start_position();
                } else if (starts_with(rest, "fen ")) {
                    board = chess::parse_fen(trim(rest.substr(4)));
                } else {
                    continue;
                }
                for (const auto& m : uci_moves) {
                    const auto rec = chess::parse_uci_move(board, m);
                    if (!rec) {
                        break;
                    }
                    board = chess::apply_move(board, *rec);
                }
            } catch (const std::exception&) {
                // Keep the previous position on malformed input.
            }
        } else if (starts_with(cmd, "go")) {
            try {
                // Seeded by the position so replies are reproducible but
                // vary across positions at low skill.
                const uint64_t seed = fnv1a64(chess::serialize_fen(board));
                const auto move = HeuristicPolicy::choose(board, skill_level, seed);
                const auto compact = chess::record_to_move(board, move);
                out << "bestmove " << chess::move_to_uci(compact) << "\n" << std::flush;
            } catch (const std::exception&) {
                out << "bestmove 0000\n" << std::flush;
            }
        }
        // Unknown commands are ignored per UCI convention.
    }
    return 0;
}

}  // namespace chesslm::engine
