// Deterministic UCI engine used for engine-free data generation, testing,
// and tournament smoke runs. Strength follows "setoption name Skill Level
// value N" (0..10).

#include <iostream>

#include "chesslm/mock_engine.hpp"

int main() {
    std::ios::sync_with_stdio(false);
    return chesslm::engine::run_mock_uci(std::cin, std::cout);
}
