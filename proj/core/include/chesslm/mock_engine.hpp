#pragma once

#include <iosfwd>

namespace chesslm::engine {

// Deterministic in-process UCI engine speaking the workbench's protocol
// subset: uci/isready/setoption name Skill Level/ucinewgame/position/go/
// quit. Move choice comes from HeuristicPolicy at the configured level, so
// any two runs over the same command stream reply identically. Returns when
// "quit" arrives or input closes.
int run_mock_uci(std::istream& in, std::ostream& out);

}  // namespace chesslm::engine
