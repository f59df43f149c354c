#pragma once

#include <string>
#include <vector>

#include "chesslm/board.hpp"
#include "chesslm/movegen.hpp"

namespace chesslm::chess {

// Repetition identity per the FIDE rule: placement, side to move, castling
// rights, and en-passant availability. The en-passant file only counts when
// an en-passant capture is actually legal; clocks are excluded.
std::string position_key(const BoardState& board);

// A game in progress: start position, the moves played, and the multiset of
// position keys (one per position, so moves.size() + 1 entries).
class GameHistory {
public:
    GameHistory();
    explicit GameHistory(BoardState start);

    const BoardState& start() const { return start_; }
    const BoardState& current() const { return current_; }
    const std::vector<MoveRecord>& moves() const { return moves_; }
    const std::vector<std::string>& position_keys() const { return keys_; }

    // Applies a legal move; throws IllegalMoveError otherwise.
    void push(const MoveRecord& move);
    void push_san(const std::string& san);

private:
    BoardState start_;
    BoardState current_;
    std::vector<MoveRecord> moves_;
    std::vector<std::string> keys_;
};

// Number of times the current position identity has occurred in the game;
// a fresh game reports 1, and 3 signals a claimable threefold draw.
int repetition_count(const GameHistory& history);

// Folds apply_move over a SAN move sequence from the initial position.
// Throws IllegalMoveError naming the index and SAN of the first bad move.
BoardState pgn_to_fen(const std::vector<std::string>& san_moves);

// Extracts the SAN moves from PGN movetext. Headers ("[...]"), comments
// ("{...}"), NAGs ("$n"), move numbers, and result tokens are ignored.
// Variations are not supported and raise ParseError.
std::vector<std::string> parse_pgn_movetext(const std::string& text);

enum class GameOutcome { white_win, black_win, draw };
enum class Termination { checkmate, draw_rule, forfeit, adjudicated };

// One finished game as produced by generation or the arena.
struct GameRecord {
    std::vector<std::string> moves;
    GameOutcome result = GameOutcome::draw;
    std::string white_id;
    std::string black_id;
    Termination termination = Termination::adjudicated;
    int forfeits_by_white = 0;
    int forfeits_by_black = 0;
};

std::string outcome_token(GameOutcome outcome);

// Movetext with move numbers and the result token, wrapped at 80 columns.
std::string render_movetext(const GameRecord& game);

}  // namespace chesslm::chess
