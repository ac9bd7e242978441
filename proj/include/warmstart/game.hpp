#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace warmstart {

enum class GameId { connect_four, othello, gobang };

constexpr int kBoardSide = 6;
constexpr int kCells = kBoardSide * kBoardSide;
constexpr int kOthelloPass = 36;  // action id of the explicit pass move

// Fixed action-space size: 6 columns / 36 cells + pass / 36 cells.
int action_space(GameId game);

const char* game_name(GameId game);
std::optional<GameId> parse_game(const std::string& name);

struct Move {
  int index = -1;
  bool operator==(const Move&) const = default;
};

// Immutable board position. player1 = +1, player2 = -1, empty = 0.
// to_move is +1 or -1.
struct GameState {
  GameId game = GameId::connect_four;
  std::array<int8_t, kCells> board{};
  int8_t to_move = 1;
  // Gobang line length needed to win (5 by default, 4 for sensitivity runs).
  int8_t gobang_target = 5;

  int8_t at(int row, int col) const { return board[row * kBoardSide + col]; }
};

GameState initial_state(GameId game, int gobang_target = 5);

// Legal moves of a non-terminal state. Othello returns {pass} when no
// flipping placement exists. Calling on a terminal state throws
// std::logic_error.
std::vector<Move> legal_moves(const GameState& s);

// Successor state; throws std::invalid_argument with a diagnostic if the
// move is illegal.
GameState apply_move(const GameState& s, Move a);

// +1 player1 win, -1 player2 win, 0 draw; nullopt when non-terminal.
std::optional<int> terminal_value(const GameState& s);

inline bool is_terminal(const GameState& s) { return terminal_value(s).has_value(); }

// Canonical network input: cell values from the perspective of to_move
// (+1 own piece, -1 opponent piece, 0 empty).
std::array<float, kCells> encode(const GameState& s);

// Hash key for tree statistics: identical board + to_move + game collapse
// to one entry.
std::string state_key(const GameState& s);

// Text diagram: six rows of '.', 'X' (player1), 'O' (player2), then a line
// "X to move" or "O to move".
std::string to_diagram(const GameState& s);
GameState from_diagram(GameId game, const std::string& text);

}  // namespace warmstart
