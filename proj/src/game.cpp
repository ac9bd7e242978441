#include "warmstart/game.hpp"

#include <sstream>
#include <stdexcept>

namespace warmstart {

namespace {

constexpr int kDirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                             {0, 1},   {1, -1}, {1, 0},  {1, 1}};

bool in_bounds(int r, int c) {
  return r >= 0 && r < kBoardSide && c >= 0 && c < kBoardSide;
}

// Number of opponent pieces flipped by placing `player` at (r,c) along one
// direction; 0 if the direction does not close on an own piece.
int flips_in_direction(const GameState& s, int r, int c, int dr, int dc, int player) {
  int count = 0;
  int rr = r + dr, cc = c + dc;
  while (in_bounds(rr, cc) && s.at(rr, cc) == -player) {
    ++count;
    rr += dr;
    cc += dc;
  }
  if (count > 0 && in_bounds(rr, cc) && s.at(rr, cc) == player) return count;
  return 0;
}

bool othello_can_place(const GameState& s, int cell, int player) {
  if (s.board[cell] != 0) return false;
  int r = cell / kBoardSide, c = cell % kBoardSide;
  for (const auto& d : kDirs)
    if (flips_in_direction(s, r, c, d[0], d[1], player) > 0) return true;
  return false;
}

bool othello_has_placing_move(const GameState& s, int player) {
  for (int cell = 0; cell < kCells; ++cell)
    if (othello_can_place(s, cell, player)) return true;
  return false;
}

// Longest line through (r,c) for the piece at (r,c) reaches `target`.
bool line_through(const GameState& s, int r, int c, int target) {
  int player = s.at(r, c);
  if (player == 0) return false;
  constexpr int kAxes[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  for (const auto& ax : kAxes) {
    int len = 1;
    for (int sign : {-1, 1}) {
      int rr = r + sign * ax[0], cc = c + sign * ax[1];
      while (in_bounds(rr, cc) && s.at(rr, cc) == player) {
        ++len;
        rr += sign * ax[0];
        cc += sign * ax[1];
      }
    }
    if (len >= target) return true;
  }
  return false;
}

std::optional<int> line_winner(const GameState& s, int target) {
  for (int r = 0; r < kBoardSide; ++r)
    for (int c = 0; c < kBoardSide; ++c)
      if (s.at(r, c) != 0 && line_through(s, r, c, target)) return s.at(r, c);
  return std::nullopt;
}

bool board_full(const GameState& s) {
  for (int8_t v : s.board)
    if (v == 0) return false;
  return true;
}

}  // namespace

int action_space(GameId game) {
  switch (game) {
    case GameId::connect_four: return kBoardSide;
    case GameId::othello: return kCells + 1;
    case GameId::gobang: return kCells;
  }
  return 0;
}

const char* game_name(GameId game) {
  switch (game) {
    case GameId::connect_four: return "connect_four";
    case GameId::othello: return "othello";
    case GameId::gobang: return "gobang";
  }
  return "?";
}

std::optional<GameId> parse_game(const std::string& name) {
  if (name == "connect_four") return GameId::connect_four;
  if (name == "othello") return GameId::othello;
  if (name == "gobang") return GameId::gobang;
  return std::nullopt;
}

GameState initial_state(GameId game, int gobang_target) {
  GameState s;
  s.game = game;
  s.to_move = 1;
  s.gobang_target = static_cast<int8_t>(gobang_target);
  if (game == GameId::othello) {
    // Standard diagonal opening scaled to 6x6: player2 on the main diagonal.
    s.board[2 * kBoardSide + 2] = -1;
    s.board[3 * kBoardSide + 3] = -1;
    s.board[2 * kBoardSide + 3] = 1;
    s.board[3 * kBoardSide + 2] = 1;
  }
  return s;
}

std::vector<Move> legal_moves(const GameState& s) {
  if (is_terminal(s)) throw std::logic_error("legal_moves called on terminal state");
  std::vector<Move> moves;
  switch (s.game) {
    case GameId::connect_four:
      for (int c = 0; c < kBoardSide; ++c)
        if (s.at(0, c) == 0) moves.push_back({c});
      break;
    case GameId::othello:
      for (int cell = 0; cell < kCells; ++cell)
        if (othello_can_place(s, cell, s.to_move)) moves.push_back({cell});
      if (moves.empty()) moves.push_back({kOthelloPass});
      break;
    case GameId::gobang:
      for (int cell = 0; cell < kCells; ++cell)
        if (s.board[cell] == 0) moves.push_back({cell});
      break;
  }
  return moves;
}

GameState apply_move(const GameState& s, Move a) {
  GameState next = s;
  switch (s.game) {
    case GameId::connect_four: {
      if (a.index < 0 || a.index >= kBoardSide || s.at(0, a.index) != 0)
        throw std::invalid_argument("illegal connect_four move: column " +
                                    std::to_string(a.index));
      int row = kBoardSide - 1;
      while (s.at(row, a.index) != 0) --row;
      next.board[row * kBoardSide + a.index] = s.to_move;
      break;
    }
    case GameId::othello: {
      if (a.index == kOthelloPass) {
        if (othello_has_placing_move(s, s.to_move))
          throw std::invalid_argument("illegal othello pass: placing move exists");
        break;  // pass: board unchanged, turn flips below
      }
      if (a.index < 0 || a.index >= kCells || !othello_can_place(s, a.index, s.to_move))
        throw std::invalid_argument("illegal othello move: cell " +
                                    std::to_string(a.index));
      int r = a.index / kBoardSide, c = a.index % kBoardSide;
      next.board[a.index] = s.to_move;
      for (const auto& d : kDirs) {
        int n = flips_in_direction(s, r, c, d[0], d[1], s.to_move);
        for (int i = 1; i <= n; ++i)
          next.board[(r + i * d[0]) * kBoardSide + (c + i * d[1])] = s.to_move;
      }
      break;
    }
    case GameId::gobang: {
      if (a.index < 0 || a.index >= kCells || s.board[a.index] != 0)
        throw std::invalid_argument("illegal gobang move: cell " +
                                    std::to_string(a.index));
      next.board[a.index] = s.to_move;
      break;
    }
  }
  next.to_move = static_cast<int8_t>(-s.to_move);
  return next;
}

std::optional<int> terminal_value(const GameState& s) {
  switch (s.game) {
    case GameId::connect_four: {
      auto w = line_winner(s, 4);
      if (w) return *w;
      if (board_full(s)) return 0;
      return std::nullopt;
    }
    case GameId::gobang: {
      auto w = line_winner(s, s.gobang_target);
      if (w) return *w;
      if (board_full(s)) return 0;
      return std::nullopt;
    }
    case GameId::othello: {
      if (othello_has_placing_move(s, 1) || othello_has_placing_move(s, -1))
        return std::nullopt;
      int balance = 0;
      for (int8_t v : s.board) balance += v;
      return balance > 0 ? 1 : balance < 0 ? -1 : 0;
    }
  }
  return std::nullopt;
}

std::array<float, kCells> encode(const GameState& s) {
  std::array<float, kCells> x;
  for (int i = 0; i < kCells; ++i)
    x[i] = static_cast<float>(s.board[i] * s.to_move);
  return x;
}

std::string state_key(const GameState& s) {
  std::string key(kCells + 2, '.');
  for (int i = 0; i < kCells; ++i)
    key[i] = s.board[i] == 0 ? '.' : (s.board[i] == 1 ? 'X' : 'O');
  key[kCells] = s.to_move == 1 ? 'X' : 'O';
  key[kCells + 1] = static_cast<char>('0' + static_cast<int>(s.game));
  return key;
}

std::string to_diagram(const GameState& s) {
  std::string out;
  for (int r = 0; r < kBoardSide; ++r) {
    for (int c = 0; c < kBoardSide; ++c) {
      int8_t v = s.at(r, c);
      out += v == 0 ? '.' : (v == 1 ? 'X' : 'O');
    }
    out += '\n';
  }
  out += s.to_move == 1 ? "X to move\n" : "O to move\n";
  return out;
}

GameState from_diagram(GameId game, const std::string& text) {
  GameState s;
  s.game = game;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.find("to move") != std::string::npos) {
      s.to_move = line[0] == 'X' ? 1 : -1;
      continue;
    }
    if (row >= kBoardSide || line.size() < kBoardSide)
      throw std::invalid_argument("malformed board diagram");
    for (int c = 0; c < kBoardSide; ++c) {
      char ch = line[c];
      s.board[row * kBoardSide + c] = ch == 'X' ? 1 : ch == 'O' ? -1 : 0;
    }
    ++row;
  }
  if (row != kBoardSide) throw std::invalid_argument("board diagram needs 6 rows");
  return s;
}

}  // namespace warmstart
