#pragma once

#include <memory>
#include <string>
#include <vector>

#include "warmstart/search.hpp"

namespace warmstart {

struct AgentSpec {
  std::string id;
  EnhancementKind kind = EnhancementKind::baseline;
  std::shared_ptr<const Model> model;
  SearchConfig search;    // m, c, equivalence, weight
  int explore_steps = 0;  // 0 = pure argmax play
  // "Untrained network" agent: ignore `model` and draw a fresh random
  // initialization per game (from the game seed, shared by both agents in
  // that game). Pure-argmax play is otherwise deterministic, so repetitions
  // of an untrained pairing would all replay one game.
  bool fresh_net_per_game = false;
};

struct MatchResult {
  std::string player_a, player_b;
  int wins_a = 0, wins_b = 0, draws = 0, games = 0;
};

// `games` head-to-head games with alternating first player. Per-game seeds
// derive from (seed, sorted player ids, game index), so results do not
// depend on argument order.
MatchResult play_match(GameId game, const AgentSpec& a, const AgentSpec& b,
                       int games, uint64_t seed, int workers = 1,
                       int gobang_target = 5);

std::vector<MatchResult> round_robin(GameId game, const std::vector<AgentSpec>& players,
                                     int games_per_pair, uint64_t seed,
                                     int workers = 1, int gobang_target = 5);

struct EloRating {
  std::string id;
  double rating = 0.0;
  int games = 0;
};

struct EloTable {
  std::vector<EloRating> ratings;  // mean rating fixed to 0
  double rating_of(const std::string& id) const;
};

struct EloOptions {
  // One pseudo-draw per pair keeps all-wins edges finite.
  bool regularize = true;
  double tolerance = 0.01;  // max per-iteration rating change, in Elo points
  int max_iterations = 100000;
};

// Maximum-likelihood logistic Elo via minorization-maximization; draws count
// as half a win for each side. Throws if the result graph is disconnected.
EloTable fit_elo(const std::vector<MatchResult>& results, const EloOptions& opt = {});

// Log-likelihood of the observed results under given ratings (draws as half
// wins). Exposed so the fit's monotonicity is directly checkable.
double elo_log_likelihood(const std::vector<MatchResult>& results,
                          const EloTable& table);

void write_results_csv(const std::string& path, const std::vector<MatchResult>& results);
std::vector<MatchResult> read_results_csv(const std::string& path);
void write_elo_csv(const std::string& path, const EloTable& table);

}  // namespace warmstart
