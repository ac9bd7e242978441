#include "warmstart/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "warmstart/parallel.hpp"
#include "warmstart/selfplay.hpp"

namespace warmstart {

namespace {

uint64_t string_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// One game; returns result for the player moving first.
int play_single_game(GameId game, const AgentSpec& first, const AgentSpec& second,
                     uint64_t seed, int gobang_target) {
  SearchConfig cfg_f = first.search;
  cfg_f.kind = first.kind;
  cfg_f.seed = derive_seed(seed, 1);
  SearchConfig cfg_s = second.search;
  cfg_s.kind = second.kind;
  cfg_s.seed = derive_seed(seed, 2);
  SearchTree tree_f(game, cfg_f), tree_s(game, cfg_s);
  std::shared_ptr<const Model> fresh;
  if (first.fresh_net_per_game || second.fresh_net_per_game)
    fresh = std::make_shared<const Model>(init_params(game, derive_seed(seed, 4)));
  NetworkEvaluator eval_f(first.fresh_net_per_game ? fresh : first.model),
      eval_s(second.fresh_net_per_game ? fresh : second.model);
  Rng rng(derive_seed(seed, 3));

  GameState s = initial_state(game, gobang_target);
  int t = 1;
  const int ply_cap = 200;
  while (!is_terminal(s) && t <= ply_cap) {
    bool first_to_move = s.to_move == 1;
    SearchTree& tree = first_to_move ? tree_f : tree_s;
    const Evaluator& eval =
        first_to_move ? static_cast<const Evaluator&>(eval_f) : eval_s;
    int t_prime = first_to_move ? first.explore_steps : second.explore_steps;
    PolicyVector pi = tree.search(s, eval);
    s = apply_move(s, select_action(pi, t, t_prime, rng));
    ++t;
  }
  return t > ply_cap ? 0 : *terminal_value(s);
}

}  // namespace

MatchResult play_match(GameId game, const AgentSpec& a, const AgentSpec& b,
                       int games, uint64_t seed, int workers, int gobang_target) {
  if (games <= 0) throw std::invalid_argument("play_match: game count must be positive");
  // Canonical pair order makes the schedule independent of argument order.
  const bool a_canonical = a.id <= b.id;
  const AgentSpec& p = a_canonical ? a : b;
  const AgentSpec& q = a_canonical ? b : a;
  uint64_t pair_seed = derive_seed(seed, string_hash(p.id), string_hash(q.id));

  std::vector<int> outcomes(games, 0);  // from p's perspective
  parallel_for(games, workers, [&](int g) {
    uint64_t game_seed = derive_seed(pair_seed, static_cast<uint64_t>(g));
    bool p_first = g % 2 == 0;
    int first_result = play_single_game(game, p_first ? p : q, p_first ? q : p,
                                        game_seed, gobang_target);
    outcomes[g] = p_first ? first_result : -first_result;
  });

  MatchResult r;
  r.player_a = a.id;
  r.player_b = b.id;
  r.games = games;
  for (int o : outcomes) {
    int for_a = a_canonical ? o : -o;
    if (for_a > 0) ++r.wins_a;
    else if (for_a < 0) ++r.wins_b;
    else ++r.draws;
  }
  return r;
}

std::vector<MatchResult> round_robin(GameId game, const std::vector<AgentSpec>& players,
                                     int games_per_pair, uint64_t seed, int workers,
                                     int gobang_target) {
  if (players.size() < 2)
    throw std::invalid_argument("round_robin needs at least two players");
  std::vector<MatchResult> results;
  for (size_t i = 0; i < players.size(); ++i)
    for (size_t j = i + 1; j < players.size(); ++j)
      results.push_back(play_match(game, players[i], players[j], games_per_pair,
                                   seed, workers, gobang_target));
  return results;
}

double EloTable::rating_of(const std::string& id) const {
  for (const auto& r : ratings)
    if (r.id == id) return r.rating;
  throw std::out_of_range("no rating for player: " + id);
}

namespace {

struct PairStats {
  double wins_i = 0, wins_j = 0;  // fractional: draws count half
  double games = 0;
};

}  // namespace

EloTable fit_elo(const std::vector<MatchResult>& results, const EloOptions& opt) {
  std::map<std::string, int> index;
  for (const auto& r : results) {
    index.emplace(r.player_a, 0);
    index.emplace(r.player_b, 0);
  }
  int n = 0;
  for (auto& [id, idx] : index) idx = n++;
  if (n < 2) throw std::invalid_argument("fit_elo needs at least two players");

  std::map<std::pair<int, int>, PairStats> pairs;
  std::vector<int> games_per_player(n, 0);
  for (const auto& r : results) {
    int i = index[r.player_a], j = index[r.player_b];
    double wi = r.wins_a + 0.5 * r.draws, wj = r.wins_b + 0.5 * r.draws;
    if (i > j) {
      std::swap(i, j);
      std::swap(wi, wj);
    }
    auto& ps = pairs[{i, j}];
    ps.wins_i += wi;
    ps.wins_j += wj;
    ps.games += r.games;
    games_per_player[i] += r.games;
    games_per_player[j] += r.games;
  }
  if (opt.regularize) {
    for (auto& [key, ps] : pairs) {
      ps.wins_i += 0.5;
      ps.wins_j += 0.5;
      ps.games += 1;
    }
  }

  // Connectivity (union-find).
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& [key, ps] : pairs)
    if (ps.games > 0) parent[find(key.first)] = find(key.second);
  std::map<int, std::vector<std::string>> components;
  for (const auto& [id, idx] : index) components[find(idx)].push_back(id);
  if (components.size() > 1) {
    std::string msg = "fit_elo: result graph is disconnected; components:";
    for (const auto& [root, ids] : components) {
      msg += " {";
      for (size_t k = 0; k < ids.size(); ++k) msg += (k ? "," : "") + ids[k];
      msg += "}";
    }
    throw std::runtime_error(msg);
  }

  // Bradley-Terry MM iteration on strengths gamma.
  std::vector<double> gamma(n, 1.0), total_wins(n, 0.0);
  for (const auto& [key, ps] : pairs) {
    total_wins[key.first] += ps.wins_i;
    total_wins[key.second] += ps.wins_j;
  }
  const double scale = 400.0 / std::log(10.0);
  auto rating = [&](double g) { return scale * std::log(g); };
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::vector<double> denom(n, 0.0);
    for (const auto& [key, ps] : pairs) {
      double d = ps.games / (gamma[key.first] + gamma[key.second]);
      denom[key.first] += d;
      denom[key.second] += d;
    }
    double max_change = 0.0;
    for (int k = 0; k < n; ++k) {
      double g_new = denom[k] > 0 ? std::max(total_wins[k], 1e-12) / denom[k]
                                  : gamma[k];
      max_change = std::max(max_change, std::abs(rating(g_new) - rating(gamma[k])));
      gamma[k] = g_new;
    }
    if (max_change < opt.tolerance) break;
  }

  EloTable table;
  double mean = 0.0;
  for (int k = 0; k < n; ++k) mean += rating(gamma[k]);
  mean /= n;
  table.ratings.resize(n);
  for (const auto& [id, idx] : index) {
    table.ratings[idx] = {id, rating(gamma[idx]) - mean, games_per_player[idx]};
  }
  return table;
}

double elo_log_likelihood(const std::vector<MatchResult>& results,
                          const EloTable& table) {
  double ll = 0.0;
  for (const auto& r : results) {
    double ra = table.rating_of(r.player_a), rb = table.rating_of(r.player_b);
    double pa = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
    double wa = r.wins_a + 0.5 * r.draws, wb = r.wins_b + 0.5 * r.draws;
    ll += wa * std::log(std::max(pa, 1e-300)) + wb * std::log(std::max(1.0 - pa, 1e-300));
  }
  return ll;
}

void write_results_csv(const std::string& path, const std::vector<MatchResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "player_a,player_b,wins_a,wins_b,draws,games\n";
  for (const auto& r : results)
    out << r.player_a << ',' << r.player_b << ',' << r.wins_a << ',' << r.wins_b
        << ',' << r.draws << ',' << r.games << '\n';
}

std::vector<MatchResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<MatchResult> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    MatchResult r;
    std::string field;
    std::getline(row, r.player_a, ',');
    std::getline(row, r.player_b, ',');
    std::getline(row, field, ',');
    r.wins_a = std::stoi(field);
    std::getline(row, field, ',');
    r.wins_b = std::stoi(field);
    std::getline(row, field, ',');
    r.draws = std::stoi(field);
    std::getline(row, field, ',');
    r.games = std::stoi(field);
    out.push_back(std::move(r));
  }
  return out;
}

void write_elo_csv(const std::string& path, const EloTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "player,rating,games\n";
  for (const auto& r : table.ratings)
    out << r.id << ',' << r.rating << ',' << r.games << '\n';
}

}  // namespace warmstart
