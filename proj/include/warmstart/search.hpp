#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "warmstart/game.hpp"
#include "warmstart/net.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

enum class EnhancementKind { baseline, rollout, rave, rora, wro, wrora };

const char* kind_name(EnhancementKind kind);
std::optional<EnhancementKind> parse_kind(const std::string& name);

inline bool kind_uses_rave(EnhancementKind k) {
  return k == EnhancementKind::rave || k == EnhancementKind::rora ||
         k == EnhancementKind::wrora;
}
inline bool kind_uses_rollout(EnhancementKind k) {
  return k == EnhancementKind::rollout || k == EnhancementKind::rora ||
         k == EnhancementKind::wro || k == EnhancementKind::wrora;
}

// State evaluator contract: policy over the full action space plus a value
// in [-1,1] from to_move's perspective. Must be const-callable from many
// searches at once.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Prediction evaluate(const GameState& s) const = 0;
};

class NetworkEvaluator : public Evaluator {
 public:
  explicit NetworkEvaluator(std::shared_ptr<const Model> model)
      : model_(std::move(model)) {}
  Prediction evaluate(const GameState& s) const override;

 private:
  std::shared_ptr<const Model> model_;
};

struct SearchConfig {
  int simulations = 100;          // m
  double c_uct = 1.0;             // c
  double equivalence = 100.0;     // RAVE equivalence parameter
  EnhancementKind kind = EnhancementKind::baseline;
  double weight = 0.5;            // blend weight for wro / wrora
  uint64_t seed = 0;
  bool reuse_tree = true;         // keep statistics across moves of one episode
};

using PolicyVector = std::vector<double>;

// Selection / value formulas, exposed for direct checking.
double puct_score(double q, double prior, long n_sa, long n_total, double c);
double rave_beta(long n_total, double equivalence);
double uct_rave_score(double u, double u_rave, double beta);
double blended_leaf_value(double v_network, double v_rollout, double weight);

// Uniformly random playout to a terminal state; value from s.to_move's view.
// If `moves` is given, the playout's move sequence is appended to it.
double rollout_value(const GameState& s, Rng& rng,
                     std::vector<int>* moves = nullptr);

// One step of a simulation trajectory viewed through the RAVE tables it
// should update. Exposed as a free function so the AMAF rule itself can be
// checked against an independent pair-enumeration oracle.
struct RaveStep {
  const std::vector<uint8_t>* legal;
  std::vector<int>* rave_visits;
  std::vector<double>* rave_q;
  long* rave_total;
  int action;
};

// All-moves-as-first update. For every ancestor step t1 and action a played
// at step t2 >= t1 — in the tree part of the simulation or in its random
// playout continuation (`tail`) — with a legal at t1 and not played in
// [t1, t2): running-mean update of the t1 tables. `root_value` is the
// simulation's return from the root (step 0) player's perspective. With
// `outcome_like` set (rollout-backed simulations, whose return is a game
// outcome) the value is sign-converted to each ancestor's side; otherwise
// (network-backed simulations) the scalar enters the running mean as-is,
// per the published update rule.
void rave_path_update(const std::vector<RaveStep>& path,
                      const std::vector<int>& tail, double root_value,
                      bool outcome_like);

// One search tree. Statistics are keyed by canonical state so transposed
// paths share a node. Single-threaded; one instance per concurrent episode.
class SearchTree {
 public:
  SearchTree(GameId game, SearchConfig cfg);

  // Runs exactly cfg.simulations simulations from `root` and returns the
  // visit-count policy over the full action space. Throws on evaluator
  // failure or terminal root.
  PolicyVector search(const GameState& root, const Evaluator& eval);

  void reset();
  size_t node_count() const { return nodes_.size(); }
  const SearchConfig& config() const { return cfg_; }
  void set_weight(double w) { cfg_.weight = w; }
  void set_kind(EnhancementKind k) { cfg_.kind = k; }

  struct Node {
    std::vector<uint8_t> legal;
    std::vector<float> prior;
    std::vector<int> visits;
    std::vector<double> q;
    std::vector<int> rave_visits;
    std::vector<double> rave_q;
    long total_visits = 0;
    long rave_total = 0;
    std::optional<int> terminal;  // outcome from player1's perspective
  };

  // Read-only statistics lookup, for tests and diagnostics.
  const Node* find_node(const GameState& s) const;

 private:
  struct PathStep {
    Node* node;
    int action;
  };

  double simulate(const GameState& s, const Evaluator& eval,
                  std::vector<PathStep>& path);
  Node& expand(const GameState& s, const std::string& key, const Evaluator& eval,
               double& leaf_value);
  int select_action(const Node& node) const;
  void apply_rave_updates(const std::vector<PathStep>& path, double root_value);

  // Moves of the random playout run by the most recent leaf expansion, if
  // any; consumed by the AMAF update of that simulation.
  std::vector<int> last_playout_;

  GameId game_;
  SearchConfig cfg_;
  int action_size_;
  std::unordered_map<std::string, Node> nodes_;
  Rng rng_;
};

}  // namespace warmstart
