#include "warmstart/search.hpp"

#include <cmath>
#include <stdexcept>

namespace warmstart {

const char* kind_name(EnhancementKind kind) {
  switch (kind) {
    case EnhancementKind::baseline: return "baseline";
    case EnhancementKind::rollout: return "rollout";
    case EnhancementKind::rave: return "rave";
    case EnhancementKind::rora: return "rora";
    case EnhancementKind::wro: return "wro";
    case EnhancementKind::wrora: return "wrora";
  }
  return "?";
}

std::optional<EnhancementKind> parse_kind(const std::string& name) {
  for (EnhancementKind k :
       {EnhancementKind::baseline, EnhancementKind::rollout, EnhancementKind::rave,
        EnhancementKind::rora, EnhancementKind::wro, EnhancementKind::wrora})
    if (name == kind_name(k)) return k;
  return std::nullopt;
}

Prediction NetworkEvaluator::evaluate(const GameState& s) const {
  std::vector<uint8_t> legal(model_->arch.action_size, 0);
  for (Move a : legal_moves(s)) legal[a.index] = 1;
  return predict(*model_, encode(s), legal);
}

double puct_score(double q, double prior, long n_sa, long n_total, double c) {
  return q + c * prior * std::sqrt(static_cast<double>(n_total)) / (n_sa + 1);
}

double rave_beta(long n_total, double equivalence) {
  return std::sqrt(equivalence / (3.0 * n_total + equivalence));
}

double uct_rave_score(double u, double u_rave, double beta) {
  return (1.0 - beta) * u + beta * u_rave;
}

double blended_leaf_value(double v_network, double v_rollout, double weight) {
  return (1.0 - weight) * v_network + weight * v_rollout;
}

double rollout_value(const GameState& start, Rng& rng, std::vector<int>* out) {
  GameState s = start;
  for (;;) {
    auto tv = terminal_value(s);
    if (tv) return static_cast<double>(*tv * start.to_move);
    auto moves = legal_moves(s);
    Move m = moves[uniform_index(rng, static_cast<int>(moves.size()))];
    if (out) out->push_back(m.index);
    s = apply_move(s, m);
  }
}

SearchTree::SearchTree(GameId game, SearchConfig cfg)
    : game_(game), cfg_(cfg), action_size_(action_space(game)), rng_(cfg.seed) {}

void SearchTree::reset() { nodes_.clear(); }

SearchTree::Node& SearchTree::expand(const GameState& s, const std::string& key,
                                     const Evaluator& eval, double& leaf_value) {
  Node node;
  node.legal.assign(action_size_, 0);
  for (Move a : legal_moves(s)) node.legal[a.index] = 1;
  node.visits.assign(action_size_, 0);
  node.q.assign(action_size_, 0.0);
  // Allocated regardless of the current kind: one tree may serve both a
  // RAVE-blended and a plain searcher within an episode.
  node.rave_visits.assign(action_size_, 0);
  node.rave_q.assign(action_size_, 0.0);

  double v_network = 0.0;
  Prediction pred = eval.evaluate(s);
  if (static_cast<int>(pred.policy.size()) != action_size_)
    throw std::runtime_error("evaluator returned a policy of the wrong size");
  node.prior.assign(action_size_, 0.f);
  float sum = 0.f;
  for (int a = 0; a < action_size_; ++a)
    if (node.legal[a]) {
      node.prior[a] = pred.policy[a];
      sum += pred.policy[a];
    }
  if (sum <= 0.f) {
    int n_legal = 0;
    for (uint8_t l : node.legal) n_legal += l;
    for (int a = 0; a < action_size_; ++a)
      node.prior[a] = node.legal[a] ? 1.f / n_legal : 0.f;
  } else {
    for (float& p : node.prior) p /= sum;
  }
  v_network = pred.value;

  switch (cfg_.kind) {
    case EnhancementKind::baseline:
    case EnhancementKind::rave:
      leaf_value = v_network;
      break;
    case EnhancementKind::rollout:
    case EnhancementKind::rora:
      leaf_value = rollout_value(s, rng_, &last_playout_);
      break;
    case EnhancementKind::wro:
    case EnhancementKind::wrora:
      leaf_value = blended_leaf_value(v_network, rollout_value(s, rng_, &last_playout_),
                                      cfg_.weight);
      break;
  }
  return nodes_.emplace(key, std::move(node)).first->second;
}

int SearchTree::select_action(const Node& node) const {
  const bool use_rave = kind_uses_rave(cfg_.kind);
  int best = -1;
  double best_score = 0.0;
  for (int a = 0; a < action_size_; ++a) {
    if (!node.legal[a]) continue;
    double u = puct_score(node.q[a], node.prior[a], node.visits[a],
                          node.total_visits, cfg_.c_uct);
    double score = u;
    if (use_rave) {
      double beta = rave_beta(node.total_visits, cfg_.equivalence);
      double u_rave = node.rave_q[a] +
                      cfg_.c_uct * node.prior[a] *
                          std::sqrt(static_cast<double>(node.rave_total)) /
                          (node.rave_visits[a] + 1);
      score = uct_rave_score(u, u_rave, beta);
    }
    if (best < 0 || score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

double SearchTree::simulate(const GameState& s, const Evaluator& eval,
                            std::vector<PathStep>& path) {
  auto tv = terminal_value(s);
  if (tv) return static_cast<double>(*tv * s.to_move);

  std::string key = state_key(s);
  auto it = nodes_.find(key);
  if (it == nodes_.end()) {
    double leaf_value = 0.0;
    expand(s, key, eval, leaf_value);
    return leaf_value;
  }

  Node& node = it->second;
  int a = select_action(node);
  path.push_back({&node, a});
  double v = -simulate(apply_move(s, Move{a}), eval, path);
  node.q[a] = (node.q[a] * node.visits[a] + v) / (node.visits[a] + 1);
  node.visits[a] += 1;
  node.total_visits += 1;
  return v;
}

void rave_path_update(const std::vector<RaveStep>& path,
                      const std::vector<int>& tail, double root_value,
                      bool outcome_like) {
  const size_t n = path.size();
  auto action_at = [&](size_t j) {
    return j < n ? path[j].action : tail[j - n];
  };
  const size_t total = n + tail.size();
  for (size_t i = 0; i < n; ++i) {
    const RaveStep& step = path[i];
    // A rollout outcome is re-signed to the ancestor's side; a network
    // scalar enters the running mean as-is at every qualifying pair.
    const double v =
        outcome_like && (i % 2 != 0) ? -root_value : root_value;
    uint64_t seen = 0;  // action ids fit in 37 bits
    for (size_t j = i; j < total; ++j) {
      int a = action_at(j);
      uint64_t bit = 1ULL << a;
      if (seen & bit) continue;  // already played between t1 and t2
      seen |= bit;
      if (!(*step.legal)[a]) continue;
      (*step.rave_q)[a] = ((*step.rave_q)[a] * (*step.rave_visits)[a] + v) /
                          ((*step.rave_visits)[a] + 1);
      (*step.rave_visits)[a] += 1;
      *step.rave_total += 1;
    }
  }
}

void SearchTree::apply_rave_updates(const std::vector<PathStep>& path,
                                    double root_value) {
  std::vector<RaveStep> steps;
  steps.reserve(path.size());
  for (const PathStep& p : path)
    steps.push_back({&p.node->legal, &p.node->rave_visits, &p.node->rave_q,
                     &p.node->rave_total, p.action});
  const bool outcome_like = cfg_.kind == EnhancementKind::rora ||
                            cfg_.kind == EnhancementKind::wrora;
  rave_path_update(steps, last_playout_, root_value, outcome_like);
}

const SearchTree::Node* SearchTree::find_node(const GameState& s) const {
  auto it = nodes_.find(state_key(s));
  return it == nodes_.end() ? nullptr : &it->second;
}

PolicyVector SearchTree::search(const GameState& root, const Evaluator& eval) {
  if (is_terminal(root)) throw std::logic_error("search called on terminal state");

  std::string root_key = state_key(root);
  if (!nodes_.contains(root_key)) {
    double unused = 0.0;
    expand(root, root_key, eval, unused);
  }
  Node& root_node = nodes_.at(root_key);
  std::vector<int> before = root_node.visits;

  std::vector<PathStep> path;
  for (int sim = 0; sim < cfg_.simulations; ++sim) {
    path.clear();
    last_playout_.clear();
    double v = simulate(root, eval, path);
    if (kind_uses_rave(cfg_.kind)) apply_rave_updates(path, v);
  }

  PolicyVector pi(action_size_, 0.0);
  long delta_sum = 0;
  for (int a = 0; a < action_size_; ++a) delta_sum += root_node.visits[a] - before[a];
  for (int a = 0; a < action_size_; ++a)
    pi[a] = static_cast<double>(root_node.visits[a] - before[a]) / delta_sum;
  return pi;
}

}  // namespace warmstart
