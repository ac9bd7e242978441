#include "warmstart/selfplay.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "warmstart/parallel.hpp"

namespace warmstart {

namespace {

// Sub-stream tags for seed derivation.
constexpr uint64_t kTagEpisode = 0xE1;
constexpr uint64_t kTagTrain = 0x7A;
constexpr uint64_t kTagGate = 0x6A;
constexpr uint64_t kTagTreeA = 1, kTagTreeB = 2, kTagActions = 3;

SearchConfig tree_config(const LoopConfig& cfg, EnhancementKind kind,
                         double weight, uint64_t seed) {
  SearchConfig sc = cfg.search;
  sc.kind = kind;
  sc.weight = weight;
  sc.seed = seed;
  return sc;
}

struct EpisodePlayer {
  SearchTree* tree;
};

// Plays one episode where `pick_tree(t)` chooses the searcher for ply t
// (t counts from 1). Fills per-ply examples with z assigned retroactively.
EpisodeResult play_episode(GameId game, const Model& params, const LoopConfig& cfg,
                           const std::function<SearchTree&(int)>& pick_tree,
                           uint64_t seed) {
  NetworkEvaluator eval(std::shared_ptr<const Model>(&params, [](const Model*) {}));
  Rng action_rng(derive_seed(seed, kTagActions));
  GameState s = initial_state(game, cfg.gobang_target);

  EpisodeResult result;
  std::vector<int8_t> to_move_at_ply;
  int t = 1;
  while (!is_terminal(s)) {
    if (t > cfg.ply_cap) {
      result.hit_ply_cap = true;
      break;
    }
    SearchTree& tree = pick_tree(t);
    if (!tree.config().reuse_tree) tree.reset();
    PolicyVector pi = tree.search(s, eval);

    TrainingExample ex;
    ex.x = encode(s);
    ex.pi.assign(pi.begin(), pi.end());
    result.examples.push_back(std::move(ex));
    to_move_at_ply.push_back(s.to_move);

    Move a = select_action(pi, t, cfg.explore_steps, action_rng);
    s = apply_move(s, a);
    ++t;
  }
  result.plies = static_cast<int>(result.examples.size());
  result.outcome = result.hit_ply_cap ? 0 : *terminal_value(s);
  for (size_t i = 0; i < result.examples.size(); ++i)
    result.examples[i].z = static_cast<float>(result.outcome * to_move_at_ply[i]);
  return result;
}

}  // namespace

const char* mode_name(LoopMode mode) {
  switch (mode) {
    case LoopMode::fixed: return "fixed";
    case LoopMode::adaptive: return "adaptive";
    case LoopMode::baseline: return "baseline";
  }
  return "?";
}

std::optional<LoopMode> parse_mode(const std::string& name) {
  for (LoopMode m : {LoopMode::fixed, LoopMode::adaptive, LoopMode::baseline})
    if (name == mode_name(m)) return m;
  return std::nullopt;
}

double warmstart_weight(int iteration) { return 1.0 / iteration; }

Move select_action(const PolicyVector& pi, int t, int t_prime, Rng& rng) {
  if (t <= t_prime) {
    double r = uniform_real(rng);
    double acc = 0.0;
    int last_positive = -1;
    for (size_t a = 0; a < pi.size(); ++a) {
      if (pi[a] <= 0.0) continue;
      last_positive = static_cast<int>(a);
      acc += pi[a];
      if (r < acc) return {static_cast<int>(a)};
    }
    return {last_positive};  // r landed in rounding slack
  }
  int best = 0;
  for (size_t a = 1; a < pi.size(); ++a)
    if (pi[a] > pi[best]) best = static_cast<int>(a);
  return {best};
}

EpisodeResult run_episode_selfplay(GameId game, const Model& params,
                                   const LoopConfig& cfg, EnhancementKind kind,
                                   double weight, uint64_t seed) {
  SearchTree tree(game, tree_config(cfg, kind, weight, derive_seed(seed, kTagTreeA)));
  return play_episode(game, params, cfg,
                      [&tree](int) -> SearchTree& { return tree; }, seed);
}

EpisodeResult run_episode_mixed(GameId game, const Model& params,
                                const LoopConfig& cfg, double weight,
                                bool enhancement_moves_first, uint64_t seed) {
  SearchTree enh(game,
                 tree_config(cfg, cfg.kind, weight, derive_seed(seed, kTagTreeA)));
  SearchTree base(game, tree_config(cfg, EnhancementKind::baseline, weight,
                                    derive_seed(seed, kTagTreeB)));
  auto pick = [&](int t) -> SearchTree& {
    bool odd = (t % 2) == 1;
    return (odd == enhancement_moves_first) ? enh : base;
  };
  EpisodeResult result = play_episode(game, params, cfg, pick, seed);
  // Default MCTS plays player1 exactly when the enhancement does not move first.
  int mcts_side = enhancement_moves_first ? -1 : 1;
  result.mcts_reward = result.outcome * mcts_side;
  return result;
}

bool gate_model(GameId game, const Model& old_params, const Model& new_params,
                const LoopConfig& cfg, uint64_t seed, double* winrate_out) {
  int new_wins = 0, old_wins = 0;
  std::vector<int> results(cfg.gate_games, 0);  // +1 new win, -1 old win
  parallel_for(cfg.gate_games, cfg.workers, [&](int g) {
    bool new_is_p1 = g < cfg.gate_games / 2;
    uint64_t game_seed = derive_seed(seed, kTagGate, g);
    SearchTree tree_new(game, tree_config(cfg, EnhancementKind::baseline, 0.0,
                                          derive_seed(game_seed, kTagTreeA)));
    SearchTree tree_old(game, tree_config(cfg, EnhancementKind::baseline, 0.0,
                                          derive_seed(game_seed, kTagTreeB)));
    auto hold = [](const Model& m) {
      return std::shared_ptr<const Model>(&m, [](const Model*) {});
    };
    NetworkEvaluator eval_new(hold(new_params)), eval_old(hold(old_params));
    Rng rng(derive_seed(game_seed, kTagActions));

    GameState s = initial_state(game, cfg.gobang_target);
    int t = 1;
    while (!is_terminal(s) && t <= cfg.ply_cap) {
      bool new_to_move = (s.to_move == 1) == new_is_p1;
      SearchTree& tree = new_to_move ? tree_new : tree_old;
      const Evaluator& eval =
          new_to_move ? static_cast<const Evaluator&>(eval_new) : eval_old;
      PolicyVector pi = tree.search(s, eval);
      s = apply_move(s, select_action(pi, t, 0, rng));
      ++t;
    }
    int outcome = t > cfg.ply_cap ? 0 : *terminal_value(s);
    int new_result = new_is_p1 ? outcome : -outcome;
    results[g] = new_result;
  });
  for (int r : results) (r > 0 ? new_wins : old_wins) += r != 0 ? 1 : 0;
  int decided = new_wins + old_wins;
  double winrate = decided > 0 ? static_cast<double>(new_wins) / decided : 0.0;
  if (winrate_out) *winrate_out = winrate;
  return decided > 0 && winrate > cfg.gate_threshold;
}

void ReplayBuffer::push_iteration(int iteration, std::vector<TrainingExample> examples) {
  slots_.emplace_back(iteration, std::move(examples));
  while (static_cast<int>(slots_.size()) > capacity_) slots_.pop_front();
}

std::vector<const TrainingExample*> ReplayBuffer::flat() const {
  std::vector<const TrainingExample*> out;
  for (const auto& [iter, list] : slots_)
    for (const auto& ex : list) out.push_back(&ex);
  return out;
}

size_t ReplayBuffer::size() const {
  size_t n = 0;
  for (const auto& [iter, list] : slots_) n += list.size();
  return n;
}

TrainState make_train_state(GameId game, const LoopConfig& cfg) {
  TrainState state;
  state.game = game;
  state.params = init_params(game, derive_seed(cfg.master_seed, 0x1417));
  state.buffer = ReplayBuffer(cfg.buffer_iterations);
  return state;
}

void run_iteration(TrainState& state, const LoopConfig& cfg) {
  const int i = state.completed_iterations + 1;
  double weight = cfg.weight_policy == WeightPolicy::half ? 0.5 : warmstart_weight(i);

  std::vector<EpisodeResult> episodes(cfg.episodes);
  bool adaptive_arena = cfg.mode == LoopMode::adaptive && !state.sw.switched;
  EnhancementKind selfplay_kind = EnhancementKind::baseline;
  if (cfg.mode == LoopMode::fixed && i <= cfg.warmstart_length)
    selfplay_kind = cfg.kind;

  const Model& params = state.params;
  parallel_for(cfg.episodes, cfg.workers, [&](int ep) {
    uint64_t seed = derive_seed(cfg.master_seed, kTagEpisode, i, ep);
    if (adaptive_arena) {
      bool enhancement_first = ep < cfg.episodes / 2;
      episodes[ep] = run_episode_mixed(state.game, params, cfg, weight,
                                       enhancement_first, seed);
    } else {
      episodes[ep] =
          run_episode_selfplay(state.game, params, cfg, selfplay_kind, weight, seed);
    }
  });

  int r_mcts = 0;
  std::vector<TrainingExample> collected;
  for (const auto& ep : episodes) {
    r_mcts += ep.mcts_reward;
    collected.insert(collected.end(), ep.examples.begin(), ep.examples.end());
  }
  int n_examples = static_cast<int>(collected.size());

  ReplayBuffer next_buffer = state.buffer;
  next_buffer.push_iteration(i, std::move(collected));

  TrainConfig tc = cfg.train_cfg;
  tc.seed = derive_seed(cfg.master_seed, kTagTrain, i);
  Model trained = train(state.params, next_buffer.flat(), tc);

  double gate_winrate = 0.0;
  bool accepted = gate_model(state.game, state.params, trained, cfg,
                             derive_seed(cfg.master_seed, kTagGate, i), &gate_winrate);

  // Commit.
  state.buffer = std::move(next_buffer);
  if (accepted) state.params = std::move(trained);
  if (adaptive_arena) {
    state.sw.r_mcts = r_mcts;
    if (r_mcts > 0) {
      state.sw.switched = true;
      state.sw.switch_iteration = i;
    }
  }
  state.completed_iterations = i;
  IterationLog log;
  log.iteration = i;
  log.examples = n_examples;
  log.r_mcts = adaptive_arena ? r_mcts : 0;
  log.gate_winrate = gate_winrate;
  log.accepted = accepted;
  log.switched = state.sw.switched;
  state.logs.push_back(log);
}

void write_examples(const std::string& path, int action_size,
                    const std::vector<TrainingExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write examples file: " + path);
  auto put_u32 = [&out](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("WZEX", 4);
  put_u32(1);  // version
  put_u32(static_cast<uint32_t>(kCells));
  put_u32(static_cast<uint32_t>(action_size));
  put_u32(static_cast<uint32_t>(examples.size()));
  uint32_t record_len = static_cast<uint32_t>((kCells + action_size + 1) * sizeof(float));
  for (const auto& ex : examples) {
    put_u32(record_len);
    out.write(reinterpret_cast<const char*>(ex.x.data()), kCells * sizeof(float));
    out.write(reinterpret_cast<const char*>(ex.pi.data()), action_size * sizeof(float));
    out.write(reinterpret_cast<const char*>(&ex.z), sizeof(float));
  }
}

std::vector<TrainingExample> read_examples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read examples file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "WZEX", 4) != 0)
    throw std::runtime_error("not an examples file: " + path);
  auto get_u32 = [&in] {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  uint32_t version = get_u32();
  if (version != 1) throw std::runtime_error("unknown examples file version");
  uint32_t cells = get_u32();
  uint32_t action_size = get_u32();
  uint32_t count = get_u32();
  if (cells != kCells) throw std::runtime_error("examples file board shape mismatch");
  std::vector<TrainingExample> out(count);
  for (uint32_t r = 0; r < count; ++r) {
    uint32_t record_len = get_u32();
    if (record_len != (cells + action_size + 1) * sizeof(float))
      throw std::runtime_error("examples file record length mismatch");
    TrainingExample& ex = out[r];
    in.read(reinterpret_cast<char*>(ex.x.data()), kCells * sizeof(float));
    ex.pi.resize(action_size);
    in.read(reinterpret_cast<char*>(ex.pi.data()), action_size * sizeof(float));
    in.read(reinterpret_cast<char*>(&ex.z), sizeof(float));
    if (!in) throw std::runtime_error("truncated examples file: " + path);
  }
  return out;
}

}  // namespace warmstart
