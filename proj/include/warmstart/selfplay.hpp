#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "warmstart/net.hpp"
#include "warmstart/search.hpp"

namespace warmstart {

enum class LoopMode { fixed, adaptive, baseline };
enum class WeightPolicy { half, one_over_i };

const char* mode_name(LoopMode mode);
std::optional<LoopMode> parse_mode(const std::string& name);

struct LoopConfig {
  int iterations = 100;         // I
  int warmstart_length = 5;     // I' (fixed mode only)
  int episodes = 50;            // E (even: adaptive mode splits into halves)
  int explore_steps = 15;       // T'
  int gate_games = 40;          // n
  double gate_threshold = 0.6;  // u
  int buffer_iterations = 20;   // rs
  EnhancementKind kind = EnhancementKind::wrora;
  LoopMode mode = LoopMode::fixed;
  WeightPolicy weight_policy = WeightPolicy::one_over_i;
  int ply_cap = 200;  // runaway guard; scored as a draw
  int gobang_target = 5;
  SearchConfig search;      // m, c, equivalence, reuse_tree
  TrainConfig train_cfg;    // ep, bs, lr, d
  uint64_t master_seed = 0;
  int workers = 1;
};

// weight = 1/i schedule for the blended enhancements.
double warmstart_weight(int iteration);

// t <= t_prime: sample proportionally to pi; afterwards argmax with
// lowest-index tie-break.
Move select_action(const PolicyVector& pi, int t, int t_prime, Rng& rng);

struct EpisodeResult {
  std::vector<TrainingExample> examples;
  int outcome = 0;       // player1's result
  int mcts_reward = 0;   // default-MCTS side's result (mixed episodes)
  int plies = 0;
  bool hit_ply_cap = false;
};

EpisodeResult run_episode_selfplay(GameId game, const Model& params,
                                   const LoopConfig& cfg, EnhancementKind kind,
                                   double weight, uint64_t seed);

// Arena-in-self-play episode: one side searches with the enhancement, the
// other with default MCTS, alternating by ply parity.
EpisodeResult run_episode_mixed(GameId game, const Model& params,
                                const LoopConfig& cfg, double weight,
                                bool enhancement_moves_first, uint64_t seed);

// n gating games, colors split evenly, both sides baseline search with pure
// argmax play. Accepts iff the new model's winrate over decided games is
// strictly above the threshold. Draws are excluded from the denominator.
bool gate_model(GameId game, const Model& old_params, const Model& new_params,
                const LoopConfig& cfg, uint64_t seed, double* winrate_out = nullptr);

struct SwitchState {
  bool switched = false;
  int r_mcts = 0;  // last completed iteration's balance
  std::optional<int> switch_iteration;
};

struct IterationLog {
  int iteration = 0;
  int examples = 0;
  int r_mcts = 0;
  double gate_winrate = 0.0;
  bool accepted = false;
  bool switched = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity_iterations = 20) : capacity_(capacity_iterations) {}

  void push_iteration(int iteration, std::vector<TrainingExample> examples);
  std::vector<const TrainingExample*> flat() const;
  size_t size() const;
  int capacity() const { return capacity_; }
  const std::deque<std::pair<int, std::vector<TrainingExample>>>& slots() const {
    return slots_;
  }

 private:
  int capacity_;
  std::deque<std::pair<int, std::vector<TrainingExample>>> slots_;
};

struct TrainState {
  GameId game = GameId::connect_four;
  Model params;
  ReplayBuffer buffer{20};
  SwitchState sw;
  int completed_iterations = 0;
  std::vector<IterationLog> logs;
};

TrainState make_train_state(GameId game, const LoopConfig& cfg);

// One full iteration: episode generation (per mode), buffer push, training,
// model gating. Atomic: the state is modified only on success.
void run_iteration(TrainState& state, const LoopConfig& cfg);

// Length-prefixed binary record files for TrainingExample batches.
void write_examples(const std::string& path, int action_size,
                    const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> read_examples(const std::string& path);

}  // namespace warmstart
