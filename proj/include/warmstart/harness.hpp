#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "warmstart/evaluation.hpp"
#include "warmstart/selfplay.hpp"

namespace warmstart {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat run configuration; defaults are the published parameter table.
// JSON config files and CLI flags both map onto these fields.
struct RunConfig {
  int I = 100;          // iterations
  int rs = 20;          // replay buffer length, in iterations
  int ep = 10;          // training epochs
  int E = 50;           // episodes per iteration
  int bs = 64;          // batch size
  int Tprime = 15;      // exploration step threshold
  double lr = 0.005;    // learning rate
  int m = 100;          // MCTS simulations per move
  double d = 0.3;       // dropout
  double c = 1.0;       // UCT exploration constant
  int n = 40;           // gating games
  double u = 0.6;       // update threshold

  std::string game = "connect_four";
  std::string kind = "wrora";
  std::string mode = "adaptive";
  int Iprime = 5;
  std::string weight_policy = "one_over_i";  // or "half"
  uint64_t seed = 0;
  int repetitions = 100;
  int games_per_pair = 20;
  int gobang_target = 5;
  int workers = 1;
  double equivalence = -1;  // -1: use m
  bool use_adam = false;
  bool reuse_tree = true;
};

// Throws ConfigError on invalid values (field-named message).
void validate_config(const RunConfig& cfg);

RunConfig config_from_json_file(const std::string& path);
void apply_json_overrides(RunConfig& cfg, const std::string& json_text);
std::string config_to_json(const RunConfig& cfg);

// Preset overlays for the three published experiments.
void apply_preset(RunConfig& cfg, const std::string& preset);

GameId config_game(const RunConfig& cfg);
EnhancementKind config_kind(const RunConfig& cfg);
LoopConfig to_loop_config(const RunConfig& cfg);

extern const char* kVersion;

// Training run with persistence under out_dir: manifest.json,
// checkpoints/iter_<k>.json, log/iterations.csv, log/switch.json,
// buffer/iter_<k>.examples. Resumes from the last checkpoint when the
// directory already holds a matching run.
void cmd_train(const RunConfig& cfg, const std::string& out_dir);

// Untrained-network winrate matrix over enhancement kinds (weight 1/2,
// pure argmax play). Writes results.csv under out_dir.
void cmd_compare(const RunConfig& cfg, const std::vector<std::string>& kinds,
                 const std::string& out_dir);

// Round-robin over trained checkpoints + Elo fit. Writes results.csv,
// elo.csv and the plot-data CSVs under out_dir.
void cmd_tournament(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                    const std::string& out_dir);

// Interactive terminal game against a checkpoint.
void cmd_play(const RunConfig& cfg, const std::string& checkpoint_path,
              std::istream& in, std::ostream& out);

// Plot-data export from finished run directories.
void cmd_export(const std::vector<std::string>& run_dirs, const std::string& elo_csv,
                const std::string& out_dir);

}  // namespace warmstart
