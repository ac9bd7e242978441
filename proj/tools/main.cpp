#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "warmstart/harness.hpp"

using namespace warmstart;

namespace {

// Flag string -> JSON override, so CLI flags share the config code path.
struct FlagBag {
  std::vector<std::pair<std::string, std::string>> raw;  // key, json value

  void add_cli(CLI::App* app, const std::string& flag, const std::string& key,
               bool is_string, const std::string& help) {
    auto cb = [this, key, is_string](const std::string& v) {
      raw.emplace_back(key, is_string ? "\"" + v + "\"" : v);
    };
    app->add_option_function<std::string>(flag, cb, help);
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [key, value] : raw)
      apply_json_overrides(cfg, "{\"" + key + "\":" + value + "}");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AlphaZero-like self-play with warm-start MCTS enhancements"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", preset;
  app.add_option("--config", config_path, "JSON config file")->expected(1);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--preset", preset, "experiment preset: table2 | fig1 | fig3");

  FlagBag flags;
  auto add_common = [&](CLI::App* sub) {
    flags.add_cli(sub, "--game", "game", true, "connect_four | othello | gobang");
    flags.add_cli(sub, "--kind", "kind", true,
                  "baseline | rollout | rave | rora | wro | wrora");
    flags.add_cli(sub, "--mode", "mode", true, "fixed | adaptive | baseline");
    flags.add_cli(sub, "--seed", "seed", false, "master seed");
    flags.add_cli(sub, "--workers", "workers", false, "worker threads");
    flags.add_cli(sub, "--iters", "I", false, "training iterations (I)");
    flags.add_cli(sub, "--iprime", "Iprime", false, "fixed warm-start length (I')");
    flags.add_cli(sub, "--episodes", "E", false, "episodes per iteration (E)");
    flags.add_cli(sub, "--sims", "m", false, "MCTS simulations per move (m)");
    flags.add_cli(sub, "--gate-games", "n", false, "gating games (n)");
    flags.add_cli(sub, "--weight-policy", "weight_policy", true, "half | one_over_i");
    flags.add_cli(sub, "--repetitions", "repetitions", false,
                  "games per pair (compare)");
    flags.add_cli(sub, "--games-per-pair", "games_per_pair", false,
                  "games per pair (tournament)");
    flags.add_cli(sub, "--gobang-target", "gobang_target", false,
                  "gobang win length (default 5)");
  };

  auto* train = app.add_subcommand("train", "run the self-play training loop");
  train->fallthrough();
  add_common(train);

  auto* compare = app.add_subcommand(
      "compare", "untrained-network winrate matrix between enhancement kinds");
  compare->fallthrough();
  std::vector<std::string> kinds = {"baseline", "rollout", "rave",
                                    "rora",     "wro",     "wrora"};
  compare->add_option("--kinds", kinds, "kinds to compare");
  add_common(compare);

  auto* tournament =
      app.add_subcommand("tournament", "round-robin + Elo over trained checkpoints");
  tournament->fallthrough();
  std::vector<std::string> checkpoints;
  tournament->add_option("checkpoints", checkpoints, "checkpoint files");
  add_common(tournament);

  auto* play = app.add_subcommand("play", "play against a checkpoint in the terminal");
  play->fallthrough();
  std::string play_checkpoint;
  play->add_option("checkpoint", play_checkpoint, "checkpoint file");
  add_common(play);

  auto* export_cmd = app.add_subcommand("export", "plot-data CSVs from run dirs");
  export_cmd->fallthrough();
  std::vector<std::string> run_dirs;
  std::string elo_csv;
  export_cmd->add_option("runs", run_dirs, "run directories");
  export_cmd->add_option("--elo", elo_csv, "elo.csv from a tournament");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad command line is a config error
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = config_from_json_file(config_path);
    apply_preset(cfg, preset);
    flags.apply(cfg);

    if (train->parsed()) cmd_train(cfg, out_dir);
    else if (compare->parsed()) cmd_compare(cfg, kinds, out_dir);
    else if (tournament->parsed()) cmd_tournament(cfg, checkpoints, out_dir);
    else if (play->parsed()) {
      if (play_checkpoint.empty()) throw ConfigError("play needs a checkpoint");
      cmd_play(cfg, play_checkpoint, std::cin, std::cout);
    }
    else if (export_cmd->parsed()) cmd_export(run_dirs, elo_csv, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
