#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "warmstart/harness.hpp"

using namespace warmstart;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_data_rows(const std::string& csv_path) {
  std::ifstream in(csv_path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  return rows;
}

// Fresh scratch directory under /tmp.
std::string scratch(const std::string& name) {
  std::string dir = "/tmp/wz_harness_" + name;
  fs::remove_all(dir);
  return dir;
}

// Small-but-complete training configuration.
RunConfig tiny_train_config() {
  RunConfig cfg;
  cfg.I = 2;
  cfg.E = 2;
  cfg.m = 4;
  cfg.n = 2;
  cfg.ep = 1;
  cfg.Tprime = 4;
  cfg.seed = 5;
  cfg.mode = "adaptive";
  cfg.kind = "rollout";
  return cfg;
}

void expect_config_error(const RunConfig& cfg, const std::string& field) {
  try {
    validate_config(cfg);
    FAIL_CHECK("expected ConfigError for field ", field);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(field) == 0);
  }
}

int run_cli(const std::string& args) {
  int status = std::system((std::string(WZ_BINARY_PATH) + " " + args +
                            " >/dev/null 2>&1")
                               .c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("defaults are the published parameter table") {
  RunConfig cfg;
  CHECK(cfg.I == 100);
  CHECK(cfg.rs == 20);
  CHECK(cfg.ep == 10);
  CHECK(cfg.E == 50);
  CHECK(cfg.bs == 64);
  CHECK(cfg.Tprime == 15);
  CHECK(cfg.lr == 0.005);
  CHECK(cfg.m == 100);
  CHECK(cfg.d == 0.3);
  CHECK(cfg.c == 1.0);
  CHECK(cfg.n == 40);
  CHECK(cfg.u == 0.6);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validation names the offending field") {
  RunConfig cfg;
  cfg.I = 0;
  expect_config_error(cfg, "I");
  cfg = RunConfig{};
  cfg.E = 7;  // odd
  expect_config_error(cfg, "E");
  cfg = RunConfig{};
  cfg.u = 0.5;  // boundary is invalid
  expect_config_error(cfg, "u");
  cfg = RunConfig{};
  cfg.d = 1.0;
  expect_config_error(cfg, "d");
  cfg = RunConfig{};
  cfg.game = "chess";
  expect_config_error(cfg, "game");
  cfg = RunConfig{};
  cfg.kind = "magic";
  expect_config_error(cfg, "kind");
  cfg = RunConfig{};
  cfg.mode = "fixed";
  cfg.Iprime = 100;  // must be < I
  expect_config_error(cfg, "Iprime");
  cfg = RunConfig{};
  cfg.repetitions = 0;
  expect_config_error(cfg, "repetitions");
  cfg = RunConfig{};
  cfg.equivalence = 0.0;
  expect_config_error(cfg, "equivalence");
}

TEST_CASE("json config round trip and strict keys") {
  RunConfig cfg = tiny_train_config();
  cfg.lr = 0.001;
  cfg.weight_policy = "half";
  std::string path = "/tmp/wz_harness_cfg.json";
  {
    std::ofstream out(path);
    out << config_to_json(cfg);
  }
  RunConfig back = config_from_json_file(path);
  CHECK(config_to_json(back) == config_to_json(cfg));
  fs::remove(path);

  RunConfig base;
  CHECK_THROWS_AS(apply_json_overrides(base, R"({"bogus_key": 1})"), ConfigError);
  CHECK_THROWS_AS(apply_json_overrides(base, R"({"I": "not a number"})"), ConfigError);
  apply_json_overrides(base, R"({"m": 25, "game": "othello"})");
  CHECK(base.m == 25);
  CHECK(base.game == "othello");
}

TEST_CASE("experiment presets") {
  RunConfig cfg;
  apply_preset(cfg, "table2");
  CHECK(cfg.Tprime == 0);
  CHECK(cfg.weight_policy == "half");
  CHECK(cfg.repetitions == 100);

  cfg = RunConfig{};
  apply_preset(cfg, "fig1");
  CHECK(cfg.mode == "fixed");

  cfg = RunConfig{};
  apply_preset(cfg, "fig3");
  CHECK(cfg.mode == "adaptive");
  CHECK(cfg.games_per_pair == 20);

  CHECK_THROWS_AS(apply_preset(cfg, "fig9"), ConfigError);
}

TEST_CASE("loop config mapping") {
  RunConfig cfg;
  cfg.equivalence = -1;
  cfg.m = 64;
  cfg.mode = "fixed";
  cfg.Iprime = 5;
  LoopConfig lc = to_loop_config(cfg);
  CHECK(lc.search.equivalence == 64);  // -1 means "use m"
  CHECK(lc.search.simulations == 64);
  CHECK(lc.warmstart_length == 5);
  CHECK(lc.mode == LoopMode::fixed);
  CHECK(lc.train_cfg.batch_size == cfg.bs);
  cfg.equivalence = 7.5;
  CHECK(to_loop_config(cfg).search.equivalence == 7.5);
}

TEST_CASE("train run writes the full artifact layout") {
  RunConfig cfg = tiny_train_config();
  std::string dir = scratch("train");
  cmd_train(cfg, dir);

  CHECK(fs::exists(dir + "/manifest.json"));
  for (int k = 0; k <= cfg.I; ++k)
    CHECK(fs::exists(dir + "/checkpoints/iter_" + std::to_string(k) + ".json"));
  CHECK(count_data_rows(dir + "/log/iterations.csv") == cfg.I);
  CHECK(fs::exists(dir + "/log/switch.json"));
  for (int k = 1; k <= cfg.I; ++k)
    CHECK(fs::exists(dir + "/buffer/iter_" + std::to_string(k) + ".examples"));

  std::string manifest = read_file(dir + "/manifest.json");
  CHECK(manifest.find("\"iterations_completed\": 2") != std::string::npos);
  CHECK(manifest.find("finished_at") != std::string::npos);

  // A different config may not reuse the directory.
  RunConfig other = cfg;
  other.seed = 6;
  CHECK_THROWS_AS(cmd_train(other, dir), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("resume at an iteration boundary reproduces the run") {
  RunConfig cfg = tiny_train_config();
  std::string dir_a = scratch("resume_a");
  std::string dir_b = scratch("resume_b");
  cmd_train(cfg, dir_a);
  cmd_train(cfg, dir_b);

  // Rewind run B to the end of iteration 1, as if it had been interrupted.
  {
    std::ifstream in(dir_b + "/manifest.json");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string manifest = ss.str();
    auto pos = manifest.find("\"iterations_completed\": 2");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 25, "\"iterations_completed\": 1");
    std::ofstream out(dir_b + "/manifest.json");
    out << manifest;
  }
  fs::remove(dir_b + "/checkpoints/iter_2.json");
  // Rebuild switch.json as of iteration 1 from run A's structure is not
  // possible; instead remove the stale row so the redo appends cleanly.
  {
    std::ifstream in(dir_b + "/log/iterations.csv");
    std::string content, line, kept;
    std::getline(in, line);
    kept = line + "\n";
    while (std::getline(in, line))
      if (!line.empty() && line[0] == '1') kept += line + "\n";
    in.close();
    std::ofstream out(dir_b + "/log/iterations.csv");
    out << kept;
  }
  // switch.json currently reflects iteration 2; a boundary interrupt would
  // hold iteration 1's value. Rerun iteration 1's state by redoing from the
  // kept checkpoint: for this config the switch state after iteration 1 is
  // what iterations.csv row 1 says.
  {
    std::string row1;
    std::ifstream in(dir_b + "/log/iterations.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, row1);
    bool switched = !row1.empty() && row1.back() == '1';
    std::istringstream fields(row1);
    std::string r_mcts;
    std::getline(fields, r_mcts, ',');  // iteration
    std::getline(fields, r_mcts, ',');  // examples
    std::getline(fields, r_mcts, ',');  // r_mcts
    std::ofstream out(dir_b + "/log/switch.json");
    out << "{\n  \"r_mcts\": " << r_mcts
        << ",\n  \"switch_iteration\": " << (switched ? "1" : "null")
        << ",\n  \"switched\": " << (switched ? "true" : "false") << "\n}";
  }

  cmd_train(cfg, dir_b);  // resume: redo iteration 2 only

  CHECK(read_file(dir_a + "/checkpoints/iter_2.json") ==
        read_file(dir_b + "/checkpoints/iter_2.json"));
  CHECK(read_file(dir_a + "/log/iterations.csv") ==
        read_file(dir_b + "/log/iterations.csv"));
  CHECK(read_file(dir_a + "/log/switch.json") ==
        read_file(dir_b + "/log/switch.json"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("compare writes one row per pair") {
  RunConfig cfg;
  cfg.m = 4;
  cfg.repetitions = 2;
  cfg.seed = 9;
  std::string dir = scratch("compare");
  cmd_compare(cfg, {"baseline", "rollout", "rave"}, dir);
  CHECK(count_data_rows(dir + "/results.csv") == 3);

  CHECK_THROWS_AS(cmd_compare(cfg, {"baseline"}, dir), ConfigError);
  CHECK_THROWS_AS(cmd_compare(cfg, {"baseline", "sorcery"}, dir), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("tournament over trained checkpoints") {
  RunConfig train_cfg = tiny_train_config();
  std::string run_dir = scratch("tourney_run");
  cmd_train(train_cfg, run_dir);

  RunConfig cfg;
  cfg.m = 4;
  cfg.games_per_pair = 2;
  cfg.seed = 2;
  std::string out = scratch("tourney_out");
  std::vector<std::string> ckpts = {run_dir + "/checkpoints/iter_0.json",
                                    run_dir + "/checkpoints/iter_2.json"};
  cmd_tournament(cfg, ckpts, out);
  CHECK(count_data_rows(out + "/results.csv") == 1);
  CHECK(count_data_rows(out + "/elo.csv") == 2);
  CHECK(count_data_rows(out + "/fig_adaptive_vs_fixed.csv") == 2);
  // Mode metadata comes from the run manifest next to the checkpoints.
  std::string fig = read_file(out + "/fig_adaptive_vs_fixed.csv");
  CHECK(fig.find("rollout,adaptive,") != std::string::npos);

  CHECK_THROWS_WITH_AS(cmd_tournament(cfg, {ckpts[0]}, out),
                       "tournament needs at least two checkpoints", ConfigError);
  try {
    cmd_tournament(cfg, {ckpts[0], "/tmp/wz_no_such_ckpt.json"}, out);
    FAIL("expected a named checkpoint error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/tmp/wz_no_such_ckpt.json") !=
          std::string::npos);
  }
  fs::remove_all(out);

  // Export: reward-balance rows for the finished run.
  std::string exp = scratch("export");
  cmd_export({run_dir}, "", exp);
  CHECK(count_data_rows(exp + "/fig_reward_balance.csv") == train_cfg.I);
  CHECK_THROWS_AS(cmd_export({"/tmp/wz_not_a_run"}, "", exp), std::runtime_error);
  fs::remove_all(exp);
  fs::remove_all(run_dir);
}

TEST_CASE("play mode reprompts on illegal input") {
  // Make a checkpoint to play against.
  RunConfig train_cfg = tiny_train_config();
  train_cfg.I = 1;
  std::string run_dir = scratch("play_run");
  cmd_train(train_cfg, run_dir);

  RunConfig cfg;
  cfg.m = 4;
  std::istringstream in("9\nfrog\n3\n");
  std::ostringstream out;
  cmd_play(cfg, run_dir + "/checkpoints/iter_1.json", in, out);
  std::string text = out.str();
  CHECK(text.find("illegal move: 9") != std::string::npos);
  CHECK(text.find("not a move: frog") != std::string::npos);
  CHECK(text.find("engine plays") != std::string::npos);
  fs::remove_all(run_dir);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("train --game connect_four --iters 0 --out /tmp/wz_cli_x") == 2);
  CHECK(run_cli("train --kind sorcery --out /tmp/wz_cli_x") == 2);
  CHECK(run_cli("tournament --out /tmp/wz_cli_x") == 2);  // needs checkpoints
  fs::remove_all("/tmp/wz_cli_x");
}
