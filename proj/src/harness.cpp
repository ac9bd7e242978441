#include "warmstart/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace warmstart {

const char* kVersion = "0.1.0";

namespace {

std::string now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json config_json(const RunConfig& c) {
  return json{{"I", c.I},
              {"rs", c.rs},
              {"ep", c.ep},
              {"E", c.E},
              {"bs", c.bs},
              {"Tprime", c.Tprime},
              {"lr", c.lr},
              {"m", c.m},
              {"d", c.d},
              {"c", c.c},
              {"n", c.n},
              {"u", c.u},
              {"game", c.game},
              {"kind", c.kind},
              {"mode", c.mode},
              {"Iprime", c.Iprime},
              {"weight_policy", c.weight_policy},
              {"seed", c.seed},
              {"repetitions", c.repetitions},
              {"games_per_pair", c.games_per_pair},
              {"gobang_target", c.gobang_target},
              {"workers", c.workers},
              {"equivalence", c.equivalence},
              {"use_adam", c.use_adam},
              {"reuse_tree", c.reuse_tree}};
}

void config_from_json(RunConfig& c, const json& j) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "I") c.I = value.get<int>();
      else if (key == "rs") c.rs = value.get<int>();
      else if (key == "ep") c.ep = value.get<int>();
      else if (key == "E") c.E = value.get<int>();
      else if (key == "bs") c.bs = value.get<int>();
      else if (key == "Tprime") c.Tprime = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "m") c.m = value.get<int>();
      else if (key == "d") c.d = value.get<double>();
      else if (key == "c") c.c = value.get<double>();
      else if (key == "n") c.n = value.get<int>();
      else if (key == "u") c.u = value.get<double>();
      else if (key == "game") c.game = value.get<std::string>();
      else if (key == "kind") c.kind = value.get<std::string>();
      else if (key == "mode") c.mode = value.get<std::string>();
      else if (key == "Iprime") c.Iprime = value.get<int>();
      else if (key == "weight_policy") c.weight_policy = value.get<std::string>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "repetitions") c.repetitions = value.get<int>();
      else if (key == "games_per_pair") c.games_per_pair = value.get<int>();
      else if (key == "gobang_target") c.gobang_target = value.get<int>();
      else if (key == "workers") c.workers = value.get<int>();
      else if (key == "equivalence") c.equivalence = value.get<double>();
      else if (key == "use_adam") c.use_adam = value.get<bool>();
      else if (key == "reuse_tree") c.reuse_tree = value.get<bool>();
      else throw ConfigError("unknown config key: " + key);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }
}

double blend_weight_for(const RunConfig& cfg) {
  return cfg.weight_policy == "half" ? 0.5 : 1.0;
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.I < 1) fail("I: must be >= 1");
  if (cfg.rs < 1) fail("rs: must be >= 1");
  if (cfg.ep < 1) fail("ep: must be >= 1");
  if (cfg.E < 2 || cfg.E % 2 != 0) fail("E: must be even and >= 2");
  if (cfg.bs < 1) fail("bs: must be >= 1");
  if (cfg.Tprime < 0) fail("Tprime: must be >= 0");
  if (cfg.lr <= 0) fail("lr: must be > 0");
  if (cfg.m < 1) fail("m: must be >= 1");
  if (cfg.d < 0 || cfg.d >= 1) fail("d: must be in [0,1)");
  if (cfg.c <= 0) fail("c: must be > 0");
  if (cfg.n < 2 || cfg.n % 2 != 0) fail("n: must be even and >= 2");
  if (cfg.u <= 0.5 || cfg.u > 1) fail("u: must be in (0.5,1]");
  if (!parse_game(cfg.game)) fail("game: must be connect_four, othello or gobang");
  if (!parse_kind(cfg.kind)) fail("kind: unknown enhancement kind");
  if (!parse_mode(cfg.mode)) fail("mode: must be fixed, adaptive or baseline");
  if (cfg.mode == "fixed" && cfg.Iprime >= cfg.I) fail("Iprime: must be < I");
  if (cfg.Iprime < 0) fail("Iprime: must be >= 0");
  if (cfg.weight_policy != "half" && cfg.weight_policy != "one_over_i")
    fail("weight_policy: must be half or one_over_i");
  if (cfg.repetitions < 1) fail("repetitions: must be >= 1");
  if (cfg.games_per_pair < 2 || cfg.games_per_pair % 2 != 0)
    fail("games_per_pair: must be even and >= 2");
  if (cfg.gobang_target < 4 || cfg.gobang_target > 6)
    fail("gobang_target: must be 4, 5 or 6");
  if (cfg.workers < 1) fail("workers: must be >= 1");
  if (cfg.equivalence != -1 && cfg.equivalence <= 0)
    fail("equivalence: must be > 0 (or -1 for 'use m')");
}

RunConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  config_from_json(cfg, j);
  return cfg;
}

void apply_json_overrides(RunConfig& cfg, const std::string& json_text) {
  config_from_json(cfg, json::parse(json_text));
}

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset == "table2") {
    cfg.Tprime = 0;
    cfg.weight_policy = "half";
    cfg.repetitions = 100;
  } else if (preset == "fig1") {
    cfg.mode = "fixed";
    cfg.I = 100;
    cfg.weight_policy = "one_over_i";
  } else if (preset == "fig3") {
    cfg.mode = "adaptive";
    cfg.I = 100;
    cfg.games_per_pair = 20;
    cfg.weight_policy = "one_over_i";
  } else if (!preset.empty()) {
    throw ConfigError("unknown preset: " + preset);
  }
}

GameId config_game(const RunConfig& cfg) { return *parse_game(cfg.game); }
EnhancementKind config_kind(const RunConfig& cfg) { return *parse_kind(cfg.kind); }

LoopConfig to_loop_config(const RunConfig& cfg) {
  LoopConfig lc;
  lc.iterations = cfg.I;
  lc.warmstart_length = cfg.Iprime;
  lc.episodes = cfg.E;
  lc.explore_steps = cfg.Tprime;
  lc.gate_games = cfg.n;
  lc.gate_threshold = cfg.u;
  lc.buffer_iterations = cfg.rs;
  lc.kind = config_kind(cfg);
  lc.mode = *parse_mode(cfg.mode);
  lc.weight_policy =
      cfg.weight_policy == "half" ? WeightPolicy::half : WeightPolicy::one_over_i;
  lc.gobang_target = cfg.gobang_target;
  lc.search.simulations = cfg.m;
  lc.search.c_uct = cfg.c;
  lc.search.equivalence = cfg.equivalence > 0 ? cfg.equivalence : cfg.m;
  lc.search.reuse_tree = cfg.reuse_tree;
  lc.train_cfg.epochs = cfg.ep;
  lc.train_cfg.batch_size = cfg.bs;
  lc.train_cfg.learning_rate = static_cast<float>(cfg.lr);
  lc.train_cfg.dropout = static_cast<float>(cfg.d);
  lc.train_cfg.use_adam = cfg.use_adam;
  lc.master_seed = cfg.seed;
  lc.workers = cfg.workers;
  return lc;
}

namespace {

void write_switch_json(const std::string& path, const SwitchState& sw) {
  json j;
  j["switched"] = sw.switched;
  j["r_mcts"] = sw.r_mcts;
  if (sw.switch_iteration) j["switch_iteration"] = *sw.switch_iteration;
  else j["switch_iteration"] = nullptr;
  std::ofstream out(path);
  out << j.dump(2);
}

SwitchState read_switch_json(const std::string& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  SwitchState sw;
  sw.switched = j.at("switched").get<bool>();
  sw.r_mcts = j.at("r_mcts").get<int>();
  if (!j.at("switch_iteration").is_null())
    sw.switch_iteration = j.at("switch_iteration").get<int>();
  return sw;
}

void append_iteration_csv(const std::string& path, const IterationLog& log) {
  bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (fresh) out << "iteration,examples,r_mcts,gate_winrate,accepted,switched\n";
  out << log.iteration << ',' << log.examples << ',' << log.r_mcts << ','
      << log.gate_winrate << ',' << (log.accepted ? 1 : 0) << ','
      << (log.switched ? 1 : 0) << '\n';
}

std::string checkpoint_path(const std::string& out_dir, int k) {
  return out_dir + "/checkpoints/iter_" + std::to_string(k) + ".json";
}

}  // namespace

void cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  GameId game = config_game(cfg);
  LoopConfig lc = to_loop_config(cfg);

  fs::create_directories(out_dir + "/checkpoints");
  fs::create_directories(out_dir + "/log");
  fs::create_directories(out_dir + "/buffer");

  const std::string manifest_path = out_dir + "/manifest.json";
  TrainState state = make_train_state(game, lc);
  int start_iter = 0;

  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    json manifest;
    in >> manifest;
    if (manifest.at("config").dump() != config_json(cfg).dump())
      throw ConfigError("out dir holds a run with a different config: " + out_dir);
    int k = manifest.value("iterations_completed", 0);
    if (k > 0) {
      Checkpoint ckpt = load_checkpoint(checkpoint_path(out_dir, k));
      state.params = std::move(ckpt.model);
      state.sw = read_switch_json(out_dir + "/log/switch.json");
      for (int j = std::max(1, k - cfg.rs + 1); j <= k; ++j)
        state.buffer.push_iteration(
            j, read_examples(out_dir + "/buffer/iter_" + std::to_string(j) +
                             ".examples"));
      state.completed_iterations = k;
    }
    start_iter = k;
  } else {
    json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = config_json(cfg);
    manifest["started_at"] = now_iso();
    manifest["iterations_completed"] = 0;
    std::ofstream out(manifest_path);
    out << manifest.dump(2);
    save_checkpoint({game, 0, state.params}, checkpoint_path(out_dir, 0));
  }

  for (int k = start_iter + 1; k <= cfg.I; ++k) {
    run_iteration(state, lc);
    save_checkpoint({game, k, state.params}, checkpoint_path(out_dir, k));
    write_examples(out_dir + "/buffer/iter_" + std::to_string(k) + ".examples",
                   action_space(game), state.buffer.slots().back().second);
    append_iteration_csv(out_dir + "/log/iterations.csv", state.logs.back());
    write_switch_json(out_dir + "/log/switch.json", state.sw);

    std::ifstream in(manifest_path);
    json manifest;
    in >> manifest;
    in.close();
    manifest["iterations_completed"] = k;
    if (k == cfg.I) manifest["finished_at"] = now_iso();
    std::ofstream out(manifest_path);
    out << manifest.dump(2);
  }
}

void cmd_compare(const RunConfig& cfg, const std::vector<std::string>& kind_names,
                 const std::string& out_dir) {
  validate_config(cfg);
  GameId game = config_game(cfg);
  fs::create_directories(out_dir);

  std::vector<EnhancementKind> kinds;
  for (const auto& name : kind_names) {
    auto k = parse_kind(name);
    if (!k) throw ConfigError("kind: unknown enhancement kind '" + name + "'");
    kinds.push_back(*k);
  }
  if (kinds.size() < 2) throw ConfigError("compare needs at least two kinds");

  // Untrained network, freshly drawn for each game; the enhancements differ
  // only in search.
  std::vector<AgentSpec> agents;
  for (EnhancementKind k : kinds) {
    AgentSpec a;
    a.id = kind_name(k);
    a.kind = k;
    a.fresh_net_per_game = true;
    a.search.simulations = cfg.m;
    a.search.c_uct = cfg.c;
    a.search.equivalence = cfg.equivalence > 0 ? cfg.equivalence : cfg.m;
    a.search.weight = 0.5;   // the published matrix uses weight 1/2
    a.explore_steps = 0;     // and pure argmax play
    agents.push_back(std::move(a));
  }

  auto results = round_robin(game, agents, cfg.repetitions, cfg.seed, cfg.workers,
                             cfg.gobang_target);
  write_results_csv(out_dir + "/results.csv", results);
  for (const auto& r : results)
    std::cout << r.player_a << " vs " << r.player_b << ": " << r.wins_a << "-"
              << r.wins_b << "-" << r.draws << "\n";
}

namespace {

// Reads kind/mode/Iprime from the run manifest a checkpoint belongs to.
struct RunMeta {
  std::string kind = "unknown", mode = "unknown";
  int iprime = -1;
};

RunMeta meta_for_checkpoint(const std::string& ckpt_path) {
  RunMeta meta;
  fs::path p = fs::path(ckpt_path).parent_path().parent_path() / "manifest.json";
  if (!fs::exists(p)) return meta;
  std::ifstream in(p);
  json manifest;
  in >> manifest;
  const json& c = manifest.at("config");
  meta.kind = c.value("kind", "unknown");
  meta.mode = c.value("mode", "unknown");
  meta.iprime = c.value("Iprime", -1);
  return meta;
}

}  // namespace

void cmd_tournament(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                    const std::string& out_dir) {
  validate_config(cfg);
  if (checkpoints.size() < 2)
    throw ConfigError("tournament needs at least two checkpoints");
  fs::create_directories(out_dir);

  GameId game = config_game(cfg);
  std::vector<AgentSpec> agents;
  for (const auto& path : checkpoints) {
    Checkpoint ckpt;
    try {
      ckpt = load_checkpoint(path);
    } catch (const std::exception& e) {
      throw std::runtime_error("checkpoint '" + path + "': " + e.what());
    }
    if (ckpt.game != game)
      throw std::runtime_error("checkpoint '" + path + "' is for " +
                               game_name(ckpt.game) + ", not " + cfg.game);
    AgentSpec a;
    a.id = path;
    a.kind = EnhancementKind::baseline;
    a.model = std::make_shared<const Model>(std::move(ckpt.model));
    a.search.simulations = cfg.m;
    a.search.c_uct = cfg.c;
    a.explore_steps = 0;
    agents.push_back(std::move(a));
  }

  auto results = round_robin(game, agents, cfg.games_per_pair, cfg.seed,
                             cfg.workers, cfg.gobang_target);
  EloTable elo = fit_elo(results);
  write_results_csv(out_dir + "/results.csv", results);
  write_elo_csv(out_dir + "/elo.csv", elo);

  std::ofstream adaptive_fixed(out_dir + "/fig_adaptive_vs_fixed.csv");
  adaptive_fixed << "kind,mode,elo\n";
  std::ofstream fixed_iprime(out_dir + "/fig_fixed_iprime.csv");
  fixed_iprime << "kind,iprime,elo\n";
  for (const auto& r : elo.ratings) {
    RunMeta meta = meta_for_checkpoint(r.id);
    adaptive_fixed << meta.kind << ',' << meta.mode << ',' << r.rating << '\n';
    if (meta.mode == "fixed")
      fixed_iprime << meta.kind << ',' << meta.iprime << ',' << r.rating << '\n';
  }
}

void cmd_play(const RunConfig& cfg, const std::string& checkpoint_path,
              std::istream& in, std::ostream& out) {
  validate_config(cfg);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  GameId game = ckpt.game;
  auto model = std::make_shared<const Model>(std::move(ckpt.model));
  NetworkEvaluator eval(model);
  SearchConfig sc;
  sc.simulations = cfg.m;
  sc.c_uct = cfg.c;
  sc.kind = EnhancementKind::baseline;
  SearchTree tree(game, sc);
  Rng rng(cfg.seed);

  GameState s = initial_state(game, cfg.gobang_target);
  out << "You are X; enter a move as an action id";
  if (game == GameId::connect_four) out << " (column 0-5)";
  else out << " (cell 0-35" << (game == GameId::othello ? ", or 'pass'" : "") << ")";
  out << ".\n";

  while (!is_terminal(s)) {
    out << to_diagram(s);
    if (s.to_move == 1) {
      out << "your move> " << std::flush;
      std::string token;
      if (!(in >> token)) return;
      Move mv{-1};
      if (token == "pass") mv.index = kOthelloPass;
      else {
        try {
          mv.index = std::stoi(token);
        } catch (...) {
          out << "not a move: " << token << "\n";
          continue;
        }
      }
      auto legal = legal_moves(s);
      if (std::find(legal.begin(), legal.end(), mv) == legal.end()) {
        out << "illegal move: " << token << "\n";
        continue;
      }
      s = apply_move(s, mv);
    } else {
      PolicyVector pi = tree.search(s, eval);
      Move mv = select_action(pi, 1, 0, rng);
      out << "engine plays " << mv.index << "\n";
      s = apply_move(s, mv);
    }
  }
  out << to_diagram(s);
  int v = *terminal_value(s);
  out << (v > 0 ? "X wins\n" : v < 0 ? "O wins\n" : "draw\n");
}

void cmd_export(const std::vector<std::string>& run_dirs, const std::string& elo_csv,
                const std::string& out_dir) {
  if (run_dirs.empty()) throw ConfigError("export needs at least one run dir");
  fs::create_directories(out_dir);

  std::ofstream balance(out_dir + "/fig_reward_balance.csv");
  balance << "run,iteration,r_mcts\n";
  for (const auto& dir : run_dirs) {
    std::ifstream in(dir + "/log/iterations.csv");
    if (!in) throw std::runtime_error("no iterations.csv under " + dir);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string iter, examples, r_mcts;
      std::getline(row, iter, ',');
      std::getline(row, examples, ',');
      std::getline(row, r_mcts, ',');
      balance << dir << ',' << iter << ',' << r_mcts << '\n';
    }
  }

  if (!elo_csv.empty()) {
    std::ifstream in(elo_csv);
    if (!in) throw std::runtime_error("cannot read elo csv: " + elo_csv);
    std::ofstream adaptive_fixed(out_dir + "/fig_adaptive_vs_fixed.csv");
    adaptive_fixed << "kind,mode,elo\n";
    std::ofstream fixed_iprime(out_dir + "/fig_fixed_iprime.csv");
    fixed_iprime << "kind,iprime,elo\n";
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string player, rating, games;
      std::getline(row, player, ',');
      std::getline(row, rating, ',');
      RunMeta meta = meta_for_checkpoint(player);
      adaptive_fixed << meta.kind << ',' << meta.mode << ',' << rating << '\n';
      if (meta.mode == "fixed")
        fixed_iprime << meta.kind << ',' << meta.iprime << ',' << rating << '\n';
    }
  }
}

}  // namespace warmstart
