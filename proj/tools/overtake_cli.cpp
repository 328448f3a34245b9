// Command-line front end: scenario generation, training, evaluation,
// decision maps and trace export.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "overtake/bench.hpp"
#include "overtake/config.hpp"
#include "overtake/trainer.hpp"

namespace fs = std::filesystem;
using namespace overtake;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.output_dir);
  std::ostringstream ss;
  write_config(ss, cfg);
  write_text(fs::path(cfg.output_dir) / (command + ".config"), ss.str());
}

std::vector<ScenarioSpec> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open scenario file " + path);
  return read_scenarios(in);
}

QNet load_model_for(const std::string& path, const RunConfig& cfg) {
  if (path.empty()) throw UsageError("a --model file is required for the dqn policy");
  QNet net = load_qnet(path);
  const int expected = cfg.episode.observation.dimension();
  if (net.input_size() != expected || net.output_size() != kNumActions)
    throw UsageError("model " + path + " has input dimension " +
                     std::to_string(net.input_size()) + " and output dimension " +
                     std::to_string(net.output_size()) + ", but the observation dimension is " +
                     std::to_string(expected) + " with " + std::to_string(kNumActions) +
                     " actions");
  return net;
}

std::string episodes_csv(const std::vector<EpisodeResult>& results) {
  std::ostringstream out;
  out << "scenario_id,outcome,crash_npc_id,end_time_s,completion_time_s,discounted_return\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.6f,%s,%.6f\n", r.scenario_id,
                  outcome_name(r.outcome).c_str(), r.crash_npc_id, r.end_time,
                  r.completion_time ? std::to_string(*r.completion_time).c_str() : "",
                  r.discounted_return);
    out << buf;
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-lane abortable overtaking: DQN decision making and rule-based baseline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "Configuration file (key = value)");
  app.add_option("--set", g.overrides, "Override a configuration key, key=value (repeatable)");
  app.add_option("-o,--out-dir", g.out_dir, "Output directory (default: run.output_dir)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate random scenarios");
  std::size_t gen_n = 1000;
  std::string gen_out, gen_check;
  std::int64_t gen_seed = -1;
  gen->add_option("--n", gen_n, "Number of scenarios")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed (default: run.seed)");
  gen->add_option("--out", gen_out, "Scenario file (default: <out-dir>/scenarios.jsonl)");
  gen->add_option("--check", gen_check, "Validate an existing scenario file against the ranges");

  // train
  auto* tr = app.add_subcommand("train", "Train the DQN decision maker");
  std::string tr_scenarios;
  std::int64_t tr_iters = -1, tr_seed = -1;
  bool tr_init_only = false, tr_quiet = false;
  tr->add_option("--scenarios", tr_scenarios, "Training scenario file")->required();
  tr->add_option("--iters", tr_iters, "Decision-step iterations (default: train.iterations)");
  tr->add_option("--seed", tr_seed, "Training seed (default: train.seed)");
  tr->add_flag("--init-only", tr_init_only, "Write the initial network without training");
  tr->add_flag("--quiet", tr_quiet, "No progress output");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate policies on a scenario set");
  std::string ev_scenarios, ev_model, ev_policy = "dqn";
  bool ev_compare = false, ev_traces = false;
  int ev_jobs = 1;
  ev->add_option("--scenarios", ev_scenarios, "Evaluation scenario file")->required();
  ev->add_option("--model", ev_model, "Trained model file (qnet v1)");
  ev->add_option("--policy", ev_policy, "dqn or baseline")
      ->check(CLI::IsMember({"dqn", "baseline"}))
      ->capture_default_str();
  ev->add_flag("--compare", ev_compare, "Run both the DQN and the baseline and pair the results");
  ev->add_option("--jobs", ev_jobs, "Parallel episodes")->capture_default_str();
  ev->add_flag("--traces", ev_traces, "Write one trace CSV per episode under <out-dir>/traces");

  // map
  auto* mp = app.add_subcommand("map", "Decision map of a trained model over NPC positions");
  std::string mp_model, mp_out;
  DecisionMapSpec mspec;
  int mp_res = 50;
  mp->add_option("--model", mp_model, "Trained model file")->required();
  mp->add_option("--res", mp_res, "Grid resolution per axis")->capture_default_str();
  mp->add_option("--npc1-min", mspec.npc1_s.min, "NPC1 s range start")->capture_default_str();
  mp->add_option("--npc1-max", mspec.npc1_s.max, "NPC1 s range end")->capture_default_str();
  mp->add_option("--npc2-min", mspec.npc2_s.min, "NPC2 s range start")->capture_default_str();
  mp->add_option("--npc2-max", mspec.npc2_s.max, "NPC2 s range end")->capture_default_str();
  mp->add_option("--v1", mspec.v1, "NPC1 speed")->capture_default_str();
  mp->add_option("--v2", mspec.v2, "NPC2 speed")->capture_default_str();
  mp->add_option("--ego-d", mspec.ego.d, "Ego lateral offset")->capture_default_str();
  mp->add_option("--ego-speed", mspec.ego.speed, "Ego speed")->capture_default_str();
  mp->add_option("--out", mp_out, "Grid CSV (default: <out-dir>/decision_map.csv)");

  // trace
  auto* tc = app.add_subcommand("trace", "Run one scenario and export its trace");
  std::string tc_scenarios, tc_model, tc_policy = "dqn", tc_out;
  int tc_id = 0;
  bool tc_scripted = false;
  tc->add_option("--scenarios", tc_scenarios, "Scenario file (default: built-in abort scenario)");
  tc->add_option("--id", tc_id, "Scenario id within the file")->capture_default_str();
  tc->add_option("--model", tc_model, "Trained model file");
  tc->add_option("--policy", tc_policy, "dqn, baseline or schedule")
      ->check(CLI::IsMember({"dqn", "baseline", "schedule"}))
      ->capture_default_str();
  tc->add_flag("--scripted-abort", tc_scripted, "Use the built-in abort scenario");
  tc->add_option("--out", tc_out, "Trace CSV (default: <out-dir>/trace.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    RunConfig cfg = resolve(g);

    if (*gen) {
      if (gen_seed >= 0) cfg.seed = static_cast<std::uint64_t>(gen_seed);
      cfg.validate();
      echo_config(cfg, "gen");
      if (!gen_check.empty()) {
        const auto specs = load_scenarios(gen_check);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < specs.size(); ++i) {
          if (!cfg.ranges.contains(specs[i]) || specs[i].id != static_cast<int>(i)) {
            std::cerr << "scenario " << specs[i].id << " outside the configured ranges\n";
            ++bad;
          }
        }
        std::cout << specs.size() << " scenarios checked, " << bad << " invalid\n";
        return bad ? kExitRuntime : 0;
      }
      const auto specs = generate_scenarios(gen_n, cfg.ranges, cfg.seed);
      std::ostringstream ss;
      write_scenarios(ss, specs);
      const fs::path out = gen_out.empty() ? fs::path(cfg.output_dir) / "scenarios.jsonl" : fs::path(gen_out);
      write_text(out, ss.str());
      std::cout << "wrote " << specs.size() << " scenarios to " << out.string() << '\n';
      return 0;
    }

    if (*tr) {
      if (tr_iters >= 0) cfg.train.iterations = tr_iters;
      if (tr_seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(tr_seed);
      if (tr_init_only) cfg.train.iterations = 0;
      cfg.validate();
      const auto specs = load_scenarios(tr_scenarios);
      if (specs.empty()) throw UsageError("scenario file " + tr_scenarios + " is empty");
      echo_config(cfg, "train");
      const EpisodeConfig episode = cfg.episode;
      const auto t0 = std::chrono::steady_clock::now();
      auto progress = [&](const CurvePoint& p) {
        if (tr_quiet || p.episode % 100 != 0) return;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "episode %d iter %lld eps %.3f return %.2f %s loss %.4f (%.0fs)\n",
                     p.episode, static_cast<long long>(p.end_iteration), p.epsilon,
                     p.episode_return, outcome_name(p.outcome).c_str(), p.mean_loss, secs);
      };
      const TrainResult result = train([&] { return std::make_unique<OvertakeEnv>(episode); },
                                       specs, cfg.train, progress);
      const fs::path dir(cfg.output_dir);
      save_qnet((dir / "model.qnet").string(), result.net);
      std::ostringstream curve;
      write_learning_curve(curve, result.curve);
      write_text(dir / "learning_curve.csv", curve.str());
      std::cout << "trained " << result.curve.size() << " episodes, " << result.gradient_steps
                << " gradient steps; model written to " << (dir / "model.qnet").string() << '\n';
      return 0;
    }

    if (*ev) {
      cfg.validate();
      const auto specs = load_scenarios(ev_scenarios);
      const bool need_model = ev_compare || ev_policy == "dqn";
      QNet net;
      if (need_model) net = load_model_for(ev_model, cfg);
      echo_config(cfg, "eval");
      const fs::path dir(cfg.output_dir);

      auto run = [&](const std::string& name) {
        PolicyFactory factory;
        if (name == "dqn")
          factory = [&net] { return std::make_unique<GreedyPolicy>(net); };
        else
          factory = [&cfg] { return std::make_unique<BaselinePolicy>(cfg.baseline); };
        auto results = run_batch(specs, factory, cfg.episode, ev_jobs);
        write_text(dir / ("episodes_" + name + ".csv"), episodes_csv(results));
        if (ev_traces) {
          fs::create_directories(dir / "traces");
          for (const auto& r : results)
            export_trace(r, (dir / "traces" / (name + "_" + std::to_string(r.scenario_id) + ".csv")).string());
        }
        return results;
      };

      std::vector<MetricsTable> tables;
      if (ev_compare) {
        const auto a = run("dqn");
        const auto b = run("baseline");
        auto [ma, mb] = aggregate_metrics(a, b, "RL-Agent", "Baseline");
        tables = {ma, mb};
      } else {
        tables = {summarize(run(ev_policy), ev_policy == "dqn" ? "RL-Agent" : "Baseline")};
      }
      write_text(dir / "metrics.txt", metrics_text(tables));
      write_text(dir / "metrics.jsonl", metrics_jsonl(tables));
      std::cout << metrics_text(tables);
      return 0;
    }

    if (*mp) {
      cfg.validate();
      mspec.resolution_npc1 = mspec.resolution_npc2 = mp_res;
      mspec.ego.length = cfg.episode.vehicle_length;
      mspec.ego.width = cfg.episode.vehicle_width;
      try {
        mspec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const QNet net = load_model_for(mp_model, cfg);
      echo_config(cfg, "map");
      const DecisionMap map = decision_map(net, mspec, cfg.episode);
      std::ostringstream ss;
      write_decision_map_csv(ss, map);
      const fs::path out = mp_out.empty() ? fs::path(cfg.output_dir) / "decision_map.csv" : fs::path(mp_out);
      write_text(out, ss.str());
      std::cout << "wrote " << mp_res << "x" << mp_res << " decision map to " << out.string() << '\n';
      return 0;
    }

    if (*tc) {
      cfg.validate();
      ScenarioSpec spec = scripted_abort_scenario();
      if (!tc_scenarios.empty() && !tc_scripted) {
        const auto specs = load_scenarios(tc_scenarios);
        const auto it = std::find_if(specs.begin(), specs.end(),
                                     [&](const ScenarioSpec& s) { return s.id == tc_id; });
        if (it == specs.end()) throw UsageError("scenario id " + std::to_string(tc_id) + " not found");
        spec = *it;
      }
      QNet net;
      std::unique_ptr<Policy> policy;
      if (tc_policy == "dqn") {
        net = load_model_for(tc_model, cfg);
        policy = std::make_unique<GreedyPolicy>(net);
      } else if (tc_policy == "baseline") {
        policy = std::make_unique<BaselinePolicy>(cfg.baseline);
      } else {
        policy = make_abort_schedule();
      }
      echo_config(cfg, "trace");
      const EpisodeResult result = run_episode(spec, *policy, cfg.episode);
      const fs::path out = tc_out.empty() ? fs::path(cfg.output_dir) / "trace.csv" : fs::path(tc_out);
      export_trace(result, out.string());
      std::cout << "scenario " << spec.id << ": " << outcome_name(result.outcome);
      if (result.crash_npc_id >= 0) std::cout << " (npc " << result.crash_npc_id << ")";
      std::cout << " at t=" << result.end_time << " s; trace written to " << out.string() << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
