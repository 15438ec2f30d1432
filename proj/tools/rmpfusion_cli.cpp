#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/experiment.hpp"
#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/oracles.hpp"
#include "rmpfusion/plot.hpp"
#include "rmpfusion/serialize.hpp"

namespace fs = std::filesystem;
using namespace rmpfusion;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string model;
  std::string suite;
  std::optional<double> dt;
  std::string method;
  std::vector<std::string> inputs;
  int cases = -1;
  bool inject_negative = false;
  bool assert_safe = false;
  double horizon = 0.0;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rmpfusion");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("RMPFUSION_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

ExperimentConfig load_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_experiment(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.out = o.out;
  if (o.dt) cfg.rollout.dt = *o.dt;
  if (!o.method.empty()) cfg.rollout.method = integrator_from_string(o.method);
  cfg.validate();
  return cfg;
}

Json summary_json(const ExperimentConfig& cfg, const DataBundle& b) {
  auto part = [](const GenResult& g) {
    Json envs = Json::array();
    for (const Environment& e : g.summary.envs) envs.push_back(fnv1a_hex(environment_to_json(e).dump()));
    return Json{{"records", g.data.size()},    {"rollouts", g.summary.rollouts},
                {"goal_reached", g.summary.goal_reached}, {"skipped", g.summary.skipped},
                {"collided", g.summary.collided}, {"stalled", g.summary.stalled},
                {"env_digests", envs}};
  };
  return Json{{"schema", kSchemaVersion}, {"kind", "dataset_summary"}, {"config_digest", config_digest(cfg)},
              {"train", part(b.train)},     {"test", part(b.test)}};
}

DataBundle write_data(const ExperimentConfig& cfg) {
  DataBundle b = generate_data(cfg);
  write_dataset(cfg.out / "train.jsonl", b.train.data);
  write_dataset(cfg.out / "test.jsonl", b.test.data);
  write_json(cfg.out / "summary.json", summary_json(cfg, b));
  spdlog::info("wrote {} train and {} test records to {}", b.train.data.size(), b.test.data.size(), cfg.out.string());
  return b;
}

// Reuses datasets in the output directory when they were generated from the
// same configuration, otherwise generates them.
DataBundle ensure_data(const ExperimentConfig& cfg) {
  const fs::path summary = cfg.out / "summary.json";
  if (fs::exists(summary) && fs::exists(cfg.out / "train.jsonl") && fs::exists(cfg.out / "test.jsonl") &&
      read_json(summary).value("config_digest", std::string()) == config_digest(cfg)) {
    DataBundle b;
    b.train.data = read_dataset(cfg.out / "train.jsonl");
    b.test.data = read_dataset(cfg.out / "test.jsonl");
    return b;
  }
  return write_data(cfg);
}

int cmd_gen_data(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  fs::create_directories(cfg.out);
  write_data(cfg);
  return kExitOk;
}

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%07d.json", iteration);
  return buf;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  fs::create_directories(cfg.out / "checkpoints");
  const DataBundle data = ensure_data(cfg);
  const std::unique_ptr<LearnablePolicy> learner = make_learner(cfg);
  const Json policy_doc = policy_to_json(*learner);

  TrainState start{learner->initial_params(cfg.train.seed), make_optimizer(cfg.train.optimizer, 0), 0};
  start.optimizer = make_optimizer(cfg.train.optimizer, start.params.size());
  std::vector<CurvePoint> curve;
  if (!o.model.empty()) {
    Checkpoint ck = checkpoint_from_json(read_json(o.model));
    if (policy_to_json(*ck.policy) != policy_doc) {
      throw ConfigError(o.model + ": checkpoint policy does not match the configured learner");
    }
    start = std::move(ck.state);
    const fs::path curve_path = cfg.out / "curve.tsv";
    if (fs::exists(curve_path)) {
      for (const CurvePoint& p : read_curve(curve_path)) {
        if (p.iteration <= start.iteration) curve.push_back(p);
      }
    }
    spdlog::info("resuming from iteration {}", start.iteration);
  }

  const TrainResult r = train_bc(*learner, data.train.data, cfg.train, start, [&](const TrainState& s) {
    write_json(cfg.out / "checkpoints" / checkpoint_name(s.iteration), checkpoint_to_json(*learner, s));
  });
  curve.insert(curve.end(), r.curve.begin(), r.curve.end());
  write_curve(cfg.out / "curve.tsv", curve);
  write_json(cfg.out / "model.json", checkpoint_to_json(*learner, r.state));
  spdlog::info("trained {} iterations; final minibatch loss {}", r.state.iteration,
               curve.empty() ? 0.0 : curve.back().loss);
  return kExitOk;
}

int cmd_eval(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  if (o.model.empty()) throw ConfigError("--model is required");
  const Checkpoint ck = checkpoint_from_json(read_json(o.model));
  const DataBundle data = ensure_data(cfg);
  const EvalReport r = evaluate(*ck.policy, ck.state.params, expert_tree(cfg), data.test.data, env_shape(cfg.sampling),
                                cfg.rollout, cfg.online_interval);
  Json report = report_to_json(r);
  report["schema"] = kSchemaVersion;
  report["kind"] = "report";
  report["config_digest"] = config_digest(cfg);
  report["model"] = o.model;
  report["iteration"] = ck.state.iteration;
  write_json(cfg.out / "report.json", report);
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

struct LoadedModel {
  std::shared_ptr<LearnablePolicy> policy;
  std::vector<double> params;
};

// A checkpoint file, or fixture:<name> for the fixture's expert.
LoadedModel load_model(const std::string& spec) {
  if (spec.empty()) throw ConfigError("--model is required");
  if (spec.rfind("fixture:", 0) == 0) {
    const std::string name = spec.substr(8);
    if (name == "ytree") return {std::make_shared<RmpFusionPolicy>(make_ytree()), {}};
    return {std::make_shared<RmpFusionPolicy>(make_fixture(name).expert), {}};
  }
  Checkpoint ck = checkpoint_from_json(read_json(spec));
  return {ck.policy, ck.state.params};
}

int cmd_rollout(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config (environment with start state) is required");
  if (o.out.empty()) throw ConfigError("--out (trajectory file) is required");
  const LoadedModel m = load_model(o.model);
  const Json doc = read_json(o.config);
  const Environment env = with_context(o.config, [&] { return environment_from_json(doc); });
  if (!doc.contains("start")) throw ConfigError(o.config + ": missing 'start' {q, qd}");
  const Json& start = doc.at("start");
  const auto q = start.at("q").get<std::vector<double>>();
  const auto qd = start.value("qd", std::vector<double>(q.size(), 0.0));
  if (static_cast<int>(q.size()) != env.q_dim() || q.size() != qd.size()) {
    throw ConfigError(o.config + ": start state does not match the environment dimension");
  }
  RolloutOptions opts;
  if (doc.contains("rollout")) {
    Json r = rollout_options_to_json(opts);
    r.update(doc.at("rollout"));
    opts = rollout_options_from_json(r);
  }
  if (o.dt) opts.dt = *o.dt;
  if (!o.method.empty()) opts.method = integrator_from_string(o.method);
  if (o.horizon > 0.0) opts.horizon = o.horizon;

  const SimPolicy sp = make_sim_policy(*m.policy, m.params);
  const Trajectory t = rollout(sp, env, Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size())),
                               Eigen::Map<const Vector>(qd.data(), static_cast<Eigen::Index>(qd.size())), opts);
  write_trajectory(o.out, t);
  spdlog::info("{} samples, goal {}, collision {}, timeout {}", t.samples.size(), t.events.goal_reached,
               t.events.collision, t.events.timed_out);
  if (o.assert_safe && t.events.collision) {
    spdlog::error("rollout collided at t = {}", t.events.collision_time);
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_plot(const Options& o) {
  if (o.inputs.empty()) throw ConfigError("plot needs at least one input file");
  if (o.out.empty()) throw ConfigError("--out (svg file) is required");
  std::string svg;
  if (fs::path(o.inputs.front()).filename().string().find("curve") != std::string::npos) {
    if (o.inputs.size() != 1) throw ConfigError("plot takes one learning curve at a time");
    svg = curve_svg(read_curve(o.inputs.front()));
  } else {
    std::vector<Trajectory> trajs;
    for (const std::string& p : o.inputs) trajs.push_back(read_trajectory(p));
    std::optional<Environment> env;
    if (!o.config.empty()) env = with_context(o.config, [&] { return environment_from_json(read_json(o.config)); });
    svg = trajectory_svg(trajs, env);
  }
  write_text(o.out, svg);
  return kExitOk;
}

int cmd_verify(const Options& o) {
  std::vector<std::string> suites;
  if (o.suite == "all") {
    suites = suite_names();
  } else {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), o.suite) == names.end()) {
      throw ConfigError("unknown suite '" + o.suite + "'");
    }
    suites = {o.suite};
  }
  VerifyOptions v;
  v.seed = o.seed.value_or(0);
  v.cases = o.cases;
  v.dt = o.dt.value_or(-1.0);
  if (!o.method.empty()) v.method = integrator_from_string(o.method);
  v.inject_negative_weight = o.inject_negative;

  bool ok = true;
  Json all = Json::array();
  for (const std::string& s : suites) {
    const SuiteResult r = run_suite(s, v);
    ok = ok && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << s << "  cases " << r.cases << "  failures " << r.failures
              << "  worst " << format_double(r.worst) << "  tolerance " << format_double(r.tolerance) << "  "
              << format_double(r.seconds) << " s\n";
    all.push_back(suite_result_to_json(r));
  }
  if (!o.out.empty()) write_json(o.out, all.size() == 1 ? all.front() : all);
  if (!ok && o.out.empty()) {
    for (const Json& r : all) {
      if (!r.at("counterexample").is_null()) std::cout << r.at("counterexample").dump() << '\n';
    }
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_export_fixtures(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("fixtures") : fs::path(o.out);
  fs::create_directories(dir);
  for (const std::string& name : fixture_names()) {
    const FixturePair f = make_fixture(name);
    write_json(dir / (name + "_expert.json"), tree_to_json(f.expert));
    write_json(dir / (name + "_learner.json"), tree_to_json(f.learner));
    ExperimentConfig cfg = ExperimentConfig::defaults(name);
    cfg.out = "out/" + name;
    Json exp = experiment_to_json(cfg);
    exp["expert_tree"] = name + "_expert.json";
    exp["learner_tree"] = name + "_learner.json";
    write_json(dir / ("experiment_" + name + ".json"), exp);
  }
  write_json(dir / "ytree.json", tree_to_json(make_ytree()));
  spdlog::info("wrote fixtures to {}", dir.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"RMPfusion: structured motion-policy learning with stability guarantees"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c, const char* help = "Experiment seed (overrides the config)") {
    c->add_option("--seed", o.seed, help);
  };
  auto add_rollout = [&](CLI::App* c) {
    c->add_option("--dt", o.dt, "Integration step [s]")->check(CLI::PositiveNumber);
    c->add_option("--method", o.method, "Integrator")->check(CLI::IsMember({"euler", "rk4"}));
  };

  auto* gen = app.add_subcommand("gen-data", "Generate train/test datasets from the expert");
  gen->add_option("--config", o.config, "Experiment config")->required();
  gen->add_option("--out", o.out, "Output directory (overrides the config)");
  add_seed(gen);
  add_rollout(gen);

  auto* train = app.add_subcommand("train", "Behavior cloning with checkpoints and a learning curve");
  train->add_option("--config", o.config, "Experiment config")->required();
  train->add_option("--out", o.out, "Output directory (overrides the config)");
  train->add_option("--model", o.model, "Checkpoint to resume from");
  add_seed(train);
  add_rollout(train);

  auto* eval = app.add_subcommand("eval", "Batch/online loss, completion and metrics on the test set");
  eval->add_option("--config", o.config, "Experiment config")->required();
  eval->add_option("--model", o.model, "Checkpoint")->required();
  eval->add_option("--out", o.out, "Output directory (overrides the config)");
  add_seed(eval);
  add_rollout(eval);

  auto* roll = app.add_subcommand("rollout", "Simulate one policy from a start state");
  roll->add_option("--model", o.model, "Checkpoint or fixture:<name>")->required();
  roll->add_option("--config", o.config, "Environment document with a start {q, qd}")->required();
  roll->add_option("--out", o.out, "Trajectory file (tsv)")->required();
  roll->add_option("--horizon", o.horizon, "Horizon [s]");
  roll->add_flag("--assert-safe", o.assert_safe, "Exit 1 when the rollout collides");
  add_rollout(roll);

  auto* plot = app.add_subcommand("plot", "Render trajectories or a learning curve as SVG");
  plot->add_option("inputs", o.inputs, "Trajectory tsv files, or one curve.tsv")->required();
  plot->add_option("--config", o.config, "Environment document for obstacles and goal");
  plot->add_option("--out", o.out, "SVG file")->required();

  auto* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("--suite", o.suite, "reduction | stability | gradients | decomposition | energy | all")->required();
  verify->add_option("--out", o.out, "Report file (json, includes any counterexample)");
  verify->add_option("--cases", o.cases, "Number of cases (suite default when omitted)");
  verify->add_flag("--inject-negative", o.inject_negative, "Stability suite: add a negative-weight tree");
  add_seed(verify, "Seed for the random cases");
  add_rollout(verify);

  auto* fixtures = app.add_subcommand("export-fixtures", "Write the shipped trees and experiment configs");
  fixtures->add_option("--out", o.out, "Directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*roll) return cmd_rollout(o);
    if (*plot) return cmd_plot(o);
    if (*verify) return cmd_verify(o);
    if (*fixtures) return cmd_export_fixtures(o);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed input: {}", e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
