#include "rmpfusion/experiment.hpp"

#include <cmath>
#include <limits>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

std::string_view to_string(PolicyKind k) { return k == PolicyKind::kUnstructured ? "unstructured" : "rmpfusion"; }

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "rmpfusion") return PolicyKind::kRmpFusion;
  if (name == "unstructured") return PolicyKind::kUnstructured;
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected rmpfusion or unstructured)");
}

ExperimentConfig ExperimentConfig::defaults(const std::string& fixture) {
  ExperimentConfig c;
  c.fixture = fixture;
  c.sampling = make_fixture(fixture).sampling;
  if (fixture == "arm") {
    c.train.optimizer = OptimizerKind::kAdam;
    c.train.iterations = 1500;
    c.train.checkpoint_every = 150;
  } else {
    c.train.optimizer = OptimizerKind::kRmsprop;
    c.train.iterations = 5000;
    c.train.checkpoint_every = 500;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (expert_tree.empty() || learner_tree.empty()) {
    const auto names = fixture_names();
    if (std::find(names.begin(), names.end(), fixture) == names.end()) {
      throw ConfigError("unknown fixture '" + fixture + "'");
    }
  }
  for (const auto& p : {expert_tree, learner_tree}) {
    if (!p.empty() && !std::filesystem::exists(p)) throw ConfigError("tree file not found: " + p.string());
  }
  sampling.validate();
  for (const DatasetCounts* c : {&train_counts, &test_counts}) {
    if (c->envs < 1 || c->traj_per_env < 1 || c->points_per_traj < 1) {
      throw ConfigError("dataset counts must be positive");
    }
  }
  if (!(rollout.dt > 0.0) || !(rollout.horizon > 0.0)) throw ConfigError("rollout dt and horizon must be positive");
  if (!(online_interval > 0.0)) throw ConfigError("online_interval must be positive");
  if (train.minibatch < 1 || train.iterations < 0 || !(train.learning_rate > 0.0)) {
    throw ConfigError("train: minibatch must be positive, iterations non-negative, learning_rate positive");
  }
}

namespace {

Json counts_json(const DatasetCounts& c) {
  return Json{{"envs", c.envs}, {"traj_per_env", c.traj_per_env}, {"points_per_traj", c.points_per_traj}};
}

DatasetCounts counts_from(const Json& j, DatasetCounts c) {
  c.envs = j.value("envs", c.envs);
  c.traj_per_env = j.value("traj_per_env", c.traj_per_env);
  c.points_per_traj = j.value("points_per_traj", c.points_per_traj);
  return c;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be an object");
    if (j.value("schema", 0) != kSchemaVersion) throw ConfigError("experiment: unsupported or missing schema version");
    if (j.contains("kind") && j.at("kind") != "experiment") throw ConfigError("not an experiment document");
    ExperimentConfig c = ExperimentConfig::defaults(j.value("fixture", std::string("2d1level")));
    c.expert_tree = resolve(base_dir, j.value("expert_tree", std::string()));
    c.learner_tree = resolve(base_dir, j.value("learner_tree", std::string()));
    c.policy = policy_kind_from_string(j.value("policy", std::string("rmpfusion")));
    c.learner.hidden = j.value("learner_hidden", c.learner.hidden);
    c.learner.activation = activation_from_string(j.value("activation", std::string("tanh")));
    c.unstructured_hidden = j.value("unstructured_hidden", c.unstructured_hidden);
    if (j.contains("sampling")) {
      Json s = sampling_to_json(c.sampling);
      s.update(j.at("sampling"));
      c.sampling = sampling_from_json(s);
    }
    if (j.contains("train_counts")) c.train_counts = counts_from(j.at("train_counts"), c.train_counts);
    if (j.contains("test_counts")) c.test_counts = counts_from(j.at("test_counts"), c.test_counts);
    c.seed = j.value("seed", c.seed);
    if (j.contains("train")) {
      Json t = train_config_to_json(c.train);
      t["seed"] = c.seed;
      t.update(j.at("train"));
      c.train = train_config_from_json(t);
    } else {
      c.train.seed = c.seed;
    }
    if (j.contains("rollout")) {
      Json r = rollout_options_to_json(c.rollout);
      r.update(j.at("rollout"));
      c.rollout = rollout_options_from_json(r);
    }
    c.online_interval = j.value("online_interval", c.online_interval);
    c.out = resolve(base_dir, j.value("out", std::string("out")));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return with_context(path.string(), [&] { return experiment_from_json(read_json(path), path.parent_path()); });
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json j{{"schema", kSchemaVersion}, {"kind", "experiment"}, {"fixture", c.fixture}};
  if (!c.expert_tree.empty()) j["expert_tree"] = c.expert_tree.string();
  if (!c.learner_tree.empty()) j["learner_tree"] = c.learner_tree.string();
  j["policy"] = std::string(to_string(c.policy));
  j["learner_hidden"] = c.learner.hidden;
  j["activation"] = std::string(to_string(c.learner.activation));
  j["unstructured_hidden"] = c.unstructured_hidden;
  j["sampling"] = sampling_to_json(c.sampling);
  j["train_counts"] = counts_json(c.train_counts);
  j["test_counts"] = counts_json(c.test_counts);
  j["train"] = train_config_to_json(c.train);
  j["rollout"] = rollout_options_to_json(c.rollout);
  j["online_interval"] = c.online_interval;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  return j;
}

std::string config_digest(const ExperimentConfig& cfg) {
  Json j = experiment_to_json(cfg);
  j.erase("out");
  return fnv1a_hex(j.dump());
}

std::uint64_t train_data_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, 1); }
std::uint64_t test_data_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, 2); }

TreeSpec expert_tree(const ExperimentConfig& cfg) {
  if (!cfg.expert_tree.empty()) return tree_from_json(read_json(cfg.expert_tree));
  return make_fixture(cfg.fixture).expert;
}

std::unique_ptr<LearnablePolicy> make_learner(const ExperimentConfig& cfg) {
  const TreeSpec learner = cfg.learner_tree.empty() ? make_fixture(cfg.fixture, cfg.learner).learner
                                                    : tree_from_json(read_json(cfg.learner_tree));
  if (cfg.policy == PolicyKind::kUnstructured) {
    return std::make_unique<UnstructuredPolicy>(learner.root_dim(), learner.aux_dim(), cfg.unstructured_hidden,
                                                cfg.learner.activation);
  }
  return std::make_unique<RmpFusionPolicy>(learner);
}

Environment env_shape(const SamplingConfig& sampling) {
  Environment env;
  env.kind = sampling.kind;
  env.lower = sampling.lower;
  env.upper = sampling.upper;
  env.link_lengths = sampling.link_lengths;
  return env;
}

DataBundle generate_data(const ExperimentConfig& cfg) {
  const RmpFusionPolicy expert(expert_tree(cfg));
  const SimPolicy sp = make_sim_policy(expert, {});
  DataBundle b;
  b.train = gen_dataset(sp, cfg.sampling, cfg.train_counts, train_data_seed(cfg), cfg.rollout);
  b.train.data.split = "train";
  b.test = gen_dataset(sp, cfg.sampling, cfg.test_counts, test_data_seed(cfg), cfg.rollout);
  b.test.data.split = "test";
  return b;
}

namespace {

void accumulate(Metrics& sum, const Metrics& m) {
  sum.time_to_goal += m.time_to_goal;
  sum.conf_length += m.conf_length;
  sum.end_eff_length += m.end_eff_length;
  sum.goal_distance += m.goal_distance;
}

void scale(Metrics& m, double s) {
  m.time_to_goal *= s;
  m.conf_length *= s;
  m.end_eff_length *= s;
  m.goal_distance *= s;
}

double ratio(double a, double b) { return b > 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

EvalReport evaluate(const LearnablePolicy& learner, const std::vector<double>& params, const TreeSpec& expert,
                    const Dataset& test, const Environment& shape, const RolloutOptions& options,
                    double online_interval) {
  const RmpFusionPolicy expert_policy(expert);
  const SimPolicy esp = make_sim_policy(expert_policy, {});
  const SimPolicy lsp = make_sim_policy(learner, params);
  EvalReport r;
  r.batch_loss = batch_loss(learner, test.records, params);
  r.online_loss = online_loss(lsp, esp, test, shape, options, online_interval);
  const bool has_lyapunov = learner.kind() == "rmpfusion";
  r.max_lyapunov_increment = has_lyapunov ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::quiet_NaN();
  for (const Record* start : initial_records(test)) {
    const Environment env = decode_aux(start->aux, shape);
    Trajectory lt = rollout(lsp, env, start->q, start->qd, options);
    const Trajectory et = rollout(esp, env, start->q, start->qd, options);
    ++r.rollouts;
    r.reached += lt.events.goal_reached;
    r.collided += lt.events.collision;
    r.timed_out += lt.events.timed_out;
    if (has_lyapunov) r.max_lyapunov_increment = std::max(r.max_lyapunov_increment, max_lyapunov_increment(lt));
    accumulate(r.learner, eval_metrics(lt, env));
    accumulate(r.expert, eval_metrics(et, env));
    r.trajectories.push_back(std::move(lt));
  }
  if (r.rollouts > 0) {
    scale(r.learner, 1.0 / r.rollouts);
    scale(r.expert, 1.0 / r.rollouts);
  }
  r.ratio_time = ratio(r.learner.time_to_goal, r.expert.time_to_goal);
  r.ratio_conf_length = ratio(r.learner.conf_length, r.expert.conf_length);
  r.ratio_end_eff_length = ratio(r.learner.end_eff_length, r.expert.end_eff_length);
  r.ratio_goal_distance = ratio(r.learner.goal_distance, r.expert.goal_distance);
  return r;
}

Json report_to_json(const EvalReport& r) {
  auto metrics = [](const Metrics& m) {
    return Json{{"time_to_goal", m.time_to_goal},
                {"conf_length", m.conf_length},
                {"end_eff_length", m.end_eff_length},
                {"goal_distance", m.goal_distance}};
  };
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"batch_loss", r.batch_loss},
              {"online_loss", r.online_loss},
              {"rollouts", r.rollouts},
              {"completion_rate", r.completion_rate()},
              {"collision_rate", r.collision_rate()},
              {"timeout_rate", r.timeout_rate()},
              {"max_lyapunov_increment", num(r.max_lyapunov_increment)},
              {"learner_metrics", metrics(r.learner)},
              {"expert_metrics", metrics(r.expert)},
              {"ratios",
               Json{{"time_to_goal", num(r.ratio_time)},
                    {"conf_length", num(r.ratio_conf_length)},
                    {"end_eff_length", num(r.ratio_end_eff_length)},
                    {"goal_distance", num(r.ratio_goal_distance)}}}};
}

}  // namespace rmpfusion
