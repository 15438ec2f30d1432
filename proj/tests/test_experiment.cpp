#include <filesystem>

#include <gtest/gtest.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/experiment.hpp"
#include "rmpfusion/plot.hpp"

using namespace rmpfusion;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = ExperimentConfig::defaults("2d1level");
  c.train_counts = {2, 3, 10};
  c.test_counts = {1, 3, 10};
  c.train.iterations = 20;
  c.train.minibatch = 20;
  c.seed = 5;
  c.train.seed = 5;
  return c;
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(ExperimentConfig, ShippedConfigsLoad) {
  const fs::path dir = RMPFUSION_FIXTURE_DIR;
  for (const std::string& name : fixture_names()) {
    const ExperimentConfig c = load_experiment(dir / ("experiment_" + name + ".json"));
    EXPECT_EQ(c.fixture, name);
    EXPECT_EQ(tree_hash(expert_tree(c)), tree_hash(make_fixture(name).expert));
    EXPECT_EQ(c.train.minibatch, 200);
  }
}

TEST(ExperimentConfig, JsonRoundTripAndDigest) {
  const ExperimentConfig c = small_config();
  const ExperimentConfig back = experiment_from_json(experiment_to_json(c));
  EXPECT_EQ(config_digest(back), config_digest(c));
  ExperimentConfig other = c;
  other.seed = 6;
  EXPECT_NE(config_digest(other), config_digest(c));
  other = c;
  other.out = "elsewhere";
  EXPECT_EQ(config_digest(other), config_digest(c));
}

TEST(ExperimentConfig, PartialOverridesAndErrors) {
  const Json j = Json::parse(R"({"schema": 1, "fixture": "2d2level", "seed": 4, "train": {"iterations": 3}})");
  const ExperimentConfig c = experiment_from_json(j);
  EXPECT_EQ(c.train.iterations, 3);
  EXPECT_EQ(c.train.seed, 4u);
  EXPECT_EQ(c.sampling.obstacles, 2);
  EXPECT_THROW(experiment_from_json(Json::parse(R"({"fixture": "2d1level"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(Json::parse(R"({"schema": 1, "fixture": "3d9level"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(Json::parse(R"({"schema": 1, "expert_tree": "missing.json"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(Json::parse(R"({"schema": 1, "policy": "oracle"})")), ConfigError);
}

TEST(ExperimentConfig, UnstructuredLearner) {
  ExperimentConfig c = ExperimentConfig::defaults("2d2level");
  c.policy = PolicyKind::kUnstructured;
  EXPECT_EQ(make_learner(c)->param_count(), unstructured_param_count(2, 8, {16, 12}));
}

TEST(Evaluate, ExpertAgainstOwnDataset) {
  const ExperimentConfig c = small_config();
  const DataBundle d = generate_data(c);
  const RmpFusionPolicy expert(expert_tree(c));
  const EvalReport r = evaluate(expert, {}, expert_tree(c), d.test.data, env_shape(c.sampling), c.rollout);
  EXPECT_LE(r.batch_loss, 1e-12);
  EXPECT_LE(r.online_loss, 1e-12);
  EXPECT_EQ(r.reached, r.rollouts);
  EXPECT_NEAR(r.ratio_time, 1.0, 1e-12);
}

TEST(Evaluate, RatesPartitionRollouts) {
  const ExperimentConfig c = small_config();
  const DataBundle d = generate_data(c);
  const auto learner = make_learner(c);
  const TrainResult t = train_bc(*learner, d.train.data, c.train);
  const EvalReport r =
      evaluate(*learner, t.state.params, expert_tree(c), d.test.data, env_shape(c.sampling), c.rollout);
  EXPECT_EQ(r.rollouts, 3);
  EXPECT_NEAR(r.completion_rate() + r.collision_rate() + r.timeout_rate(), 1.0, 1e-12);
  EXPECT_GE(r.batch_loss, 0.0);
  EXPECT_GE(r.online_loss, 0.0);
  const Json j = report_to_json(r);
  EXPECT_TRUE(j.contains("ratios"));
}

TEST(DataSeeds, TrainAndTestStreamsDiffer) {
  const ExperimentConfig c = small_config();
  EXPECT_NE(train_data_seed(c), test_data_seed(c));
  const DataBundle a = generate_data(c);
  const DataBundle b = generate_data(c);
  EXPECT_EQ(a.train.data.records.back().a, b.train.data.records.back().a);
  EXPECT_NE(a.train.summary.envs[0].goal, a.test.summary.envs[0].goal);
}

TEST(Plot, DeterministicAndDecreasingV) {
  const RmpFusionPolicy expert(make_2d1level(Role::kExpert));
  Environment env;
  env.goal = v2(2.0, 0.5);
  env.obstacles = {Obstacle{v2(0, 0), 0.5}};
  env.lower = v2(-5, -5);
  env.upper = v2(5, 5);
  const Trajectory t = rollout(make_sim_policy(expert, {}), env, v2(-2.5, 0.1), v2(0, 0));
  for (std::size_t k = 1; k < t.samples.size(); ++k) EXPECT_LE(t.samples[k].v, t.samples[k - 1].v + 1e-9);
  const std::string a = trajectory_svg({t}, env);
  EXPECT_EQ(a, trajectory_svg({t}, env));
  EXPECT_NE(a.find("<circle"), std::string::npos);
  EXPECT_NE(curve_svg({{1, 0.5}, {2, 0.1}}).find("<polyline"), std::string::npos);
}

TEST(Plot, EmptyInputsRejected) {
  EXPECT_THROW(trajectory_svg({}), ConfigError);
  EXPECT_THROW(trajectory_svg({Trajectory{}}), ConfigError);
  EXPECT_THROW(curve_svg({}), ConfigError);
}
