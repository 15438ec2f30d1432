#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/oracles.hpp"
#include "rmpfusion/serialize.hpp"

using namespace rmpfusion;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / ("rmpfusion_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(d);
  return d;
}

void expect_same_policy(const TreeSpec& a, const TreeSpec& b, std::uint64_t seed) {
  ASSERT_EQ(a.param_count(), b.param_count());
  std::mt19937_64 rng(seed);
  const std::vector<double> p = random_params(a, rng);
  for (int i = 0; i < 5; ++i) {
    const PolicyState s = random_state(a, rng);
    EXPECT_EQ(evaluate_policy(a, s, p).a, evaluate_policy(b, s, p).a);
  }
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(TreeJson, RoundTripsFixtures) {
  for (const std::string& name : fixture_names()) {
    const FixturePair f = make_fixture(name);
    for (const TreeSpec* t : {&f.expert, &f.learner}) {
      const TreeSpec back = tree_from_json(tree_to_json(*t));
      EXPECT_EQ(tree_to_json(back), tree_to_json(*t));
      EXPECT_EQ(tree_hash(back), tree_hash(*t));
    }
  }
  const TreeSpec y = make_ytree();
  EXPECT_EQ(tree_to_json(tree_from_json(tree_to_json(y))), tree_to_json(y));
}

TEST(TreeJson, RoundTripsRandomTrees) {
  std::mt19937_64 rng(3);
  RandomTreeOptions o;
  o.weights = RandomWeights::kMixed;
  for (int i = 0; i < 20; ++i) {
    const TreeSpec t = random_tree(rng, o);
    expect_same_policy(t, tree_from_json(tree_to_json(t)), static_cast<std::uint64_t>(i));
  }
}

TEST(TreeJson, ShippedFixturesMatchCode) {
  const fs::path dir = RMPFUSION_FIXTURE_DIR;
  for (const std::string& name : fixture_names()) {
    const FixturePair f = make_fixture(name);
    EXPECT_EQ(tree_hash(tree_from_json(read_json(dir / (name + "_expert.json")))), tree_hash(f.expert)) << name;
    EXPECT_EQ(tree_hash(tree_from_json(read_json(dir / (name + "_learner.json")))), tree_hash(f.learner)) << name;
  }
  EXPECT_EQ(tree_hash(tree_from_json(read_json(dir / "ytree.json"))), tree_hash(make_ytree()));
}

TEST(TreeJson, RejectsMalformed) {
  Json j = tree_to_json(make_2d1level(Role::kExpert));
  j["schema"] = 99;
  EXPECT_THROW(tree_from_json(j), ConfigError);
  Json k = tree_to_json(make_2d1level(Role::kExpert));
  k["nodes"][0]["parent"] = "nowhere";
  EXPECT_THROW(tree_from_json(k), ConfigError);
  Json l = tree_to_json(make_2d1level(Role::kExpert));
  l["nodes"][0].erase("map");
  EXPECT_THROW(tree_from_json(l), ConfigError);
}

TEST(Checkpoint, RoundTrip) {
  const RmpFusionPolicy policy(make_2d2level(Role::kLearner));
  TrainState s{policy.initial_params(4), make_optimizer(OptimizerKind::kAdam, 0), 17};
  s.optimizer = make_optimizer(OptimizerKind::kAdam, s.params.size());
  s.optimizer.step = 17;
  s.optimizer.m.assign(s.params.size(), 0.25);
  s.optimizer.v.assign(s.params.size(), 1e-7);
  const Checkpoint c = checkpoint_from_json(checkpoint_to_json(policy, s));
  EXPECT_EQ(c.state.params, s.params);
  EXPECT_EQ(c.state.iteration, 17);
  EXPECT_EQ(c.state.optimizer.m, s.optimizer.m);
  EXPECT_EQ(c.state.optimizer.v, s.optimizer.v);
  EXPECT_EQ(c.state.optimizer.step, 17);
  EXPECT_EQ(c.policy->param_count(), policy.param_count());
}

TEST(Checkpoint, DetectsTamperedTree) {
  const RmpFusionPolicy policy(make_2d1level(Role::kLearner));
  const TrainState s{policy.initial_params(1), make_optimizer(OptimizerKind::kRmsprop, 146), 0};
  Json j = checkpoint_to_json(policy, s);
  j["tree_hash"] = "0000000000000000";
  EXPECT_THROW(checkpoint_from_json(j), ConfigError);
  Json k = checkpoint_to_json(policy, s);
  k["params"].erase(0);
  EXPECT_THROW(checkpoint_from_json(k), ConfigError);
}

TEST(Checkpoint, UnstructuredPolicy) {
  const UnstructuredPolicy policy(2, 8, {16, 12});
  const TrainState s{policy.initial_params(2), make_optimizer(OptimizerKind::kRmsprop, 438), 5};
  const Checkpoint c = checkpoint_from_json(checkpoint_to_json(policy, s));
  EXPECT_EQ(c.policy->kind(), "unstructured");
  const PolicyState st{v2(1, 0), v2(0, 1), Vector::Ones(8)};
  EXPECT_EQ(c.policy->act(st, c.state.params), policy.act(st, s.params));
}

TEST(Files, DatasetRoundTrip) {
  Dataset d;
  d.split = "test";
  d.records.push_back(Record{1, 2, 0.1, v2(0.1, 1.0 / 3.0), v2(-2, 1e-300), Vector::Ones(5), v2(1e10, -0.5)});
  d.records.push_back(Record{1, 3, 0.0, v2(0, 0), v2(0, 0), Vector::Zero(5), v2(0, 0)});
  const fs::path p = temp_dir() / "d.jsonl";
  write_dataset(p, d);
  const Dataset back = read_dataset(p);
  EXPECT_EQ(back.split, "test");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.records[0].q, d.records[0].q);
  EXPECT_EQ(back.records[0].qd, d.records[0].qd);
  EXPECT_EQ(back.records[0].a, d.records[0].a);
  EXPECT_EQ(back.records[1].traj, 3);
}

TEST(Files, TruncatedDatasetFails) {
  const fs::path p = temp_dir() / "bad.jsonl";
  std::ofstream(p) << R"({"schema":1,"kind":"dataset","split":"train","count":3})" << '\n';
  EXPECT_THROW(read_dataset(p), ConfigError);
}

TEST(Files, TrajectoryRoundTrip) {
  Trajectory t;
  t.dt = 0.01;
  t.events.goal_reached = true;
  t.events.goal_time = 0.01;
  t.samples.push_back(Sample{0.0, v2(1, 2), v2(0, 0), v2(0.5, -0.5), 3.0});
  t.samples.push_back(Sample{0.01, v2(1.1, 2), v2(0.1, 0), v2(0.5, -0.25), 2.5});
  const fs::path p = temp_dir() / "t.tsv";
  write_trajectory(p, t);
  const Trajectory back = read_trajectory(p);
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.samples[1].q, t.samples[1].q);
  EXPECT_EQ(back.samples[1].v, 2.5);
  EXPECT_TRUE(back.events.goal_reached);
  EXPECT_EQ(back.dt, 0.01);
}

TEST(Files, EmptyTrajectoryRejected) {
  const fs::path p = temp_dir() / "empty.tsv";
  EXPECT_THROW(write_trajectory(p, Trajectory{}), ConfigError);
  std::ofstream(p) << "";
  EXPECT_THROW(read_trajectory(p), ConfigError);
}

TEST(Files, CurveRoundTrip) {
  const std::vector<CurvePoint> c{{1, 0.5}, {2, 0.25}};
  const fs::path p = temp_dir() / "curve.tsv";
  write_curve(p, c);
  const auto back = read_curve(p);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].iteration, 2);
  EXPECT_EQ(back[1].loss, 0.25);
}

TEST(Files, MissingFileNamesPath) {
  try {
    read_json("/nonexistent/config.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/config.json"), std::string::npos);
  }
}

TEST(Configs, EnvironmentRoundTrip) {
  Environment env;
  env.kind = EnvKind::kPlanarArm;
  env.goal = v2(1.2, 0.3);
  env.obstacles = {Obstacle{v2(1.5, 1.0), 0.2}};
  env.lower = v2(-3, -3);
  env.upper = v2(3, 3);
  env.link_lengths = kArmLinks;
  const Environment back = environment_from_json(environment_to_json(env));
  EXPECT_EQ(back.kind, env.kind);
  EXPECT_EQ(back.link_lengths, env.link_lengths);
  EXPECT_EQ(back.obstacles[0].radius, 0.2);
}

TEST(Configs, SamplingAndTrainRoundTrip) {
  const SamplingConfig s = SamplingConfig::planar_arm();
  EXPECT_EQ(sampling_to_json(sampling_from_json(sampling_to_json(s))), sampling_to_json(s));
  TrainConfig t;
  t.optimizer = OptimizerKind::kAdam;
  t.checkpoint_every = 7;
  EXPECT_EQ(train_config_to_json(train_config_from_json(train_config_to_json(t))), train_config_to_json(t));
  RolloutOptions r;
  r.method = Integrator::kEuler;
  EXPECT_EQ(rollout_options_to_json(rollout_options_from_json(rollout_options_to_json(r))), rollout_options_to_json(r));
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}
