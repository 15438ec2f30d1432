#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/sim.hpp"

using namespace rmpfusion;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

SimPolicy zero_policy() {
  return [](const PolicyState& s) { return PolicyEval{Vector::Zero(s.q.size())}; };
}

Environment point_env() {
  Environment env;
  env.kind = EnvKind::kPoint2d;
  env.goal = v2(2.0, 0.5);
  env.obstacles = {Obstacle{v2(0.0, 0.0), 0.5}};
  env.lower = v2(-5, -5);
  env.upper = v2(5, 5);
  return env;
}

}  // namespace

TEST(Integrate, EulerZeroPolicy) {
  const StepResult r = integrate_step(zero_policy(), v2(1, 2), v2(3, -1), Vector(), 0.1, Integrator::kEuler);
  EXPECT_TRUE(r.q.isApprox(v2(1.3, 1.9)));
  EXPECT_EQ(r.qd, v2(3, -1));
}

TEST(Integrate, Rk4OscillatorOnePeriod) {
  const SimPolicy osc = [](const PolicyState& s) { return PolicyEval{-s.q}; };
  Vector q = v1(1.0), qd = v1(0.0);
  const double dt = 1e-3;
  const auto steps = static_cast<int>(std::lround(2 * M_PI / dt));
  for (int k = 0; k < steps; ++k) {
    const StepResult r = integrate_step(osc, q, qd, Vector(), dt);
    q = r.q;
    qd = r.qd;
  }
  const double t = steps * dt;
  EXPECT_NEAR(q[0], std::cos(t), 1e-6);
  EXPECT_NEAR(qd[0], -std::sin(t), 1e-6);
}

TEST(Integrate, Rk4ExactForConstantAcceleration) {
  const SimPolicy c = [](const PolicyState&) { return PolicyEval{v1(-9.81)}; };
  Vector q = v1(1.0), qd = v1(2.0);
  for (int k = 0; k < 100; ++k) {
    const StepResult r = integrate_step(c, q, qd, Vector(), 0.01);
    q = r.q;
    qd = r.qd;
  }
  EXPECT_NEAR(q[0], 1.0 + 2.0 - 0.5 * 9.81, 1e-12);
  EXPECT_NEAR(qd[0], 2.0 - 9.81, 1e-12);
}

TEST(Rollout, StartAtGoal) {
  const Environment env = point_env();
  const Trajectory t = rollout(zero_policy(), env, env.goal, v2(0, 0));
  EXPECT_TRUE(t.events.goal_reached);
  EXPECT_EQ(t.events.goal_time, 0.0);
}

TEST(Rollout, ZeroPolicyTimesOut) {
  const Trajectory t = rollout(zero_policy(), point_env(), v2(-2, 1), v2(0, 0));
  EXPECT_TRUE(t.events.timed_out);
  EXPECT_FALSE(t.events.goal_reached);
  EXPECT_NEAR(t.duration(), 10.0, 1e-9);
  for (const Sample& s : t.samples) EXPECT_EQ(s.q, v2(-2, 1));
}

TEST(Rollout, ExpertReachesGoalSafelyWithDecreasingEnergy) {
  const RmpFusionPolicy expert(make_2d1level(Role::kExpert));
  const Environment env = point_env();
  const SimPolicy sp = make_sim_policy(expert, {});
  for (const Vector& start : {v2(-2.5, 0.1), v2(-2.0, -1.0), v2(-3.0, 1.2)}) {
    const Trajectory t = rollout(sp, env, start, v2(0, 0));
    EXPECT_TRUE(t.events.goal_reached);
    EXPECT_FALSE(t.events.collision);
    EXPECT_LE(max_lyapunov_increment(t), 10 * std::pow(0.01, 3) + 1e-9);
  }
}

TEST(Rollout, CollisionStops) {
  const SimPolicy push = [](const PolicyState& s) { return PolicyEval{Vector::Zero(s.q.size())}; };
  const Trajectory t = rollout(push, point_env(), v2(-1.0, 0.0), v2(1.0, 0.0));
  EXPECT_TRUE(t.events.collision);
  EXPECT_NEAR(t.events.collision_time, 0.5, 0.011);
}

TEST(Environment, AuxRoundTrip) {
  const Environment env = point_env();
  const Environment back = decode_aux(encode_aux(env), env);
  EXPECT_EQ(back.goal, env.goal);
  EXPECT_EQ(back.obstacles[0].center, env.obstacles[0].center);
  EXPECT_EQ(back.obstacles[0].radius, env.obstacles[0].radius);
}

TEST(Environment, ArmClearanceUsesLinks) {
  Environment env;
  env.kind = EnvKind::kPlanarArm;
  env.link_lengths = kArmLinks;
  env.goal = v2(1.5, 0.0);
  env.obstacles = {Obstacle{v2(1.2, 0.0), 0.1}};
  env.lower = v2(-3, -3);
  env.upper = v2(3, 3);
  Vector q = Vector::Zero(3);
  EXPECT_LT(clearance(env, q), 0.0);  // the straight arm passes through the obstacle
  q[0] = M_PI / 2;
  EXPECT_GT(clearance(env, q), 0.0);
  EXPECT_NEAR(task_point(env, q)[1], 2.4, 1e-12);
}

TEST(Sampling, SeededAndConstrained) {
  for (const SamplingConfig& cfg : {SamplingConfig::point2d(1), SamplingConfig::point2d(2), SamplingConfig::planar_arm()}) {
    std::mt19937_64 a(5), b(5);
    const Environment ea = sample_env(cfg, a);
    const Environment eb = sample_env(cfg, b);
    EXPECT_EQ(ea.goal, eb.goal);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 1000; ++i) {
      const Environment env = sample_env(cfg, rng);
      for (const Obstacle& o : env.obstacles) EXPECT_GT((env.goal - o.center).norm(), o.radius);
      const StepResult s = sample_start(env, cfg, rng);
      EXPECT_GT(clearance(env, s.q), 0.0);
    }
  }
}

TEST(GenDataset, CountsAndEquidistantSamples) {
  const RmpFusionPolicy expert(make_2d1level(Role::kExpert));
  const SamplingConfig cfg = make_fixture("2d1level").sampling;
  const GenResult r = gen_dataset(make_sim_policy(expert, {}), cfg, {2, 3, 7}, 4);
  EXPECT_EQ(r.data.size(), 2u * 3u * 7u);
  EXPECT_EQ(r.summary.envs.size(), 2u);
  EXPECT_EQ(initial_records(r.data).size(), 6u);
  const GenResult one = gen_dataset(make_sim_policy(expert, {}), cfg, {2, 3, 1}, 4);
  EXPECT_EQ(one.data.size(), 6u);
  for (const Record& rec : one.data.records) EXPECT_EQ(rec.t, 0.0);
}

TEST(GenDataset, Deterministic) {
  const RmpFusionPolicy expert(make_2d1level(Role::kExpert));
  const SamplingConfig cfg = make_fixture("2d1level").sampling;
  const GenResult a = gen_dataset(make_sim_policy(expert, {}), cfg, {1, 2, 5}, 8);
  const GenResult b = gen_dataset(make_sim_policy(expert, {}), cfg, {1, 2, 5}, 8);
  ASSERT_EQ(a.data.size(), b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_EQ(a.data.records[i].a, b.data.records[i].a);
}

TEST(GenDataset, FullScaleCountArithmetic) {
  const DatasetCounts train{20, 50, 60};
  const DatasetCounts test{5, 10, 60};
  EXPECT_EQ(train.envs * train.traj_per_env * train.points_per_traj, 60000);
  EXPECT_EQ(test.envs * test.traj_per_env * test.points_per_traj, 3000);
}

TEST(Metrics, StationaryTrajectory) {
  Trajectory t;
  t.dt = 0.1;
  for (int k = 0; k < 5; ++k) t.samples.push_back(Sample{0.1 * k, v2(-1, 0), v2(0, 0), v2(0, 0), 0.0});
  const Metrics m = eval_metrics(t, point_env());
  EXPECT_EQ(m.conf_length, 0.0);
  EXPECT_NEAR(m.goal_distance, (point_env().goal - v2(-1, 0)).norm(), 1e-15);
}

TEST(Metrics, StraightLineUnitSpeed) {
  const double dt = 0.01;
  Trajectory t;
  t.dt = dt;
  for (int k = 0; k <= 200; ++k) t.samples.push_back(Sample{k * dt, v2(-3 + k * dt, 3), v2(1, 0), v2(0, 0), 0.0});
  EXPECT_NEAR(eval_metrics(t, point_env()).conf_length, 2.0, dt);
}

TEST(OnlineLoss, LearnerEqualsExpert) {
  const RmpFusionPolicy expert(make_2d1level(Role::kExpert));
  const SamplingConfig cfg = make_fixture("2d1level").sampling;
  const SimPolicy sp = make_sim_policy(expert, {});
  const GenResult r = gen_dataset(sp, cfg, {1, 2, 5}, 3);
  Environment shape;
  shape.kind = cfg.kind;
  shape.lower = cfg.lower;
  shape.upper = cfg.upper;
  EXPECT_EQ(online_loss(sp, sp, r.data, shape), 0.0);
}

TEST(Names, Integrators) {
  EXPECT_EQ(integrator_from_string("euler"), Integrator::kEuler);
  EXPECT_EQ(to_string(Integrator::kRk4), "rk4");
  EXPECT_THROW(integrator_from_string("leapfrog"), ConfigError);
}
