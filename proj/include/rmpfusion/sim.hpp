#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rmpfusion/learn.hpp"
#include "rmpfusion/numerics.hpp"
#include "rmpfusion/tree.hpp"

namespace rmpfusion {

enum class EnvKind { kPoint2d, kPlanarArm };

std::string_view to_string(EnvKind k);
EnvKind env_kind_from_string(std::string_view name);

struct Obstacle {
  Vector center;
  double radius = 0.0;
};

struct Environment {
  EnvKind kind = EnvKind::kPoint2d;
  Vector goal;
  std::vector<Obstacle> obstacles;
  Vector lower;  // workspace bounds
  Vector upper;
  std::vector<double> link_lengths;  // planar_arm only

  int q_dim() const;
  int aux_dim() const { return 2 + 3 * static_cast<int>(obstacles.size()); }
  void validate() const;
};

// [goal(2), per obstacle (cx, cy, r)].
Vector encode_aux(const Environment& env);
// Inverse of encode_aux; kind, bounds and link lengths come from `shape`.
Environment decode_aux(const Vector& aux, const Environment& shape);

// Control point of interest for goal reaching: q itself or the end effector.
Vector task_point(const Environment& env, const Vector& q);
// Smallest signed distance between the robot body and any obstacle.
double clearance(const Environment& env, const Vector& q);

struct PolicyEval {
  Vector a;
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
};

// q, qd, aux -> action (and the root Lyapunov value when available).
using SimPolicy = std::function<PolicyEval(const PolicyState&)>;

SimPolicy make_sim_policy(const LearnablePolicy& policy, std::vector<double> params);

enum class Integrator { kEuler, kRk4 };

std::string_view to_string(Integrator m);
Integrator integrator_from_string(std::string_view name);

struct StepResult {
  Vector q;
  Vector qd;
};

StepResult integrate_step(const SimPolicy& policy, const Vector& q, const Vector& qd, const Vector& aux, double dt,
                          Integrator method = Integrator::kRk4);

struct Sample {
  double t = 0.0;
  Vector q;
  Vector qd;
  Vector a;
  double v = 0.0;  // root Lyapunov value
};

struct TrajectoryEvents {
  bool collision = false;
  double collision_time = 0.0;
  bool goal_reached = false;
  double goal_time = 0.0;
  bool timed_out = false;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<Sample> samples;
  TrajectoryEvents events;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct RolloutOptions {
  double horizon = 10.0;
  double dt = 1e-2;
  Integrator method = Integrator::kRk4;
  double goal_tolerance = 0.05;
  bool stop_at_goal = true;
  bool stop_at_collision = true;
};

// Integrates from (q0, qd0) until the goal is reached, a collision happens or
// the horizon elapses. Samples are recorded at every step.
Trajectory rollout(const SimPolicy& policy, const Environment& env, const Vector& q0, const Vector& qd0,
                   const RolloutOptions& options = {});

// Largest increase of V between consecutive samples.
double max_lyapunov_increment(const Trajectory& traj);

// Sampling ranges for random environments and start states.
struct SamplingConfig {
  EnvKind kind = EnvKind::kPoint2d;
  int obstacles = 1;
  Vector lower;  // workspace bounds
  Vector upper;
  Vector goal_lower;
  Vector goal_upper;
  Vector obstacle_lower;  // obstacle centers
  Vector obstacle_upper;
  double radius_min = 0.3;
  double radius_max = 0.8;
  double goal_clearance = 0.3;      // goal distance from any obstacle surface
  double obstacle_separation = 0.1;  // gap between obstacle surfaces
  Vector start_lower;  // point2d: start positions; arm: joint angles
  Vector start_upper;
  double start_speed = 0.5;  // max |qd| per coordinate
  double start_clearance = 0.3;
  std::vector<double> link_lengths;  // planar_arm
  double goal_reach_min = 0.0;       // planar_arm: goal distance from base
  double goal_reach_max = 0.0;

  static SamplingConfig point2d(int obstacles);
  static SamplingConfig planar_arm();
  void validate() const;
};

inline constexpr int kMaxRejections = 10000;

Environment sample_env(const SamplingConfig& cfg, std::mt19937_64& rng);
StepResult sample_start(const Environment& env, const SamplingConfig& cfg, std::mt19937_64& rng);

struct DatasetCounts {
  int envs = 5;
  int traj_per_env = 20;
  int points_per_traj = 60;
};

struct GenSummary {
  int rollouts = 0;
  int skipped = 0;
  int collided = 0;
  int stalled = 0;  // timed out short of the goal
  int goal_reached = 0;
  std::vector<Environment> envs;
};

struct GenResult {
  Dataset data;
  GenSummary summary;
};

// Runs the expert from sampled starts and records points_per_traj temporally
// equidistant samples per trajectory. Rollouts that fail, collide or stall are
// skipped and counted in the summary.
GenResult gen_dataset(const SimPolicy& expert, const SamplingConfig& cfg, const DatasetCounts& counts,
                      std::uint64_t seed, const RolloutOptions& options = {});

// Records of `data` that start a trajectory (t == 0), in order.
std::vector<const Record*> initial_records(const Dataset& data);

struct Metrics {
  double time_to_goal = 0.0;
  double conf_length = 0.0;
  double end_eff_length = 0.0;
  double goal_distance = 0.0;
  bool collided = false;
  bool reached = false;
};

Metrics eval_metrics(const Trajectory& traj, const Environment& env);

// Learner rollouts from the test initial states; at every `interval` seconds
// the learner's action is compared with the expert's at the visited state.
double online_loss(const SimPolicy& learner, const SimPolicy& expert, const Dataset& test, const Environment& shape,
                   const RolloutOptions& options = {}, double interval = 1.0);

}  // namespace rmpfusion
