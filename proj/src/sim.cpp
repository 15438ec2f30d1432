#include "rmpfusion/sim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

Vector uniform_box(const Vector& lo, const Vector& hi, std::mt19937_64& rng) {
  Vector out(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    std::uniform_real_distribution<double> d(lo[i], hi[i]);
    out[i] = d(rng);
  }
  return out;
}

double uniform(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// Joint positions of a planar arm, base first.
std::vector<Eigen::Vector2d> arm_points(const std::vector<double>& lengths, const Vector& q) {
  std::vector<Eigen::Vector2d> pts{Eigen::Vector2d::Zero()};
  double angle = 0.0;
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    angle += q[static_cast<Eigen::Index>(k)];
    pts.push_back(pts.back() + lengths[k] * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
  }
  return pts;
}

double segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - p).norm();
}

bool inside(const Vector& x, const Vector& lo, const Vector& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

void require_box(const Vector& lo, const Vector& hi, Eigen::Index dim, const char* what) {
  if (lo.size() != dim || hi.size() != dim) {
    throw ConfigError(std::string("sampling: ") + what + " bounds must have dimension " + std::to_string(dim));
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(lo[i] <= hi[i])) throw ConfigError(std::string("sampling: empty ") + what + " range");
  }
}

StepResult step_with(const SimPolicy& policy, const Vector& q, const Vector& qd, const Vector& aux, double dt,
                     Integrator method, const Vector& a0) {
  if (!(dt > 0.0)) throw ConfigError("integrate_step: dt must be positive");
  if (method == Integrator::kEuler) return {q + dt * qd, qd + dt * a0};
  auto accel = [&](const Vector& x, const Vector& v) { return policy(PolicyState{x, v, aux}).a; };
  const Vector k1q = qd;
  const Vector& k1v = a0;
  const Vector k2q = qd + 0.5 * dt * k1v;
  const Vector k2v = accel(q + 0.5 * dt * k1q, k2q);
  const Vector k3q = qd + 0.5 * dt * k2v;
  const Vector k3v = accel(q + 0.5 * dt * k2q, k3q);
  const Vector k4q = qd + dt * k3v;
  const Vector k4v = accel(q + dt * k3q, k4q);
  return {q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
          qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

}  // namespace

std::string_view to_string(EnvKind k) { return k == EnvKind::kPlanarArm ? "planar_arm" : "point2d"; }

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "point2d") return EnvKind::kPoint2d;
  if (name == "planar_arm") return EnvKind::kPlanarArm;
  throw ConfigError("unknown environment kind '" + std::string(name) + "'");
}

int Environment::q_dim() const {
  return kind == EnvKind::kPlanarArm ? static_cast<int>(link_lengths.size()) : 2;
}

void Environment::validate() const {
  if (goal.size() != 2) throw ConfigError("environment: goal must be 2-D");
  if (lower.size() != 2 || upper.size() != 2) throw ConfigError("environment: bounds must be 2-D");
  if (!inside(goal, lower, upper)) throw ConfigError("environment: goal outside the workspace bounds");
  for (const Obstacle& o : obstacles) {
    if (o.center.size() != 2) throw ConfigError("environment: obstacle centers must be 2-D");
    if (!(o.radius > 0.0)) throw ConfigError("environment: obstacle radius must be positive");
  }
  if (kind == EnvKind::kPlanarArm) {
    if (link_lengths.empty()) throw ConfigError("environment: planar arm needs link lengths");
    for (double l : link_lengths) {
      if (!(l > 0.0)) throw ConfigError("environment: link lengths must be positive");
    }
  }
}

Vector encode_aux(const Environment& env) {
  Vector aux(env.aux_dim());
  aux.head(2) = env.goal;
  for (std::size_t k = 0; k < env.obstacles.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(2 + 3 * k);
    aux.segment(o, 2) = env.obstacles[k].center;
    aux[o + 2] = env.obstacles[k].radius;
  }
  return aux;
}

Environment decode_aux(const Vector& aux, const Environment& shape) {
  if (aux.size() < 2 || (aux.size() - 2) % 3 != 0) {
    throw DimensionError("decode_aux: aux length " + std::to_string(aux.size()) + " is not 2 + 3k");
  }
  Environment env = shape;
  env.goal = aux.head(2);
  env.obstacles.clear();
  for (Eigen::Index o = 2; o < aux.size(); o += 3) env.obstacles.push_back(Obstacle{aux.segment(o, 2), aux[o + 2]});
  return env;
}

Vector task_point(const Environment& env, const Vector& q) {
  if (env.kind == EnvKind::kPoint2d) return q;
  const auto pts = arm_points(env.link_lengths, q);
  return pts.back();
}

double clearance(const Environment& env, const Vector& q) {
  double best = std::numeric_limits<double>::infinity();
  if (env.kind == EnvKind::kPoint2d) {
    for (const Obstacle& o : env.obstacles) best = std::min(best, (q - o.center).norm() - o.radius);
    return best;
  }
  const auto pts = arm_points(env.link_lengths, q);
  for (const Obstacle& o : env.obstacles) {
    const Eigen::Vector2d c = o.center;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      best = std::min(best, segment_distance(pts[k], pts[k + 1], c) - o.radius);
    }
  }
  return best;
}

SimPolicy make_sim_policy(const LearnablePolicy& policy, std::vector<double> params) {
  if (static_cast<int>(params.size()) != policy.param_count()) {
    throw DimensionError("make_sim_policy: parameter count does not match the policy");
  }
  if (const auto* rmp = dynamic_cast<const RmpFusionPolicy*>(&policy)) {
    return [rmp, params = std::move(params)](const PolicyState& s) {
      PolicyOutput<double> out = evaluate_policy<double>(rmp->tree(), s, std::span<const double>(params));
      return PolicyEval{std::move(out.a), out.root.energy};
    };
  }
  return [&policy, params = std::move(params)](const PolicyState& s) {
    return PolicyEval{policy.act(s, std::span<const double>(params)), std::numeric_limits<double>::quiet_NaN()};
  };
}

std::string_view to_string(Integrator m) { return m == Integrator::kEuler ? "euler" : "rk4"; }

Integrator integrator_from_string(std::string_view name) {
  if (name == "euler") return Integrator::kEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw ConfigError("unknown integration method '" + std::string(name) + "' (use euler or rk4)");
}

StepResult integrate_step(const SimPolicy& policy, const Vector& q, const Vector& qd, const Vector& aux, double dt,
                          Integrator method) {
  if (q.size() != qd.size()) throw DimensionError("integrate_step: q and qd differ in size");
  const Vector a0 = policy(PolicyState{q, qd, aux}).a;
  return step_with(policy, q, qd, aux, dt, method, a0);
}

Trajectory rollout(const SimPolicy& policy, const Environment& env, const Vector& q0, const Vector& qd0,
                   const RolloutOptions& options) {
  if (!(options.dt > 0.0) || !(options.horizon >= 0.0)) throw ConfigError("rollout: dt and horizon must be positive");
  if (q0.size() != env.q_dim() || qd0.size() != env.q_dim()) {
    throw DimensionError("rollout: initial state does not match the environment");
  }
  const Vector aux = encode_aux(env);
  Trajectory traj;
  traj.dt = options.dt;
  const auto steps = static_cast<long>(std::floor(options.horizon / options.dt + 1e-9));
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
  Vector q = q0;
  Vector qd = qd0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    const PolicyEval eval = with_context("t=" + std::to_string(t), [&] {
      PolicyEval e = policy(PolicyState{q, qd, aux});
      if (!e.a.allFinite() || !q.allFinite() || !qd.allFinite()) throw NumericError("non-finite state or action");
      return e;
    });
    traj.samples.push_back(Sample{t, q, qd, eval.a, eval.lyapunov});
    if (!traj.events.collision && clearance(env, q) <= 0.0) {
      traj.events.collision = true;
      traj.events.collision_time = t;
      if (options.stop_at_collision) break;
    }
    if (!traj.events.goal_reached && (task_point(env, q) - env.goal).norm() <= options.goal_tolerance) {
      traj.events.goal_reached = true;
      traj.events.goal_time = t;
      if (options.stop_at_goal) break;
    }
    if (k >= steps) {
      traj.events.timed_out = !traj.events.goal_reached;
      break;
    }
    const StepResult next = with_context("t=" + std::to_string(t), [&] {
      return step_with(policy, q, qd, aux, options.dt, options.method, eval.a);
    });
    q = next.q;
    qd = next.qd;
  }
  return traj;
}

double max_lyapunov_increment(const Trajectory& traj) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    worst = std::max(worst, traj.samples[k].v - traj.samples[k - 1].v);
  }
  return worst;
}

SamplingConfig SamplingConfig::point2d(int obstacles) {
  SamplingConfig c;
  c.kind = EnvKind::kPoint2d;
  c.obstacles = obstacles;
  c.lower = Eigen::Vector2d(-5.0, -5.0);
  c.upper = Eigen::Vector2d(5.0, 5.0);
  c.goal_lower = Eigen::Vector2d(1.5, -1.5);
  c.goal_upper = Eigen::Vector2d(2.5, 1.5);
  c.obstacle_lower = Eigen::Vector2d(-1.0, -1.5);
  c.obstacle_upper = Eigen::Vector2d(1.0, 1.5);
  c.radius_min = 0.3;
  c.radius_max = 0.7;
  c.start_lower = Eigen::Vector2d(-3.0, -1.5);
  c.start_upper = Eigen::Vector2d(-2.0, 1.5);
  c.start_speed = 0.5;
  c.obstacle_separation = 1.0;
  c.goal_clearance = 1.0;
  return c;
}

SamplingConfig SamplingConfig::planar_arm() {
  SamplingConfig c;
  c.kind = EnvKind::kPlanarArm;
  c.obstacles = 1;
  c.link_lengths = {1.0, 0.8, 0.6};
  c.lower = Eigen::Vector2d(-3.0, -3.0);
  c.upper = Eigen::Vector2d(3.0, 3.0);
  c.goal_lower = Eigen::Vector2d(1.0, -0.2);
  c.goal_upper = Eigen::Vector2d(1.8, 0.6);
  c.goal_reach_min = 1.0;
  c.goal_reach_max = 2.1;
  c.obstacle_lower = Eigen::Vector2d(1.4, 0.9);
  c.obstacle_upper = Eigen::Vector2d(1.9, 1.3);
  c.radius_min = 0.15;
  c.radius_max = 0.25;
  c.goal_clearance = 0.3;
  c.start_lower = Eigen::Vector3d(0.9, 0.3, 0.3);
  c.start_upper = Eigen::Vector3d(1.2, 0.7, 0.7);
  c.start_speed = 0.1;
  c.start_clearance = 0.2;
  return c;
}

void SamplingConfig::validate() const {
  if (obstacles < 0) throw ConfigError("sampling: obstacle count must be non-negative");
  require_box(lower, upper, 2, "workspace");
  require_box(goal_lower, goal_upper, 2, "goal");
  require_box(obstacle_lower, obstacle_upper, 2, "obstacle");
  if (!(radius_min > 0.0) || radius_max < radius_min) throw ConfigError("sampling: bad obstacle radius range");
  const Eigen::Index qd = kind == EnvKind::kPlanarArm ? static_cast<Eigen::Index>(link_lengths.size()) : 2;
  if (kind == EnvKind::kPlanarArm && link_lengths.empty()) throw ConfigError("sampling: planar arm needs link lengths");
  require_box(start_lower, start_upper, qd, "start");
  if (start_speed < 0.0) throw ConfigError("sampling: start_speed must be non-negative");
}

Environment sample_env(const SamplingConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Environment env;
    env.kind = cfg.kind;
    env.lower = cfg.lower;
    env.upper = cfg.upper;
    env.link_lengths = cfg.link_lengths;
    env.goal = uniform_box(cfg.goal_lower, cfg.goal_upper, rng);
    if (cfg.kind == EnvKind::kPlanarArm) {
      const double reach = env.goal.norm();
      if (reach < cfg.goal_reach_min || reach > cfg.goal_reach_max) continue;
    }
    bool ok = true;
    for (int k = 0; k < cfg.obstacles && ok; ++k) {
      Obstacle o{uniform_box(cfg.obstacle_lower, cfg.obstacle_upper, rng), uniform(cfg.radius_min, cfg.radius_max, rng)};
      ok = (o.center - env.goal).norm() > o.radius + cfg.goal_clearance;
      for (const Obstacle& other : env.obstacles) {
        ok = ok && (o.center - other.center).norm() > o.radius + other.radius + cfg.obstacle_separation;
      }
      if (cfg.kind == EnvKind::kPlanarArm) ok = ok && o.center.norm() > o.radius + 0.3;
      env.obstacles.push_back(std::move(o));
    }
    if (ok) return env;
  }
  throw ConfigError("sample_env: no feasible environment after " + std::to_string(kMaxRejections) +
                    " attempts; check the sampling ranges");
}

StepResult sample_start(const Environment& env, const SamplingConfig& cfg, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const Vector q = uniform_box(cfg.start_lower, cfg.start_upper, rng);
    Vector qd(q.size());
    for (Eigen::Index i = 0; i < qd.size(); ++i) qd[i] = uniform(-cfg.start_speed, cfg.start_speed, rng);
    if (clearance(env, q) < cfg.start_clearance) continue;
    if ((task_point(env, q) - env.goal).norm() < 0.5) continue;
    return {q, qd};
  }
  throw ConfigError("sample_start: no feasible start state after " + std::to_string(kMaxRejections) + " attempts");
}

GenResult gen_dataset(const SimPolicy& expert, const SamplingConfig& cfg, const DatasetCounts& counts,
                      std::uint64_t seed, const RolloutOptions& options) {
  if (counts.envs < 0 || counts.traj_per_env < 0 || counts.points_per_traj < 1) {
    throw ConfigError("gen_dataset: counts must be non-negative with at least one point per trajectory");
  }
  GenResult out;
  const auto points = static_cast<std::size_t>(counts.points_per_traj);
  for (int e = 0; e < counts.envs; ++e) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    Environment env = sample_env(cfg, rng);
    const Vector aux = encode_aux(env);
    for (int j = 0; j < counts.traj_per_env; ++j) {
      const StepResult start = sample_start(env, cfg, rng);
      ++out.summary.rollouts;
      Trajectory traj;
      try {
        traj = rollout(expert, env, start.q, start.qd, options);
      } catch (const Error& err) {
        ++out.summary.skipped;
        spdlog::warn("gen_dataset: env {} trajectory {} skipped: {}", e, j, err.what());
        continue;
      }
      if (traj.events.collision) {
        ++out.summary.collided;
        ++out.summary.skipped;
        spdlog::warn("gen_dataset: env {} trajectory {} skipped: expert collided at t={:.2f}", e, j,
                     traj.events.collision_time);
        continue;
      }
      if (!traj.events.goal_reached) {
        ++out.summary.stalled;
        ++out.summary.skipped;
        spdlog::warn("gen_dataset: env {} trajectory {} skipped: expert did not reach the goal", e, j);
        continue;
      }
      ++out.summary.goal_reached;
      const std::size_t n = traj.samples.size();
      for (std::size_t k = 0; k < points; ++k) {
        const std::size_t idx =
            points == 1 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n - 1) /
                                                                    static_cast<double>(points - 1)));
        const Sample& s = traj.samples[idx];
        out.data.records.push_back(Record{e, e * counts.traj_per_env + j, s.t, s.q, s.qd, aux, s.a});
      }
    }
    out.summary.envs.push_back(std::move(env));
  }
  return out;
}

std::vector<const Record*> initial_records(const Dataset& data) {
  std::vector<const Record*> out;
  for (const Record& r : data.records) {
    if (r.t == 0.0) out.push_back(&r);
  }
  return out;
}

Metrics eval_metrics(const Trajectory& traj, const Environment& env) {
  Metrics m;
  if (traj.samples.empty()) return m;
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const Sample& a = traj.samples[k - 1];
    const Sample& b = traj.samples[k];
    m.conf_length += (b.q - a.q).norm();
    m.end_eff_length += (task_point(env, b.q) - task_point(env, a.q)).norm();
  }
  m.reached = traj.events.goal_reached;
  m.collided = traj.events.collision;
  m.time_to_goal = m.reached ? traj.events.goal_time : traj.duration();
  m.goal_distance = (task_point(env, traj.samples.back().q) - env.goal).norm();
  return m;
}

double online_loss(const SimPolicy& learner, const SimPolicy& expert, const Dataset& test, const Environment& shape,
                   const RolloutOptions& options, double interval) {
  if (!(interval > 0.0)) throw ConfigError("online_loss: interval must be positive");
  const auto starts = initial_records(test);
  if (starts.empty()) throw ConfigError("online_loss: test dataset has no initial states");
  const auto stride = std::max<long>(1, std::lround(interval / options.dt));
  double total = 0.0;
  long count = 0;
  for (const Record* r : starts) {
    const Environment env = decode_aux(r->aux, shape);
    const Trajectory traj = rollout(learner, env, r->q, r->qd, options);
    for (std::size_t k = 0; k < traj.samples.size(); k += static_cast<std::size_t>(stride)) {
      const Sample& s = traj.samples[k];
      const Vector target = expert(PolicyState{s.q, s.qd, r->aux}).a;
      total += loss_mse(s.a, target);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace rmpfusion
