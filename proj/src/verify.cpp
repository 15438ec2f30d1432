#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include <spdlog/spdlog.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/experiment.hpp"
#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/oracles.hpp"
#include "rmpfusion/sim.hpp"

namespace rmpfusion {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Vector uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

WeightFn random_weight(std::mt19937_64& rng, const RandomTreeOptions& o, int parent_dim) {
  RandomWeights kind = o.weights;
  if (kind == RandomWeights::kMixed) kind = static_cast<RandomWeights>(uniform_int(rng, 1, 3));
  switch (kind) {
    case RandomWeights::kUnit:
      return WeightFn::constant(1.0);
    case RandomWeights::kConstant:
      return WeightFn::constant(uniform(rng, 0.2, 2.0));
    case RandomWeights::kAnalytic:
      return WeightFn::analytic(uniform_vec(rng, parent_dim, -1.0, 1.0), uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0),
                                uniform(rng, 0.5, 2.0));
    default:
      return WeightFn::mlp(parent_dim, o.aux_dim, o.hidden, Activation::kTanh);
  }
}

GdsSpec random_leaf(std::mt19937_64& rng, int dim) {
  const int pick = uniform_int(rng, 0, dim == 1 ? 4 : 2);
  switch (pick) {
    case 0: {
      AttractorGains g;
      g.stiffness = uniform(rng, 0.5, 3.0);
      g.damping = uniform(rng, 0.2, 2.0);
      g.metric_scale = uniform(rng, 0.5, 2.0);
      g.softness = uniform(rng, 1.0, 10.0);
      return attractor_leaf(dim, g);
    }
    case 1:
      return damper_leaf(dim, uniform(rng, 0.2, 2.0), uniform(rng, 0.1, 1.0));
    case 2:
      return identity_metric_leaf(dim, uniform(rng, 0.1, 1.0));
    default: {
      BarrierGains g;
      g.scale = uniform(rng, 0.0, 2.0);
      g.length_scale = uniform(rng, 2.0, 4.0);
      g.damping = uniform(rng, 0.0, 1.0);
      g.barrier = uniform(rng, 0.1, 2.0);
      g.base_metric = uniform(rng, 0.1, 1.0);
      return pick == 3 ? obstacle_leaf(g) : jointlimit_leaf(g);
    }
  }
}

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  Matrix a(rows, cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) a(r, c) = uniform(rng, -s, s);
  }
  return a;
}

TaskMap random_map(std::mt19937_64& rng, int in_dim, int max_dim) {
  switch (uniform_int(rng, 0, 6)) {
    case 0:
      return TaskMap::identity(in_dim);
    case 1: {
      const int out = uniform_int(rng, 1, max_dim);
      return TaskMap::affine(random_matrix(rng, out, in_dim), uniform_vec(rng, out, -1.0, 1.0));
    }
    case 2:
      return TaskMap::goal_offset(uniform_vec(rng, in_dim, -1.0, 1.0));
    case 3: {
      // Far from any reachable coordinate so the distance stays positive.
      Vector c = uniform_vec(rng, in_dim, -1.0, 1.0);
      c = (c.norm() > 1e-3 ? c.normalized() : Vector::Ones(in_dim).normalized()) * 10.0;
      return TaskMap::distance_to_point(c, 0.5);
    }
    case 4: {
      const int joint = uniform_int(rng, 0, in_dim - 1);
      return uniform_int(rng, 0, 1) ? TaskMap::joint_limit_lower(in_dim, joint, -6.0)
                                    : TaskMap::joint_limit_upper(in_dim, joint, 6.0);
    }
    case 5: {
      std::vector<double> lengths(static_cast<std::size_t>(in_dim));
      for (double& l : lengths) l = uniform(rng, 0.5, 1.0);
      return TaskMap::planar_fk(lengths, uniform_int(rng, 0, in_dim - 1), uniform(rng, 0.3, 1.0));
    }
    default: {
      const int out = uniform_int(rng, 1, max_dim);
      return compose(TaskMap::affine(random_matrix(rng, out, in_dim), uniform_vec(rng, out, -1.0, 1.0)),
                     TaskMap::goal_offset(uniform_vec(rng, in_dim, -1.0, 1.0)));
    }
  }
}

void grow(TreeSpec& t, int node, int depth, std::mt19937_64& rng, const RandomTreeOptions& o, int& counter) {
  const int parent_dim = t.node(node).dim;
  const int kids = uniform_int(rng, 1, o.max_children);
  for (int k = 0; k < kids; ++k) {
    const TaskMap map = random_map(rng, parent_dim, o.max_dim);
    const int child = t.add_child(node, "n" + std::to_string(counter++), map, random_weight(rng, o, parent_dim));
    const bool leaf = depth + 1 >= o.max_depth || uniform(rng, 0.0, 1.0) < 0.4;
    if (leaf) {
      t.set_leaf(child, random_leaf(rng, map.out_dim()));
    } else {
      grow(t, child, depth + 1, rng, o, counter);
    }
  }
}

ReferenceRmp reference_node(const TreeSpec& tree, int i, const Vector& x, const Vector& xd, const Vector& aux) {
  const TreeNode& n = tree.node(i);
  if (n.leaf) {
    const LeafOutput out = gds_evaluate(*n.leaf, x, xd);
    return {out.f, out.m, {}};
  }
  ReferenceRmp r{Vector::Zero(x.size()), Matrix::Zero(x.size(), x.size()), {}};
  for (int c : n.children) {
    const TaskMap map = bind_map(tree.node(c), aux);
    const Vector y = map_eval(map, x);
    const Matrix j = map_jacobian(map, x);
    const Vector curv = map_curvature(map, x, xd);
    const ReferenceRmp child = reference_node(tree, c, y, j * xd, aux);
    r.f += j.transpose() * (child.f - child.m * curv);
    r.m += j.transpose() * child.m * j;
  }
  return r;
}

double reference_energy(const TreeSpec& tree, int i, const Vector& x, const Vector& xd, const Vector& aux,
                        std::span<const double> params) {
  const TreeNode& n = tree.node(i);
  if (n.leaf) return gds_evaluate(*n.leaf, x, xd).energy;
  double v = 0.0;
  for (int c : n.children) {
    const TaskMap map = bind_map(tree.node(c), aux);
    const double w = weight_eval<double>(tree.node(c).weight, x, aux, params).value;
    v += w * reference_energy(tree, c, map_eval(map, x), map_jacobian(map, x) * xd, aux, params);
  }
  return v;
}

// Central difference refined by one Richardson step.
template <typename F>
auto richardson(F&& f, const Vector& x, int k, double h) {
  auto central = [&](double step) {
    Vector xp = x;
    Vector xm = x;
    xp[k] += step;
    xm[k] -= step;
    return ((f(xp) - f(xm)) / (2.0 * step)).eval();
  };
  return ((4.0 * central(0.5 * h) - central(h)) / 3.0).eval();
}

}  // namespace

TreeSpec random_tree(std::mt19937_64& rng, const RandomTreeOptions& o) {
  if (o.max_depth < 1 || o.max_dim < 1 || o.max_children < 1) throw ConfigError("random_tree: bad options");
  const int dim = uniform_int(rng, 1, o.max_dim);
  TreeSpec t("root", dim, o.aux_dim);
  t.name = "random";
  int counter = 0;
  grow(t, 0, 0, rng, o, counter);
  const int reg = t.add_child(0, "reg", TaskMap::identity(dim));
  t.set_leaf(reg, identity_metric_leaf(dim, 0.5));
  t.validate();
  return t;
}

PolicyState random_state(const TreeSpec& tree, std::mt19937_64& rng) {
  return PolicyState{uniform_vec(rng, tree.root_dim(), -1.0, 1.0), uniform_vec(rng, tree.root_dim(), -1.0, 1.0),
                     uniform_vec(rng, tree.aux_dim(), -1.0, 1.0)};
}

std::vector<double> random_params(const TreeSpec& tree, std::mt19937_64& rng, double noise) {
  RmpFusionPolicy policy(tree);
  std::vector<double> p = policy.initial_params(rng());
  std::normal_distribution<double> n(0.0, noise);
  for (double& v : p) v += n(rng);
  return p;
}

ReferenceRmp reference_rmpflow(const TreeSpec& tree, const PolicyState& s) {
  ReferenceRmp r = reference_node(tree, 0, s.q, s.qd, s.aux);
  r.a = r.m.completeOrthogonalDecomposition().solve(r.f);
  return r;
}

double reference_lyapunov(const TreeSpec& tree, const PolicyState& s, const std::vector<double>& params) {
  return reference_energy(tree, 0, s.q, s.qd, s.aux, params);
}

Vector ytree_closed_form(const TreeSpec& y, const PolicyState& s) {
  const int ia = y.find("a");
  const int id = y.find("d");
  if (y.size() != 3 || ia < 0 || id < 0 || !y.node(ia).leaf || !y.node(id).leaf ||
      y.node(ia).leaf->kind != "attractor" || y.node(id).leaf->kind != "obstacle" ||
      y.node(ia).map->kind() != MapKind::kGoalOffset || y.node(id).map->kind() != MapKind::kDistanceToPoint) {
    throw ConfigError("ytree_closed_form: expected root -> {a: goal_offset/attractor, d: distance/obstacle}");
  }
  const auto& ga = y.node(ia).leaf->gains;
  const auto& gd = y.node(id).leaf->gains;
  if (gd.at("scale") != 0.0) throw ConfigError("ytree_closed_form: obstacle metric must not depend on velocity");
  const int n = y.root_dim();
  const auto& pa = y.node(ia).map->params();
  const auto& pd = y.node(id).map->params();
  const Eigen::Map<const Vector> goal(pa.data(), n);
  const Eigen::Map<const Vector> center(pd.data(), n);
  const double radius = pd[static_cast<std::size_t>(n)];

  const double k = ga.at("stiffness");
  const double beta = ga.at("softness");
  const double ba = ga.at("damping");
  const double sa = ga.at("metric_scale");
  const double ell = gd.at("length_scale");
  const double bd = gd.at("damping");
  const double barrier = gd.at("barrier");
  const double base = gd.at("base_metric");

  auto weight = [](const WeightFn& w, const Vector& q) {
    if (w.kind() == WeightKind::kConstant) return w.constant_value();
    if (w.kind() != WeightKind::kAnalytic) throw ConfigError("ytree_closed_form: weights must be constant or analytic");
    const auto& c = w.coeffs();
    const Eigen::Map<const Vector> mu(c.data() + 3, q.size());
    return c[0] + c[1] * std::exp(-0.5 * (q - mu).squaredNorm() / (c[2] * c[2]));
  };
  const WeightFn& w1 = y.node(ia).weight;
  const WeightFn& w2 = y.node(id).weight;

  auto dist = [&](const Vector& q) { return (q - center).norm() - radius; };
  auto grad_d = [&](const Vector& q) -> Vector { return (q - center) / (q - center).norm(); };
  auto metric = [&](const Vector& q) -> Matrix {
    const Vector u = grad_d(q);
    const double g2 = base * std::exp(-dist(q) / ell) + kMetricFloor;
    return weight(w1, q) * sa * Matrix::Identity(n, n) + weight(w2, q) * g2 * u * u.transpose();
  };
  auto potential = [&](const Vector& q) {
    const double r = (q - goal).norm();
    const double phi1 = k * (r - std::log1p(beta * r) / beta);
    const double phi2 = barrier * ell * std::exp(-dist(q) / ell);
    Vector out(1);
    out[0] = weight(w1, q) * phi1 + weight(w2, q) * phi2;
    return out;
  };

  const Vector& q = s.q;
  const Vector& qd = s.qd;
  constexpr double h = 1e-3;
  Matrix gdot = Matrix::Zero(n, n);
  Vector half_grad(n);
  Vector grad_phi(n);
  for (int i = 0; i < n; ++i) {
    const Matrix dg = richardson(metric, q, i, h);
    gdot += qd[i] * dg;
    half_grad[i] = 0.5 * qd.dot(dg * qd);
    grad_phi[i] = richardson(potential, q, i, h)[0];
  }
  const Vector xi = gdot * qd - half_grad;
  const Vector u = grad_d(q);
  const Matrix b = weight(w1, q) * ba * Matrix::Identity(n, n) +
                   weight(w2, q) * bd * std::exp(-dist(q) / ell) * u * u.transpose();
  return metric(q).ldlt().solve(-grad_phi - b * qd - xi);
}

GradCheck check_gradients(const LearnablePolicy& policy, const Record& record, const std::vector<double>& params,
                          double h, double rel_tol, double abs_tol) {
  const std::span<const Record> batch(&record, 1);
  const GradResult g = grad_params(policy, batch, params);
  GradCheck out;
  std::vector<double> p = params;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = batch_loss(policy, batch, p);
    p[i] = keep - h;
    const double down = batch_loss(policy, batch, p);
    p[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double diff = std::abs(g.grad[i] - fd);
    ++out.components;
    const double scale = std::max(std::abs(g.grad[i]), std::abs(fd));
    if (diff <= rel_tol * scale || diff == 0.0) {
      ++out.within_rel;
    } else {
      out.worst_abs = std::max(out.worst_abs, diff);
      if (diff <= abs_tol) ++out.within_abs;
    }
  }
  return out;
}

namespace {

int cases_or(const VerifyOptions& o, int fallback) { return o.cases >= 0 ? o.cases : fallback; }

double max_abs(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

Json state_json(const PolicyState& s) {
  return Json{{"q", std::vector<double>(s.q.begin(), s.q.end())},
              {"qd", std::vector<double>(s.qd.begin(), s.qd.end())},
              {"aux", std::vector<double>(s.aux.begin(), s.aux.end())}};
}

void fail_once(SuiteResult& r, Json example) {
  ++r.failures;
  if (r.counterexample.is_null()) r.counterexample = std::move(example);
}

SuiteResult suite_reduction(const VerifyOptions& o) {
  SuiteResult r;
  r.tolerance = 1e-10;
  std::mt19937_64 rng(derive_seed(o.seed, 11));
  RandomTreeOptions opts;
  opts.weights = RandomWeights::kMixed;
  const int n = cases_or(o, 200);
  for (int c = 0; c < n; ++c) {
    const TreeSpec tree = reduce_to_rmpflow(random_tree(rng, opts));
    const PolicyState s = random_state(tree, rng);
    const ReferenceRmp ref = reference_rmpflow(tree, s);
    const PolicyOutput<double> out = evaluate_policy(tree, s, std::vector<double>{});
    const double err = std::max({max_abs(out.a, ref.a), max_abs(out.root.f, ref.f), max_abs(out.root.m, ref.m)});
    ++r.cases;
    r.worst = std::max(r.worst, err);
    if (!(err <= r.tolerance)) fail_once(r, Json{{"tree", tree_to_json(tree)}, {"state", state_json(s)}, {"error", err}});
  }
  r.detail = "unit-weight trees vs unweighted reference recursion (a, f, M max-abs)";
  return r;
}

struct StabilityCase {
  std::string fixture;
  int rollouts;
};

SuiteResult suite_stability(const VerifyOptions& o) {
  SuiteResult r;
  const double dt = o.dt > 0.0 ? o.dt : 1e-2;
  r.tolerance = 10.0 * dt * dt * dt + 1e-9;
  r.worst = -std::numeric_limits<double>::infinity();
  const int per = cases_or(o, 10);
  RolloutOptions ro;
  ro.dt = dt;
  ro.method = o.method;
  ro.stop_at_goal = false;
  ro.stop_at_collision = false;
  std::uint64_t stream = 100;
  for (const std::string& name : fixture_names()) {
    const FixturePair fx = make_fixture(name);
    const RmpFusionPolicy policy(fx.learner);
    const Environment shape = env_shape(fx.sampling);
    for (int k = 0; k < per; ++k) {
      std::mt19937_64 rng(derive_seed(o.seed, stream++));
      const std::vector<double> params = random_params(fx.learner, rng);
      const Environment env = sample_env(fx.sampling, rng);
      const StepResult start = sample_start(env, fx.sampling, rng);
      const Trajectory traj = rollout(make_sim_policy(policy, params), env, start.q, start.qd, ro);
      const double inc = max_lyapunov_increment(traj);
      ++r.cases;
      r.worst = std::max(r.worst, inc);
      if (!(inc <= r.tolerance)) {
        fail_once(r, Json{{"fixture", name},
                          {"environment", environment_to_json(env)},
                          {"q0", std::vector<double>(start.q.begin(), start.q.end())},
                          {"qd0", std::vector<double>(start.qd.begin(), start.qd.end())},
                          {"params", params},
                          {"increment", inc}});
      }
    }
  }
  if (o.inject_negative_weight) {
    TreeSpec bad = make_2d1level(Role::kExpert);
    bad.mutable_node(bad.find("d")).weight = WeightFn::constant(-0.5);
    bad.assign_param_slices();
    Environment env;
    env.goal = Eigen::Vector2d(2.0, 0.0);
    env.obstacles.push_back(Obstacle{Eigen::Vector2d(0.0, 0.3), 0.4});
    const PolicyState s{Eigen::Vector2d(-2.0, 0.0), Eigen::Vector2d(0.5, 0.0), encode_aux(env)};
    ++r.cases;
    try {
      evaluate_policy(bad, s, std::vector<double>{});
      fail_once(r, Json{{"tree", tree_to_json(bad)}, {"state", state_json(s)}, {"error", "negative weight accepted"}});
    } catch (const StabilityContractError& e) {
      fail_once(r, Json{{"tree", tree_to_json(bad)}, {"state", state_json(s)}, {"contract_violation", e.what()}});
    }
  }
  r.detail = "max V_r increment over rollouts of untrained learners on every fixture";
  return r;
}

SuiteResult suite_gradients(const VerifyOptions& o) {
  SuiteResult r;
  r.tolerance = 0.95;
  std::mt19937_64 rng(derive_seed(o.seed, 13));
  RandomTreeOptions opts;
  opts.weights = RandomWeights::kMlp;
  opts.hidden = {3};
  GradCheck total;
  const int n = cases_or(o, 50);
  for (int c = 0; c < n; ++c) {
    const TreeSpec tree = random_tree(rng, opts);
    const RmpFusionPolicy policy(tree);
    const std::vector<double> params = random_params(tree, rng);
    const PolicyState s = random_state(tree, rng);
    Record rec{0, 0, 0.0, s.q, s.qd, s.aux, uniform_vec(rng, tree.root_dim(), -1.0, 1.0)};
    const GradCheck g = check_gradients(policy, rec, params);
    ++r.cases;
    total.components += g.components;
    total.within_rel += g.within_rel;
    total.within_abs += g.within_abs;
    total.worst_abs = std::max(total.worst_abs, g.worst_abs);
    if (g.within_rel + g.within_abs != g.components) {
      fail_once(r, Json{{"tree", tree_to_json(tree)}, {"state", state_json(s)}, {"params", params},
                        {"worst_abs", g.worst_abs}});
    }
  }
  const double frac = total.components ? static_cast<double>(total.within_rel) / total.components : 1.0;
  r.worst = frac;
  if (frac < r.tolerance) ++r.failures;
  r.detail = std::to_string(total.within_rel) + "/" + std::to_string(total.components) +
             " components within 1e-4 relative, " + std::to_string(total.within_abs) +
             " more within 1e-3 absolute; worst outside band " + format_double(total.worst_abs);
  return r;
}

PolicyState fixture_state(const FixturePair& fx, std::mt19937_64& rng) {
  const Environment env = sample_env(fx.sampling, rng);
  const int n = env.q_dim();
  Vector q = fx.sampling.kind == EnvKind::kPlanarArm ? uniform_vec(rng, n, -2.0, 2.0) : uniform_vec(rng, n, -3.0, 3.0);
  for (int tries = 0; tries < 100 && clearance(env, q) <= 0.05; ++tries) q = uniform_vec(rng, n, -3.0, 3.0);
  return PolicyState{q, uniform_vec(rng, n, -1.0, 1.0), encode_aux(env)};
}

SuiteResult suite_decomposition(const VerifyOptions& o) {
  SuiteResult r;
  r.tolerance = 1e-10;
  const int n = cases_or(o, 100);
  std::uint64_t stream = 200;
  for (const std::string& name : fixture_names()) {
    const FixturePair fx = make_fixture(name);
    std::mt19937_64 rng(derive_seed(o.seed, stream++));
    const std::vector<double> params = random_params(fx.learner, rng);
    for (const TreeSpec* tree : {&fx.expert, &fx.learner}) {
      const TreeSpec split = decompose_two_step(*tree);
      const std::vector<double> p = tree == &fx.expert ? std::vector<double>{} : params;
      for (int c = 0; c < n; ++c) {
        const PolicyState s = fixture_state(fx, rng);
        const PolicyOutput<double> a = evaluate_policy(*tree, s, p);
        const PolicyOutput<double> b = evaluate_policy(split, s, p);
        const double scale = std::max(1.0, a.root.f.cwiseAbs().maxCoeff());
        const double err = std::max({max_abs(a.root.f, b.root.f), max_abs(a.root.m, b.root.m),
                                     max_abs(a.root.g, b.root.g), max_abs(a.root.b, b.root.b),
                                     std::abs(a.root.phi - b.root.phi), std::abs(a.root.energy - b.root.energy)}) /
                           scale;
        ++r.cases;
        r.worst = std::max(r.worst, err);
        if (!(err <= r.tolerance)) {
          fail_once(r, Json{{"fixture", name}, {"tree", tree_to_json(*tree)}, {"state", state_json(s)}, {"error", err}});
        }
      }
    }
  }
  // Y-tree against its closed-form resultant dynamics.
  const TreeSpec y = make_ytree();
  std::mt19937_64 rng(derive_seed(o.seed, 14));
  double worst_y = 0.0;
  for (int c = 0; c < n; ++c) {
    // States outside the obstacle disc, away from the singular center.
    PolicyState s{uniform_vec(rng, 2, -1.5, 1.5), uniform_vec(rng, 2, -1.0, 1.0), Vector()};
    while (map_eval(*y.node(y.find("d")).map, s.q)[0] < 0.0) s.q = uniform_vec(rng, 2, -1.5, 1.5);
    const Vector a = evaluate_policy(y, s, std::vector<double>{}).a;
    const double err = max_abs(a, ytree_closed_form(y, s));
    ++r.cases;
    worst_y = std::max(worst_y, err);
    if (!(err <= 1e-8)) fail_once(r, Json{{"tree", tree_to_json(y)}, {"state", state_json(s)}, {"error", err}});
  }
  r.detail = "two-step decomposition max relative deviation " + format_double(r.worst) +
             "; Y-tree closed form max-abs " + format_double(worst_y) + " (tolerance 1e-8)";
  return r;
}

SuiteResult suite_energy(const VerifyOptions& o) {
  SuiteResult r;
  r.tolerance = 1e-5;
  const double dt = o.dt > 0.0 ? o.dt : 1e-3;
  const int n = cases_or(o, 5);
  const TreeSpec tree = reduce_to_rmpflow(without_damping(make_ytree()));
  const RmpFusionPolicy policy(tree);
  const SimPolicy sp = make_sim_policy(policy, {});
  std::mt19937_64 rng(derive_seed(o.seed, 15));
  const auto steps = static_cast<long>(std::lround(1.0 / dt));
  for (int c = 0; c < n; ++c) {
    Vector q = uniform_vec(rng, 2, -1.5, 1.5);
    while (map_eval(*tree.node(tree.find("d")).map, q)[0] < 0.0) q = uniform_vec(rng, 2, -1.5, 1.5);
    Vector qd = uniform_vec(rng, 2, -1.0, 1.0);
    const PolicyState s0{q, qd, Vector()};
    const double v0 = sp(s0).lyapunov;
    for (long k = 0; k < steps; ++k) {
      const StepResult next = integrate_step(sp, q, qd, Vector(), dt, o.method);
      q = next.q;
      qd = next.qd;
    }
    const double drift = std::abs(sp(PolicyState{q, qd, Vector()}).lyapunov - v0);
    ++r.cases;
    r.worst = std::max(r.worst, drift);
    if (!(drift <= r.tolerance)) {
      fail_once(r, Json{{"tree", tree_to_json(tree)}, {"state", state_json(s0)}, {"drift", drift}, {"dt", dt}});
    }
  }
  r.detail = "|V_r(1 s) - V_r(0)| on the undamped unit-weight Y-tree";
  return r;
}

}  // namespace

std::vector<std::string> suite_names() { return {"reduction", "stability", "gradients", "decomposition", "energy"}; }

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  if (name == "reduction") {
    r = suite_reduction(options);
  } else if (name == "stability") {
    r = suite_stability(options);
  } else if (name == "gradients") {
    r = suite_gradients(options);
  } else if (name == "decomposition") {
    r = suite_decomposition(options);
  } else if (name == "energy") {
    r = suite_energy(options);
  } else {
    throw ConfigError("unknown suite '" + name + "' (expected reduction, stability, gradients, decomposition or energy)");
  }
  r.suite = name;
  r.passed = r.failures == 0;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Json suite_result_to_json(const SuiteResult& r) {
  Json j{{"schema", kSchemaVersion}, {"kind", "verify"},     {"suite", r.suite},        {"passed", r.passed},
         {"cases", r.cases},         {"failures", r.failures}, {"worst", r.worst},      {"tolerance", r.tolerance},
         {"seconds", r.seconds},     {"detail", r.detail}};
  if (!r.counterexample.is_null()) j["counterexample"] = r.counterexample;
  return j;
}

}  // namespace rmpfusion
