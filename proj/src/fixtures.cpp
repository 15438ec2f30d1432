#include "rmpfusion/fixtures.hpp"

#include <algorithm>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

std::string_view to_string(Role r) { return r == Role::kExpert ? "expert" : "learner"; }

Role role_from_string(std::string_view name) {
  if (name == "expert") return Role::kExpert;
  if (name == "learner") return Role::kLearner;
  throw ConfigError("unknown role '" + std::string(name) + "'");
}

AttractorGains point_attractor_gains() {
  AttractorGains g;
  g.stiffness = 4.0;
  g.damping = 2.5;
  g.metric_scale = 1.0;
  g.softness = 10.0;
  return g;
}

BarrierGains point_obstacle_gains() {
  BarrierGains g;
  g.scale = 4.0;
  g.length_scale = 0.15;
  g.damping = 2.0;
  g.barrier = 30.0;
  g.base_metric = 0.5;
  return g;
}

namespace {

WeightFn edge_weight(Role role, double expert_value, int parent_dim, int aux_dim, const LearnerArch& arch,
                     const std::string& share = {}) {
  if (role == Role::kExpert) return WeightFn::constant(expert_value);
  WeightFn w = WeightFn::mlp(parent_dim, aux_dim, arch.hidden, arch.activation);
  if (!share.empty()) w.set_share_tag(share);
  return w;
}

AttractorGains arm_attractor_gains() {
  AttractorGains g;
  g.stiffness = 2.0;
  g.damping = 2.5;
  g.metric_scale = 1.0;
  g.softness = 10.0;
  return g;
}

BarrierGains arm_obstacle_gains() {
  BarrierGains g;
  g.scale = 4.0;
  g.length_scale = 0.08;
  g.damping = 2.0;
  g.barrier = 6.0;
  g.base_metric = 0.5;
  return g;
}

BarrierGains arm_jointlimit_gains() {
  BarrierGains g;
  g.scale = 2.0;
  g.length_scale = 0.1;
  g.damping = 1.0;
  g.barrier = 2.0;
  g.base_metric = 0.0;
  return g;
}

constexpr double kArmDamper = 0.5;
constexpr double kArmIdentityEps = 1e-2;

}  // namespace

TreeSpec make_2d1level(Role role, const LearnerArch& arch) {
  TreeSpec t("q", 2, 5);
  t.name = "2d1level";
  const int a = t.add_child(0, "a", TaskMap::goal_offset(Vector::Zero(2)),
                            edge_weight(role, 1.0, 2, 5, arch), {0, 1});
  t.set_leaf(a, attractor_leaf(2, point_attractor_gains()));
  const int d = t.add_child(0, "d", TaskMap::distance_to_point(Vector::Zero(2), 0.5),
                            edge_weight(role, 2.0, 2, 5, arch), {2, 3, 4});
  t.set_leaf(d, obstacle_leaf(point_obstacle_gains()));
  t.validate();
  return t;
}

TreeSpec make_2d2level(Role role, const LearnerArch& arch) {
  TreeSpec t("q", 2, 8);
  t.name = "2d2level";
  const int a = t.add_child(0, "a", TaskMap::goal_offset(Vector::Zero(2)),
                            edge_weight(role, 1.0, 2, 8, arch), {0, 1});
  t.set_leaf(a, attractor_leaf(2, point_attractor_gains()));
  const int o = t.add_child(0, "o", TaskMap::identity(2), edge_weight(role, 2.0, 2, 8, arch));
  const int d1 = t.add_child(o, "o1", TaskMap::distance_to_point(Vector::Zero(2), 0.5),
                             edge_weight(role, 1.5, 2, 8, arch), {2, 3, 4});
  t.set_leaf(d1, obstacle_leaf(point_obstacle_gains()));
  const int d2 = t.add_child(o, "o2", TaskMap::distance_to_point(Vector::Zero(2), 0.5),
                             edge_weight(role, 0.5, 2, 8, arch), {5, 6, 7});
  t.set_leaf(d2, obstacle_leaf(point_obstacle_gains()));
  t.validate();
  return t;
}

namespace {

struct ControlPoint {
  int link;
  double fraction;
};

const std::vector<ControlPoint>& arm_control_points() {
  static const std::vector<ControlPoint> points{{0, 0.5}, {0, 1.0}, {1, 0.5}, {1, 1.0}, {2, 0.5}, {2, 1.0}};
  return points;
}

}  // namespace

TreeSpec make_arm(Role role, const LearnerArch& arch, int obstacles) {
  if (obstacles < 0) throw ConfigError("make_arm: obstacle count must be non-negative");
  const int n = static_cast<int>(kArmLinks.size());
  const int aux = 2 + 3 * obstacles;
  TreeSpec t("q", n, aux);
  t.name = "arm";

  const int ee = t.add_child(0, "ee", TaskMap::planar_fk(kArmLinks, n - 1, 1.0),
                             edge_weight(role, 1.5, n, aux, arch));
  const int a = t.add_child(ee, "a", TaskMap::goal_offset(Vector::Zero(2)), WeightFn::constant(1.0), {0, 1});
  t.set_leaf(a, attractor_leaf(2, arm_attractor_gains()));

  for (int j = 0; j < n; ++j) {
    const int up = t.add_child(0, "ujl" + std::to_string(j), TaskMap::joint_limit_upper(n, j, kArmJointLimit));
    t.set_leaf(up, jointlimit_leaf(arm_jointlimit_gains()));
    const int lo = t.add_child(0, "ljl" + std::to_string(j), TaskMap::joint_limit_lower(n, j, -kArmJointLimit));
    t.set_leaf(lo, jointlimit_leaf(arm_jointlimit_gains()));
  }

  const auto& points = arm_control_points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string cp = "cp" + std::to_string(i);
    const int c = t.add_child(0, cp, TaskMap::planar_fk(kArmLinks, points[i].link, points[i].fraction),
                              edge_weight(role, 2.0, n, aux, arch));
    for (int k = 0; k < obstacles; ++k) {
      const int base = 2 + 3 * k;
      const int d = t.add_child(c, cp + "_o" + std::to_string(k), TaskMap::distance_to_point(Vector::Zero(2), 0.2),
                                WeightFn::constant(1.0), {base, base + 1, base + 2});
      t.set_leaf(d, obstacle_leaf(arm_obstacle_gains()));
    }
  }

  const int damp = t.add_child(0, "qd", TaskMap::identity(n));
  t.set_leaf(damp, damper_leaf(n, kArmDamper));
  const int qmi = t.add_child(0, "qmi", TaskMap::identity(n));
  t.set_leaf(qmi, identity_metric_leaf(n, kArmIdentityEps));
  t.validate();
  return t;
}

TreeSpec make_ytree() {
  TreeSpec t("q", 2, 0);
  t.name = "ytree";
  Vector goal(2);
  goal << 1.0, 0.5;
  Vector c1(2);
  c1 << 0.0, 0.0;
  const int a = t.add_child(0, "a", TaskMap::goal_offset(goal), WeightFn::analytic(c1, 0.5, 0.5, 1.5));
  AttractorGains ag;
  ag.stiffness = 1.5;
  ag.damping = 0.7;
  ag.metric_scale = 1.2;
  ag.softness = 3.0;
  t.set_leaf(a, attractor_leaf(2, ag));

  Vector center(2);
  center << -0.6, 0.9;
  Vector c2(2);
  c2 << 0.5, -0.5;
  const int d = t.add_child(0, "d", TaskMap::distance_to_point(center, 0.3), WeightFn::analytic(c2, 0.8, 1.0, 1.0));
  BarrierGains bg;
  bg.scale = 0.0;
  bg.length_scale = 0.5;
  bg.damping = 0.5;
  bg.barrier = 10.0;
  bg.base_metric = 2.0;
  t.set_leaf(d, obstacle_leaf(bg));
  t.validate();
  return t;
}

TreeSpec without_damping(const TreeSpec& tree) {
  TreeSpec out = tree;
  for (int i = 0; i < out.size(); ++i) {
    TreeNode& n = out.mutable_node(i);
    if (!n.leaf) continue;
    if (n.leaf->kind == "damper") {
      n.leaf = identity_metric_leaf(n.leaf->dim, n.leaf->gains.at("eps"));
      continue;
    }
    auto gains = n.leaf->gains;
    if (gains.count("damping") != 0) gains["damping"] = 0.0;
    n.leaf = make_leaf(n.leaf->kind, n.leaf->dim, gains);
  }
  return out;
}

FixturePair make_fixture(const std::string& name, const LearnerArch& arch) {
  if (name == "2d1level") {
    return {make_2d1level(Role::kExpert), make_2d1level(Role::kLearner, arch), SamplingConfig::point2d(1)};
  }
  if (name == "2d2level") {
    return {make_2d2level(Role::kExpert), make_2d2level(Role::kLearner, arch), SamplingConfig::point2d(2)};
  }
  if (name == "arm") {
    return {make_arm(Role::kExpert), make_arm(Role::kLearner, arch), SamplingConfig::planar_arm()};
  }
  throw ConfigError("unknown fixture '" + name + "' (expected 2d1level, 2d2level or arm)");
}

std::vector<std::string> fixture_names() { return {"2d1level", "2d2level", "arm"}; }

int unstructured_param_count(int q_dim, int aux_dim, const std::vector<int>& hidden) {
  MlpArch arch;
  arch.in_dim = 2 * q_dim + aux_dim;
  arch.hidden = hidden;
  arch.out_dim = q_dim;
  return arch.param_count();
}

}  // namespace rmpfusion
