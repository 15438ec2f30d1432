#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/gds.hpp"

using namespace rmpfusion;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// 1-D system with G(x) = x^2, no damping and the given potential.
GdsSpec quadratic_metric(double k) {
  GdsSpec s;
  s.dim = 1;
  s.kind = "custom";
  s.metric = [](const Vector& x, const Vector&) {
    MetricEval m;
    m.g = Matrix::Constant(1, 1, x[0] * x[0]);
    m.dx = {Matrix::Constant(1, 1, 2 * x[0])};
    return m;
  };
  s.damping = [](const Vector&, const Vector&) { return Matrix::Zero(1, 1); };
  s.potential = [k](const Vector& x) { return 0.5 * k * x[0] * x[0]; };
  s.potential_grad = [k](const Vector& x) { return Vector(k * x); };
  return s;
}

// Constant metric, damping and spring.
GdsSpec spring(double g, double b, double k) {
  GdsSpec s;
  s.dim = 1;
  s.kind = "custom";
  s.metric = [g](const Vector&, const Vector&) { return MetricEval{Matrix::Constant(1, 1, g), {}, {}}; };
  s.damping = [b](const Vector&, const Vector&) { return Matrix::Constant(1, 1, b); };
  s.potential = [k](const Vector& x) { return 0.5 * k * x[0] * x[0]; };
  s.potential_grad = [k](const Vector& x) { return Vector(k * x); };
  return s;
}

}  // namespace

TEST(Curvature, ConstantMetricVanishes) {
  const Curvature c = gds_curvature(spring(2.0, 0.0, 1.0), v1(1.0), v1(3.0));
  EXPECT_EQ(c.xi_matrix, Matrix::Zero(1, 1));
  EXPECT_EQ(c.xi, Vector::Zero(1));
}

TEST(Curvature, QuadraticMetricScalarCase) {
  const Curvature c = gds_curvature(quadratic_metric(0.0), v1(2.0), v1(3.0));
  EXPECT_NEAR(c.xi_matrix(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(c.xi[0], 18.0, 1e-12);
}

TEST(Curvature, ZeroVelocityVanishes) {
  const GdsSpec s = obstacle_leaf({.scale = 3.0, .length_scale = 0.2, .damping = 1.0, .barrier = 1.0});
  const Curvature c = gds_curvature(s, v1(0.3), v1(0.0));
  EXPECT_EQ(c.xi_matrix, Matrix::Zero(1, 1));
  EXPECT_EQ(c.xi, Vector::Zero(1));
}

TEST(Evaluate, SpringAtRestAtOrigin) {
  const LeafOutput out = gds_evaluate(spring(1.0, 2.0, 3.0), v1(0.0), v1(0.0));
  EXPECT_EQ(out.f, Vector::Zero(1));
}

TEST(Evaluate, HarmonicOscillatorForce) {
  const LeafOutput out = gds_evaluate(spring(1.0, 0.0, 1.0), v1(2.0), v1(0.0));
  EXPECT_NEAR(out.f[0], -2.0, 1e-15);
  EXPECT_NEAR(out.m(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(out.energy, 2.0, 1e-15);
}

TEST(Evaluate, QuadraticMetricForce) {
  const LeafOutput out = gds_evaluate(quadratic_metric(0.0), v1(2.0), v1(3.0));
  EXPECT_NEAR(out.f[0], -18.0, 1e-12);
  EXPECT_NEAR(out.m(0, 0), 4.0, 1e-15);
  EXPECT_NEAR(out.energy, 0.5 * 9.0 * 4.0, 1e-12);
}

TEST(Attractor, EquilibriumAtGoal) {
  const LeafOutput out = gds_evaluate(attractor_leaf(2, {}), v2(0, 0), v2(0, 0));
  EXPECT_EQ(out.f, Vector::Zero(2));
}

TEST(Attractor, PullsTowardGoal) {
  const LeafOutput out = gds_evaluate(attractor_leaf(2, {}), v2(1, 0), v2(0, 0));
  EXPECT_LT(out.f[0], 0.0);
  EXPECT_NEAR(out.f[1], 0.0, 1e-15);
}

TEST(Attractor, ForceSaturatesAtStiffness) {
  const LeafOutput out = gds_evaluate(attractor_leaf(2, {.stiffness = 4.0}), v2(1e6, 0), v2(0, 0));
  EXPECT_NEAR(out.f.norm(), 4.0, 1e-4);
}

TEST(Attractor, PotentialGradientMatchesFiniteDifferences) {
  const GdsSpec s = attractor_leaf(2, {.stiffness = 2.0, .softness = 3.0});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Vector y = v2(n(rng), n(rng));
    EXPECT_TRUE(s.potential_grad(y).isApprox(finite_diff_grad(s.potential, y, 1e-6), 1e-5));
  }
}

TEST(Obstacle, DecaysFarAway) {
  const BarrierGains g{.scale = 2.0, .length_scale = 0.1, .damping = 1.0, .barrier = 1.0};
  for (double dd : {-1.0, -0.5, 0.0, 2.0}) {
    EXPECT_LE(gds_evaluate(obstacle_leaf(g), v1(1.0), v1(dd)).f.norm(), 1e-3 * g.scale);
  }
}

TEST(Obstacle, RecedingHasNoVelocityMetric) {
  const BarrierGains g{.scale = 5.0, .length_scale = 0.3, .damping = 1.0, .barrier = 1.0, .base_metric = 0.0};
  const LeafOutput out = gds_evaluate(obstacle_leaf(g), v1(0.2), v1(0.5));
  EXPECT_NEAR(out.g(0, 0), kMetricFloor, 1e-15);
}

TEST(Obstacle, CurvatureMatchesSymbolicForm) {
  const double s = 2.0, l = 0.4, base = 0.3;
  const BarrierGains g{.scale = s, .length_scale = l, .damping = 1.0, .barrier = 1.0, .base_metric = base};
  const double d = 0.5, dd = -1.0;
  const Curvature c = gds_curvature(obstacle_leaf(g), v1(d), v1(dd));
  // G = w (s dd^2 + base) + eps with w = exp(-d/l), for dd < 0.
  const double w = std::exp(-d / l);
  const double dg_dd = w * 2 * s * dd;
  const double dg_dx = -w / l * (s * dd * dd + base);
  EXPECT_NEAR(c.xi_matrix(0, 0), 0.5 * dd * dg_dd, 1e-12);
  EXPECT_NEAR(c.xi[0], dg_dx * dd * dd - 0.5 * dd * dd * dg_dx, 1e-12);
}

TEST(Damper, ForceIsMinusBxd) {
  const LeafOutput out = gds_evaluate(damper_leaf(2, 0.7), v2(3, -1), v2(1, 2));
  EXPECT_TRUE(out.f.isApprox(-0.7 * v2(1, 2), 1e-15));
}

TEST(IdentityMetric, NoForce) {
  const LeafOutput out = gds_evaluate(identity_metric_leaf(3, 0.25), Vector::Ones(3), Vector::Ones(3));
  EXPECT_EQ(out.f, Vector::Zero(3));
  EXPECT_TRUE(out.m.isApprox(0.25 * Matrix::Identity(3, 3)));
}

TEST(JointLimit, DecaysFarFromLimit) {
  const GdsSpec s = jointlimit_leaf({.scale = 1.0, .length_scale = 0.1, .damping = 1.0, .barrier = 1.0});
  EXPECT_LE(gds_evaluate(s, v1(1.5), v1(-2.0)).f.norm(), 1e-3);
}

TEST(MakeLeaf, RebuildsFromGains) {
  const GdsSpec a = attractor_leaf(2, {.stiffness = 3.0, .damping = 0.5});
  const GdsSpec b = make_leaf(a.kind, a.dim, a.gains);
  const LeafOutput oa = gds_evaluate(a, v2(0.4, -0.2), v2(0.1, 0.3));
  const LeafOutput ob = gds_evaluate(b, v2(0.4, -0.2), v2(0.1, 0.3));
  EXPECT_EQ(oa.f, ob.f);
  EXPECT_EQ(oa.m, ob.m);
}

TEST(MakeLeaf, RejectsBadGains) {
  EXPECT_THROW(make_leaf("damper", 2, {{"damping", -1.0}}), ConfigError);
  EXPECT_THROW(make_leaf("teleport", 2, {}), ConfigError);
}
