#include <random>

#include <gtest/gtest.h>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/taskmaps.hpp"

using namespace rmpfusion;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector v1(double a) { return Vector::Constant(1, a); }

// Jdot xd by central differences of J along xd.
Vector fd_curvature(const TaskMap& m, const Vector& x, const Vector& xd) {
  const double h = 1e-6;
  return ((map_jacobian(m, x + h * xd) - map_jacobian(m, x - h * xd)) / (2 * h)) * xd;
}

Matrix fd_jacobian(const TaskMap& m, const Vector& x) {
  return finite_diff_jacobian([&](const Vector& v) { return map_eval(m, v); }, x, 1e-6);
}

}  // namespace

TEST(MapEval, Identity) { EXPECT_EQ(map_eval(TaskMap::identity(2), v2(1, 2)), v2(1, 2)); }

TEST(MapEval, GoalOffsetAtGoal) {
  EXPECT_EQ(map_eval(TaskMap::goal_offset(v2(3, 0)), v2(3, 0)), v2(0, 0));
}

TEST(MapEval, DistanceToPoint) {
  EXPECT_NEAR(map_eval(TaskMap::distance_to_point(v2(0, 0), 1.0), v2(3, 4))[0], 4.0, 1e-15);
}

TEST(MapEval, DistanceIsSignedInside) {
  EXPECT_NEAR(map_eval(TaskMap::distance_to_point(v2(0, 0), 1.0), v2(0.25, 0))[0], -0.75, 1e-15);
}

TEST(MapEval, JointLimits) {
  Vector q(3);
  q << 0.1, 0.5, -0.2;
  EXPECT_NEAR(map_eval(TaskMap::joint_limit_lower(3, 1, -1.0), q)[0], 1.5, 1e-15);
  EXPECT_NEAR(map_eval(TaskMap::joint_limit_upper(3, 1, 1.0), q)[0], 0.5, 1e-15);
}

TEST(MapEval, PlanarFkEndEffector) {
  const TaskMap fk = TaskMap::planar_fk({1.0, 0.5}, 1, 1.0);
  const Vector y = map_eval(fk, v2(M_PI / 2, -M_PI / 2));
  EXPECT_NEAR(y[0], 0.5, 1e-15);
  EXPECT_NEAR(y[1], 1.0, 1e-15);
}

TEST(MapJacobian, IdentityAndAffine) {
  EXPECT_EQ(map_jacobian(TaskMap::identity(3), Vector::Ones(3)), Matrix::Identity(3, 3));
  Matrix a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(map_jacobian(TaskMap::affine(a, v2(1, -1)), Vector::Random(3)), a);
}

TEST(MapJacobian, DistanceUnitVector) {
  const Matrix j = map_jacobian(TaskMap::distance_to_point(v2(0, 0), 1.0), v2(3, 4));
  EXPECT_NEAR(j(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(j(0, 1), 0.8, 1e-15);
}

TEST(MapJacobian, DistanceAtCenterIsSingular) {
  EXPECT_THROW(map_jacobian(TaskMap::distance_to_point(v2(1, 1), 0.5), v2(1, 1)), SingularityError);
}

TEST(MapCurvature, AffineIsZero) {
  Matrix a = Matrix::Random(2, 2);
  EXPECT_EQ(map_curvature(TaskMap::affine(a, v2(0, 0)), v2(1, 2), v2(3, 4)), Vector::Zero(2));
}

TEST(MapCurvature, DistanceCircularVelocity) {
  const TaskMap m = TaskMap::distance_to_point(v2(0, 0), 0.0);
  const Vector c = map_curvature(m, v2(1, 0), v2(0, 1));
  EXPECT_NEAR(c[0], 1.0, 1e-14);
  EXPECT_NEAR(c[0], fd_curvature(m, v2(1, 0), v2(0, 1))[0], 1e-8);
}

TEST(MapCurvature, OneLinkArm) {
  const TaskMap m = TaskMap::planar_fk({1.0}, 0, 1.0);
  const Vector c = map_curvature(m, v1(0.0), v1(1.0));
  EXPECT_NEAR(c[0], -1.0, 1e-15);
  EXPECT_NEAR(c[1], 0.0, 1e-15);
  EXPECT_TRUE(c.isApprox(fd_curvature(m, v1(0.0), v1(1.0)), 1e-8));
}

TEST(Compose, IdentityOuterBehavesLikeInner) {
  const TaskMap inner = TaskMap::distance_to_point(v2(0.5, 0), 0.2);
  const TaskMap c = compose(TaskMap::identity(1), inner);
  const Vector x = v2(1.3, -0.4);
  const Vector xd = v2(0.2, 0.9);
  EXPECT_TRUE(map_eval(c, x).isApprox(map_eval(inner, x)));
  EXPECT_TRUE(map_jacobian(c, x).isApprox(map_jacobian(inner, x)));
  EXPECT_TRUE(map_curvature(c, x, xd).isApprox(map_curvature(inner, x, xd)));
}

TEST(Compose, AffineOfAffine) {
  Matrix a(2, 2), c(2, 2);
  a << 1, 2, 0, 1;
  c << 3, 0, 1, -1;
  const TaskMap m = compose(TaskMap::affine(a, v2(1, 1)), TaskMap::affine(c, v2(0, 2)));
  const Vector x = v2(0.7, -1.1);
  EXPECT_TRUE(map_eval(m, x).isApprox(a * (c * x + v2(0, 2)) + v2(1, 1)));
  EXPECT_TRUE(map_jacobian(m, x).isApprox(a * c));
}

TEST(Compose, DistanceOfFkMatchesFiniteDifferences) {
  const TaskMap m = compose(TaskMap::distance_to_point(v2(1.5, 1.0), 0.2), TaskMap::planar_fk({1.0, 0.8, 0.6}, 2, 1.0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    Vector q(3), qd(3);
    q << u(rng), u(rng), u(rng);
    qd << u(rng), u(rng), u(rng);
    EXPECT_TRUE(map_jacobian(m, q).isApprox(fd_jacobian(m, q), 1e-6));
    EXPECT_NEAR(map_curvature(m, q, qd)[0], fd_curvature(m, q, qd)[0], 1e-5);
  }
}

TEST(Compose, DimensionMismatchThrows) {
  EXPECT_THROW(compose(TaskMap::identity(3), TaskMap::identity(2)), DimensionError);
}

TEST(MapAll, MatchesSeparateCalls) {
  const TaskMap m = TaskMap::planar_fk({1.0, 0.8}, 1, 0.5);
  const Vector x = v2(0.3, -0.6);
  const Vector xd = v2(1.0, 0.5);
  const MapDerivatives d = map_all(m, x, xd);
  EXPECT_TRUE(d.y.isApprox(map_eval(m, x)));
  EXPECT_TRUE(d.jacobian.isApprox(map_jacobian(m, x)));
  EXPECT_TRUE(d.curvature.isApprox(map_curvature(m, x, xd)));
}

TEST(TaskMapParams, RoundTripThroughFromParams) {
  const TaskMap m = TaskMap::planar_fk({1.0, 0.8, 0.6}, 1, 0.5);
  const TaskMap r = TaskMap::from_params(m.kind(), m.in_dim(), m.params());
  EXPECT_EQ(map_eval(r, Vector::Ones(3)), map_eval(m, Vector::Ones(3)));
  EXPECT_EQ(map_kind_from_string(to_string(MapKind::kJointLimit)), MapKind::kJointLimit);
  EXPECT_THROW(map_kind_from_string("warp"), ConfigError);
}
