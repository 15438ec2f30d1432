#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rmpfusion/weights.hpp"

using namespace rmpfusion;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

WeightValue<double> eval(const WeightFn& w, const Vector& x, const Vector& aux, const std::vector<double>& p) {
  return weight_eval<double>(w, x, aux, std::span<const double>(p));
}

}  // namespace

TEST(WeightEval, Constant) {
  const auto r = eval(WeightFn::constant(2.0), v2(3, 4), Vector(), {});
  EXPECT_EQ(r.value, 2.0);
  EXPECT_EQ(r.grad_x, Vector::Zero(2));
}

TEST(WeightEval, ZeroMlpIsSoftplusOfZero) {
  WeightFn w = WeightFn::mlp(2, 1, {5});
  const std::vector<double> p(static_cast<std::size_t>(w.param_count()), 0.0);
  const auto r = eval(w, v2(0.3, -0.1), Vector::Ones(1), p);
  EXPECT_NEAR(r.value, std::log(2.0) + 1e-4, 1e-15);
  EXPECT_NEAR(r.grad_x.norm(), 0.0, 1e-15);
}

TEST(WeightEval, MlpGradientMatchesFiniteDifferences) {
  for (Activation act : {Activation::kTanh, Activation::kElu}) {
    WeightFn w = WeightFn::mlp(2, 3, {6, 4}, act);
    std::vector<double> p = mlp_init(w.arch(), 5);
    for (double& v : p) v *= 3.0;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const Vector x = v2(u(rng), u(rng));
      Vector aux(3);
      aux << u(rng), u(rng), u(rng);
      const auto r = eval(w, x, aux, p);
      const Vector fd = finite_diff_grad([&](const Vector& y) { return eval(w, y, aux, p).value; }, x, 1e-6);
      EXPECT_LE((r.grad_x - fd).cwiseAbs().maxCoeff(), 1e-5);
      EXPECT_GT(r.value, 0.0);
    }
  }
}

TEST(WeightEval, AnalyticBump) {
  const WeightFn w = WeightFn::analytic(v2(0, 0), 0.5, 1.0, 2.0);
  const auto r = eval(w, v2(1, 0), Vector(), {});
  EXPECT_NEAR(r.value, 0.5 + std::exp(-1.0 / 8.0), 1e-15);
  const Vector fd = finite_diff_grad([&](const Vector& y) { return eval(w, y, Vector(), {}).value; }, v2(1, 0), 1e-6);
  EXPECT_TRUE(r.grad_x.isApprox(fd, 1e-8));
}

TEST(WeightEval, Deterministic) {
  WeightFn w = WeightFn::mlp(2, 0, {4});
  const std::vector<double> p = mlp_init(w.arch(), 11);
  EXPECT_EQ(eval(w, v2(0.2, 0.1), Vector(), p).value, eval(w, v2(0.2, 0.1), Vector(), p).value);
}

TEST(Mlp, ParamCount) {
  EXPECT_EQ((MlpArch{4, {16}, 1}).param_count(), 97);
  EXPECT_EQ((MlpArch{10, {8}, 1}).param_count(), 97);
  EXPECT_EQ((MlpArch{3, {}, 1}).param_count(), 4);
}

TEST(Mlp, NoHiddenLayerIsAffine) {
  const MlpArch arch{2, {}, 1};
  const std::vector<double> p{2.0, -1.0, 0.5};
  const auto y = mlp_forward<double>(arch, p, v2(3, 4));
  EXPECT_NEAR(y[0], 2.0 * 3 - 4 + 0.5, 1e-15);
}

TEST(Mlp, InitIsSeeded) {
  const MlpArch arch{3, {8}, 1};
  EXPECT_EQ(mlp_init(arch, 1), mlp_init(arch, 1));
  EXPECT_NE(mlp_init(arch, 1), mlp_init(arch, 2));
}

TEST(Mlp, InvalidArchThrows) {
  EXPECT_THROW((MlpArch{0, {4}, 1}).validate(), ConfigError);
  EXPECT_THROW((MlpArch{2, {0}, 1}).validate(), ConfigError);
}

TEST(Activation, Names) {
  EXPECT_EQ(activation_from_string("elu"), Activation::kElu);
  EXPECT_EQ(to_string(Activation::kTanh), "tanh");
  EXPECT_THROW(activation_from_string("relu6"), ConfigError);
}
