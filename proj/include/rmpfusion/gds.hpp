#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rmpfusion/numerics.hpp"

namespace rmpfusion {

// Metric value with its partial derivatives: dx[i] = dG/dx_i, dxd[i] = dG/dxd_i.
// Empty partial lists mean "identically zero".
struct MetricEval {
  Matrix g;
  std::vector<Matrix> dx;
  std::vector<Matrix> dxd;
};

// A geometric dynamical system: metric G(x, xd), damping B(x, xd) and a
// lower-bounded potential Phi(x), each with the analytic derivatives the
// curvature terms need.
struct GdsSpec {
  int dim = 0;
  std::string kind;
  std::map<std::string, double> gains;

  std::function<MetricEval(const Vector&, const Vector&)> metric;
  std::function<Matrix(const Vector&, const Vector&)> damping;
  std::function<double(const Vector&)> potential;
  std::function<Vector(const Vector&)> potential_grad;
  double potential_lower_bound = 0.0;
};

// Natural-form RMP of a leaf plus the energy bookkeeping the tree carries.
struct LeafOutput {
  Vector f;
  Matrix m;  // G + Xi
  Matrix g;
  Matrix b;
  double phi = 0.0;
  double lagrangian = 0.0;  // 0.5 xd' G xd - phi
  double energy = 0.0;      // 0.5 xd' G xd + phi
};

struct Curvature {
  Matrix xi_matrix;  // Xi_G = 0.5 sum_i xd_i d(g_i)/d(xd)
  Vector xi;         // xi_G = Gdot_x xd - 0.5 grad_x(xd' G xd)
};

Curvature gds_curvature(const GdsSpec& spec, const Vector& x, const Vector& xd);

LeafOutput gds_evaluate(const GdsSpec& spec, const Vector& x, const Vector& xd);

// Floor added to metrics that would otherwise vanish.
inline constexpr double kMetricFloor = 1e-6;

struct AttractorGains {
  double stiffness = 1.0;
  double damping = 1.0;
  double metric_scale = 1.0;
  // Radius scale of the soft-norm potential; force saturates at `stiffness`.
  double softness = 10.0;
};

// Goal reaching on goal_offset coordinates y:
//   Phi(y) = k (|y| - log(1 + beta |y|) / beta),  G = metric_scale I,  B = damping I.
GdsSpec attractor_leaf(int dim, const AttractorGains& gains);

struct BarrierGains {
  double scale = 1.0;         // velocity-gated metric gain
  double length_scale = 0.1;  // decay length of every term
  double damping = 1.0;
  double barrier = 1.0;       // repulsive force at zero distance
  double base_metric = 0.0;   // position-only part of the metric
};

// Collision avoidance on a 1-D signed distance d, with w(d) = exp(-d / l):
//   G(d, dd) = w(d) (scale relu(-dd)^2 + base_metric) + eps
//   B(d)     = damping w(d)
//   Phi(d)   = barrier l w(d)
GdsSpec obstacle_leaf(const BarrierGains& gains);

// Same functional form as obstacle_leaf on a 1-D joint-limit coordinate.
GdsSpec jointlimit_leaf(const BarrierGains& gains);

// G = eps I, B = b I, Phi = 0.
GdsSpec damper_leaf(int dim, double b, double eps = kMetricFloor);

// G = eps I, B = 0, Phi = 0.
GdsSpec identity_metric_leaf(int dim, double eps);

// Rebuilds any of the constructors above from its kind name and gain map.
GdsSpec make_leaf(const std::string& kind, int dim, const std::map<std::string, double>& gains);

}  // namespace rmpfusion
