#include "rmpfusion/gds.hpp"

#include <cmath>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be positive");
  }
}

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be non-negative");
  }
}

double gain_or(const std::map<std::string, double>& gains, const std::string& key, double fallback) {
  auto it = gains.find(key);
  return it == gains.end() ? fallback : it->second;
}

void check_known(const std::map<std::string, double>& gains,
                 std::initializer_list<const char*> known, const std::string& kind) {
  for (const auto& [key, value] : gains) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(kind + ": unknown gain '" + key + "'");
  }
}

GdsSpec barrier_leaf(const BarrierGains& g, const char* kind) {
  require_non_negative(g.scale, "scale");
  require_positive(g.length_scale, "length_scale");
  require_non_negative(g.damping, "damping");
  require_non_negative(g.barrier, "barrier");
  require_non_negative(g.base_metric, "base_metric");
  GdsSpec spec;
  spec.dim = 1;
  spec.kind = kind;
  spec.gains = {{"scale", g.scale},
                {"length_scale", g.length_scale},
                {"damping", g.damping},
                {"barrier", g.barrier},
                {"base_metric", g.base_metric}};
  const double ell = g.length_scale;
  spec.metric = [g, ell](const Vector& x, const Vector& xd) {
    const double w = std::exp(-x[0] / ell);
    const double inward = xd[0] < 0.0 ? -xd[0] : 0.0;
    const double gate = g.scale * inward * inward + g.base_metric;
    MetricEval out;
    out.g = Matrix::Constant(1, 1, w * gate + kMetricFloor);
    out.dx = {Matrix::Constant(1, 1, -w * gate / ell)};
    // d/d(xd) of relu(-xd)^2 is -2 relu(-xd).
    out.dxd = {Matrix::Constant(1, 1, -2.0 * w * g.scale * inward)};
    return out;
  };
  spec.damping = [g, ell](const Vector& x, const Vector&) {
    return Matrix::Constant(1, 1, g.damping * std::exp(-x[0] / ell));
  };
  spec.potential = [g, ell](const Vector& x) { return g.barrier * ell * std::exp(-x[0] / ell); };
  spec.potential_grad = [g, ell](const Vector& x) {
    return Vector::Constant(1, -g.barrier * std::exp(-x[0] / ell));
  };
  spec.potential_lower_bound = 0.0;
  return spec;
}

}  // namespace

Curvature gds_curvature(const GdsSpec& spec, const Vector& x, const Vector& xd) {
  if (x.size() != spec.dim || xd.size() != spec.dim) {
    throw DimensionError("gds_curvature: state dimension does not match spec.dim");
  }
  const MetricEval metric = spec.metric(x, xd);
  const auto n = static_cast<Eigen::Index>(spec.dim);
  Curvature c;
  c.xi_matrix = Matrix::Zero(n, n);
  c.xi = Vector::Zero(n);
  if (!metric.dxd.empty()) {
    // Column b of Xi is 0.5 * (dG/dxd_b) xd.
    for (Eigen::Index b = 0; b < n; ++b) {
      c.xi_matrix.col(b) = 0.5 * metric.dxd[static_cast<std::size_t>(b)] * xd;
    }
  }
  if (!metric.dx.empty()) {
    Matrix gdot = Matrix::Zero(n, n);
    Vector grad_energy(n);
    for (Eigen::Index b = 0; b < n; ++b) {
      const Matrix& d = metric.dx[static_cast<std::size_t>(b)];
      gdot += xd[b] * d;
      grad_energy[b] = xd.dot(d * xd);
    }
    c.xi = gdot * xd - 0.5 * grad_energy;
  }
  if (!c.xi_matrix.allFinite() || !c.xi.allFinite()) {
    throw NumericError("gds_curvature: non-finite metric partials in " + spec.kind);
  }
  return c;
}

LeafOutput gds_evaluate(const GdsSpec& spec, const Vector& x, const Vector& xd) {
  if (x.size() != spec.dim || xd.size() != spec.dim) {
    throw DimensionError("gds_evaluate: state dimension does not match spec.dim");
  }
  const MetricEval metric = spec.metric(x, xd);
  const Curvature curv = gds_curvature(spec, x, xd);
  LeafOutput out;
  out.g = metric.g;
  out.b = spec.damping(x, xd);
  out.phi = spec.potential(x);
  out.m = out.g + curv.xi_matrix;
  out.f = -spec.potential_grad(x) - out.b * xd - curv.xi;
  const double kinetic = 0.5 * xd.dot(out.g * xd);
  out.lagrangian = kinetic - out.phi;
  out.energy = kinetic + out.phi;
  if (!out.f.allFinite() || !out.m.allFinite() || !std::isfinite(out.phi)) {
    throw NumericError("gds_evaluate: non-finite output from " + spec.kind);
  }
  return out;
}

GdsSpec attractor_leaf(int dim, const AttractorGains& g) {
  if (dim < 1) throw ConfigError("attractor_leaf: dimension must be positive");
  require_positive(g.stiffness, "stiffness");
  require_non_negative(g.damping, "damping");
  require_positive(g.metric_scale, "metric_scale");
  require_positive(g.softness, "softness");
  GdsSpec spec;
  spec.dim = dim;
  spec.kind = "attractor";
  spec.gains = {{"stiffness", g.stiffness},
                {"damping", g.damping},
                {"metric_scale", g.metric_scale},
                {"softness", g.softness}};
  const Matrix metric = g.metric_scale * Matrix::Identity(dim, dim);
  const Matrix damping = g.damping * Matrix::Identity(dim, dim);
  spec.metric = [metric](const Vector&, const Vector&) { return MetricEval{metric, {}, {}}; };
  spec.damping = [damping](const Vector&, const Vector&) { return damping; };
  spec.potential = [g](const Vector& y) {
    const double r = y.norm();
    return g.stiffness * (r - std::log1p(g.softness * r) / g.softness);
  };
  spec.potential_grad = [g](const Vector& y) -> Vector {
    return (g.stiffness * g.softness / (1.0 + g.softness * y.norm())) * y;
  };
  spec.potential_lower_bound = 0.0;
  return spec;
}

GdsSpec obstacle_leaf(const BarrierGains& gains) { return barrier_leaf(gains, "obstacle"); }

GdsSpec jointlimit_leaf(const BarrierGains& gains) { return barrier_leaf(gains, "joint_limit"); }

GdsSpec damper_leaf(int dim, double b, double eps) {
  if (dim < 1) throw ConfigError("damper_leaf: dimension must be positive");
  require_positive(b, "damper b");
  require_positive(eps, "damper eps");
  GdsSpec spec;
  spec.dim = dim;
  spec.kind = "damper";
  spec.gains = {{"b", b}, {"eps", eps}};
  const Matrix metric = eps * Matrix::Identity(dim, dim);
  const Matrix damping = b * Matrix::Identity(dim, dim);
  spec.metric = [metric](const Vector&, const Vector&) { return MetricEval{metric, {}, {}}; };
  spec.damping = [damping](const Vector&, const Vector&) { return damping; };
  spec.potential = [](const Vector&) { return 0.0; };
  spec.potential_grad = [dim](const Vector&) -> Vector { return Vector::Zero(dim); };
  return spec;
}

GdsSpec identity_metric_leaf(int dim, double eps) {
  if (dim < 1) throw ConfigError("identity_metric_leaf: dimension must be positive");
  require_positive(eps, "identity metric eps");
  GdsSpec spec;
  spec.dim = dim;
  spec.kind = "identity_metric";
  spec.gains = {{"eps", eps}};
  const Matrix metric = eps * Matrix::Identity(dim, dim);
  spec.metric = [metric](const Vector&, const Vector&) { return MetricEval{metric, {}, {}}; };
  spec.damping = [dim](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(dim, dim); };
  spec.potential = [](const Vector&) { return 0.0; };
  spec.potential_grad = [dim](const Vector&) -> Vector { return Vector::Zero(dim); };
  return spec;
}

GdsSpec make_leaf(const std::string& kind, int dim, const std::map<std::string, double>& gains) {
  if (kind == "attractor") {
    check_known(gains, {"stiffness", "damping", "metric_scale", "softness"}, kind);
    AttractorGains g;
    g.stiffness = gain_or(gains, "stiffness", g.stiffness);
    g.damping = gain_or(gains, "damping", g.damping);
    g.metric_scale = gain_or(gains, "metric_scale", g.metric_scale);
    g.softness = gain_or(gains, "softness", g.softness);
    return attractor_leaf(dim, g);
  }
  if (kind == "obstacle" || kind == "joint_limit") {
    if (dim != 1) throw DimensionError(kind + " leaves live on a 1-D coordinate");
    check_known(gains, {"scale", "length_scale", "damping", "barrier", "base_metric"}, kind);
    BarrierGains g;
    g.scale = gain_or(gains, "scale", g.scale);
    g.length_scale = gain_or(gains, "length_scale", g.length_scale);
    g.damping = gain_or(gains, "damping", g.damping);
    g.barrier = gain_or(gains, "barrier", g.barrier);
    g.base_metric = gain_or(gains, "base_metric", g.base_metric);
    return kind == "obstacle" ? obstacle_leaf(g) : jointlimit_leaf(g);
  }
  if (kind == "damper") {
    check_known(gains, {"b", "eps"}, kind);
    return damper_leaf(dim, gain_or(gains, "b", 1.0), gain_or(gains, "eps", kMetricFloor));
  }
  if (kind == "identity_metric") {
    check_known(gains, {"eps"}, kind);
    return identity_metric_leaf(dim, gain_or(gains, "eps", 1e-2));
  }
  throw ConfigError("unknown leaf kind '" + kind + "'");
}

}  // namespace rmpfusion
