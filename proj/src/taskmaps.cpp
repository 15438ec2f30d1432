#include "rmpfusion/taskmaps.hpp"

#include <cmath>
#include <string>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

struct KindName {
  MapKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {MapKind::kIdentity, "identity"},
    {MapKind::kAffine, "affine"},
    {MapKind::kGoalOffset, "goal_offset"},
    {MapKind::kDistanceToPoint, "distance_to_point"},
    {MapKind::kJointLimit, "joint_limit"},
    {MapKind::kPlanarFk, "planar_fk"},
    {MapKind::kComposition, "composition"},
};

void require_dim(const TaskMap& m, const Vector& x, std::string_view what) {
  if (x.size() != m.in_dim()) {
    throw DimensionError(std::string(what) + ": " + std::string(to_string(m.kind())) +
                         " expects input of dimension " + std::to_string(m.in_dim()) + ", got " +
                         std::to_string(x.size()));
  }
}

}  // namespace

std::string_view to_string(MapKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

MapKind map_kind_from_string(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  throw ConfigError("unknown task map kind '" + std::string(name) + "'");
}

TaskMap::TaskMap(MapKind kind, int in_dim, int out_dim, std::vector<double> params)
    : kind_(kind), in_dim_(in_dim), out_dim_(out_dim), params_(std::move(params)) {
  validate();
}

void TaskMap::validate() const {
  if (in_dim_ < 1 || out_dim_ < 1) throw DimensionError("task map dimensions must be positive");
  for (double p : params_) {
    if (!std::isfinite(p)) throw NumericError("task map parameter is not finite");
  }
  const auto n = static_cast<std::size_t>(in_dim_);
  const auto need = [&](std::size_t count) {
    if (params_.size() != count) {
      throw ConfigError(std::string(to_string(kind_)) + ": expected " + std::to_string(count) +
                        " parameters, got " + std::to_string(params_.size()));
    }
  };
  switch (kind_) {
    case MapKind::kIdentity:
      need(0);
      if (out_dim_ != in_dim_) throw DimensionError("identity map must preserve dimension");
      break;
    case MapKind::kAffine:
      need(static_cast<std::size_t>(out_dim_) * n + static_cast<std::size_t>(out_dim_));
      break;
    case MapKind::kGoalOffset:
      need(n);
      if (out_dim_ != in_dim_) throw DimensionError("goal_offset must preserve dimension");
      break;
    case MapKind::kDistanceToPoint:
      need(n + 1);
      if (out_dim_ != 1) throw DimensionError("distance_to_point is scalar");
      break;
    case MapKind::kJointLimit: {
      need(3);
      const double joint = params_[0];
      if (joint < 0 || joint >= in_dim_ || joint != std::floor(joint)) {
        throw ConfigError("joint_limit: joint index out of range");
      }
      if (params_[2] != 1.0 && params_[2] != -1.0) {
        throw ConfigError("joint_limit: sign must be +1 (lower) or -1 (upper)");
      }
      if (out_dim_ != 1) throw DimensionError("joint_limit is scalar");
      break;
    }
    case MapKind::kPlanarFk: {
      need(n + 2);
      const double link = params_[n];
      if (link < 0 || link >= in_dim_ || link != std::floor(link)) {
        throw ConfigError("planar_fk: link index out of range");
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (params_[i] <= 0.0) throw ConfigError("planar_fk: link lengths must be positive");
      }
      if (params_[n + 1] < 0.0) throw ConfigError("planar_fk: fraction must be non-negative");
      if (out_dim_ != 2) throw DimensionError("planar_fk outputs a planar point");
      break;
    }
    case MapKind::kComposition:
      need(0);
      break;
  }
}

TaskMap TaskMap::identity(int dim) { return TaskMap(MapKind::kIdentity, dim, dim, {}); }

TaskMap TaskMap::affine(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw DimensionError("affine: A rows must match b length");
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(a.size() + b.size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) p.push_back(a(r, c));
  }
  for (Eigen::Index r = 0; r < b.size(); ++r) p.push_back(b[r]);
  return TaskMap(MapKind::kAffine, static_cast<int>(a.cols()), static_cast<int>(a.rows()),
                 std::move(p));
}

TaskMap TaskMap::goal_offset(const Vector& goal) {
  return TaskMap(MapKind::kGoalOffset, static_cast<int>(goal.size()),
                 static_cast<int>(goal.size()), std::vector<double>(goal.begin(), goal.end()));
}

TaskMap TaskMap::distance_to_point(const Vector& center, double radius) {
  std::vector<double> p(center.begin(), center.end());
  p.push_back(radius);
  return TaskMap(MapKind::kDistanceToPoint, static_cast<int>(center.size()), 1, std::move(p));
}

TaskMap TaskMap::joint_limit_lower(int dim, int joint, double limit) {
  return TaskMap(MapKind::kJointLimit, dim, 1, {static_cast<double>(joint), limit, 1.0});
}

TaskMap TaskMap::joint_limit_upper(int dim, int joint, double limit) {
  return TaskMap(MapKind::kJointLimit, dim, 1, {static_cast<double>(joint), limit, -1.0});
}

TaskMap TaskMap::planar_fk(const std::vector<double>& link_lengths, int link, double fraction) {
  std::vector<double> p = link_lengths;
  p.push_back(static_cast<double>(link));
  p.push_back(fraction);
  return TaskMap(MapKind::kPlanarFk, static_cast<int>(link_lengths.size()), 2, std::move(p));
}

TaskMap TaskMap::from_params(MapKind kind, int in_dim, std::vector<double> params) {
  int out_dim = in_dim;
  switch (kind) {
    case MapKind::kAffine: {
      // params = out*in + out
      const auto total = static_cast<int>(params.size());
      if (total % (in_dim + 1) != 0) throw ConfigError("affine: parameter count mismatch");
      out_dim = total / (in_dim + 1);
      break;
    }
    case MapKind::kDistanceToPoint:
    case MapKind::kJointLimit:
      out_dim = 1;
      break;
    case MapKind::kPlanarFk:
      out_dim = 2;
      break;
    case MapKind::kComposition:
      throw ConfigError("composition maps are built with compose(), not from parameters");
    default:
      break;
  }
  return TaskMap(kind, in_dim, out_dim, std::move(params));
}

TaskMap TaskMap::with_params(std::vector<double> params) const {
  if (kind_ == MapKind::kComposition) {
    throw ConfigError("with_params: composition maps carry no parameters");
  }
  return TaskMap(kind_, in_dim_, out_dim_, std::move(params));
}

TaskMap compose(const TaskMap& outer, const TaskMap& inner) {
  if (inner.out_dim() != outer.in_dim()) {
    throw DimensionError("compose: inner output dimension " + std::to_string(inner.out_dim()) +
                         " does not match outer input dimension " +
                         std::to_string(outer.in_dim()));
  }
  TaskMap m(MapKind::kComposition, inner.in_dim(), outer.out_dim(), {});
  m.outer_ = std::make_shared<const TaskMap>(outer);
  m.inner_ = std::make_shared<const TaskMap>(inner);
  return m;
}

namespace {

// Cumulative joint angles and rates up to and including `link`.
void planar_angles(const TaskMap& m, const Vector& q, const Vector* qd, std::vector<double>& phi,
                   std::vector<double>& phid, std::vector<double>& reach) {
  const auto& p = m.params();
  const int n = m.in_dim();
  const int link = static_cast<int>(p[static_cast<std::size_t>(n)]);
  const double fraction = p[static_cast<std::size_t>(n) + 1];
  phi.assign(static_cast<std::size_t>(link) + 1, 0.0);
  phid.assign(static_cast<std::size_t>(link) + 1, 0.0);
  reach.assign(static_cast<std::size_t>(link) + 1, 0.0);
  double angle = 0.0;
  double rate = 0.0;
  for (int k = 0; k <= link; ++k) {
    angle += q[k];
    if (qd != nullptr) rate += (*qd)[k];
    phi[static_cast<std::size_t>(k)] = angle;
    phid[static_cast<std::size_t>(k)] = rate;
    reach[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)] * (k == link ? fraction : 1.0);
  }
}

}  // namespace

MapDerivatives map_all(const TaskMap& m, const Vector& x, const Vector& xd) {
  require_dim(m, x, "map_all");
  if (xd.size() != m.in_dim()) throw DimensionError("map_all: velocity dimension mismatch");
  const auto& p = m.params();
  const int n = m.in_dim();
  MapDerivatives out;
  switch (m.kind()) {
    case MapKind::kIdentity:
      out.y = x;
      out.jacobian = Matrix::Identity(n, n);
      out.curvature = Vector::Zero(n);
      break;
    case MapKind::kAffine: {
      const int rows = m.out_dim();
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
          p.data(), rows, n);
      Eigen::Map<const Vector> b(p.data() + static_cast<std::ptrdiff_t>(rows) * n, rows);
      out.jacobian = a;
      out.y = a * x + b;
      out.curvature = Vector::Zero(rows);
      break;
    }
    case MapKind::kGoalOffset: {
      Eigen::Map<const Vector> goal(p.data(), n);
      out.y = x - goal;
      out.jacobian = Matrix::Identity(n, n);
      out.curvature = Vector::Zero(n);
      break;
    }
    case MapKind::kDistanceToPoint: {
      Eigen::Map<const Vector> center(p.data(), n);
      const double radius = p[static_cast<std::size_t>(n)];
      const Vector diff = x - center;
      const double rho = diff.norm();
      if (rho < kSingularityRadius) {
        throw SingularityError("distance_to_point: gradient undefined at the center");
      }
      const Vector u = diff / rho;
      const double radial = u.dot(xd);
      out.y = Vector::Constant(1, rho - radius);
      out.jacobian = u.transpose();
      out.curvature = Vector::Constant(1, (xd.squaredNorm() - radial * radial) / rho);
      break;
    }
    case MapKind::kJointLimit: {
      const auto joint = static_cast<Eigen::Index>(p[0]);
      const double sign = p[2];
      out.y = Vector::Constant(1, sign * (x[joint] - p[1]));
      out.jacobian = Matrix::Zero(1, n);
      out.jacobian(0, joint) = sign;
      out.curvature = Vector::Zero(1);
      break;
    }
    case MapKind::kPlanarFk: {
      std::vector<double> phi, phid, reach;
      planar_angles(m, x, &xd, phi, phid, reach);
      out.y = Vector::Zero(2);
      out.jacobian = Matrix::Zero(2, n);
      out.curvature = Vector::Zero(2);
      for (std::size_t k = 0; k < phi.size(); ++k) {
        const double c = std::cos(phi[k]);
        const double s = std::sin(phi[k]);
        out.y[0] += reach[k] * c;
        out.y[1] += reach[k] * s;
        for (std::size_t j = 0; j <= k; ++j) {
          out.jacobian(0, static_cast<Eigen::Index>(j)) -= reach[k] * s;
          out.jacobian(1, static_cast<Eigen::Index>(j)) += reach[k] * c;
        }
        out.curvature[0] -= reach[k] * c * phid[k] * phid[k];
        out.curvature[1] -= reach[k] * s * phid[k] * phid[k];
      }
      break;
    }
    case MapKind::kComposition: {
      const MapDerivatives in = map_all(m.inner(), x, xd);
      const Vector zd = in.jacobian * xd;
      const MapDerivatives outer = map_all(m.outer(), in.y, zd);
      out.y = outer.y;
      out.jacobian = outer.jacobian * in.jacobian;
      out.curvature = outer.jacobian * in.curvature + outer.curvature;
      break;
    }
  }
  return out;
}

Vector map_eval(const TaskMap& m, const Vector& x) {
  require_dim(m, x, "map_eval");
  const auto& p = m.params();
  const int n = m.in_dim();
  switch (m.kind()) {
    case MapKind::kDistanceToPoint: {
      // Evaluation (unlike differentiation) is defined at the center.
      Eigen::Map<const Vector> center(p.data(), n);
      return Vector::Constant(1, (x - center).norm() - p[static_cast<std::size_t>(n)]);
    }
    case MapKind::kComposition:
      return map_eval(m.outer(), map_eval(m.inner(), x));
    default:
      return map_all(m, x, Vector::Zero(n)).y;
  }
}

Matrix map_jacobian(const TaskMap& m, const Vector& x) {
  require_dim(m, x, "map_jacobian");
  return map_all(m, x, Vector::Zero(m.in_dim())).jacobian;
}

Vector map_curvature(const TaskMap& m, const Vector& x, const Vector& xd) {
  return map_all(m, x, xd).curvature;
}

}  // namespace rmpfusion
