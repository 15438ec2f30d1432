#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rmpfusion/numerics.hpp"

namespace rmpfusion {

enum class MapKind {
  kIdentity,
  kAffine,
  kGoalOffset,
  kDistanceToPoint,
  kJointLimit,
  kPlanarFk,
  kComposition,
};

std::string_view to_string(MapKind kind);
MapKind map_kind_from_string(std::string_view name);

// A smooth map between coordinate spaces, placed on a tree edge.
//
// Parameter layout per family:
//   identity           []
//   affine             [A (row-major, out x in), b (out)]
//   goal_offset        [x_g (n)]                     y = x - x_g
//   distance_to_point  [c (n), r]                    y = |x - c| - r   (signed)
//   joint_limit        [joint, limit, sign]          y = sign * (x_joint - limit)
//                                                    sign = +1 lower, -1 upper
//   planar_fk          [l_1..l_n, link, fraction]    point on link `link` at
//                                                    `fraction` of its length
//   composition        []                            outer(inner(x))
class TaskMap {
 public:
  static TaskMap identity(int dim);
  static TaskMap affine(const Matrix& a, const Vector& b);
  static TaskMap goal_offset(const Vector& goal);
  static TaskMap distance_to_point(const Vector& center, double radius);
  static TaskMap joint_limit_lower(int dim, int joint, double limit);
  static TaskMap joint_limit_upper(int dim, int joint, double limit);
  static TaskMap planar_fk(const std::vector<double>& link_lengths, int link, double fraction);

  // Rebuilds a map of `kind` from its flat parameter list.
  static TaskMap from_params(MapKind kind, int in_dim, std::vector<double> params);

  MapKind kind() const { return kind_; }
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::vector<double>& params() const { return params_; }

  // Same family and dimensions with a different parameter list.
  TaskMap with_params(std::vector<double> params) const;

  const TaskMap& outer() const { return *outer_; }
  const TaskMap& inner() const { return *inner_; }

  friend TaskMap compose(const TaskMap& outer, const TaskMap& inner);

 private:
  TaskMap(MapKind kind, int in_dim, int out_dim, std::vector<double> params);
  void validate() const;

  MapKind kind_;
  int in_dim_;
  int out_dim_;
  std::vector<double> params_;
  std::shared_ptr<const TaskMap> outer_;
  std::shared_ptr<const TaskMap> inner_;
};

// Distance below which distance_to_point refuses to differentiate.
inline constexpr double kSingularityRadius = 1e-9;

Vector map_eval(const TaskMap& m, const Vector& x);
Matrix map_jacobian(const TaskMap& m, const Vector& x);
// Jdot(x, xd) * xd.
Vector map_curvature(const TaskMap& m, const Vector& x, const Vector& xd);

// Value, Jacobian and curvature in one call.
struct MapDerivatives {
  Vector y;
  Matrix jacobian;
  Vector curvature;
};
MapDerivatives map_all(const TaskMap& m, const Vector& x, const Vector& xd);

TaskMap compose(const TaskMap& outer, const TaskMap& inner);

}  // namespace rmpfusion
