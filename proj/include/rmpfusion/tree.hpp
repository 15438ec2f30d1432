#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmpfusion/ad.hpp"
#include "rmpfusion/gds.hpp"
#include "rmpfusion/numerics.hpp"
#include "rmpfusion/taskmaps.hpp"
#include "rmpfusion/weights.hpp"

namespace rmpfusion {

// One node of a policy tree. Every non-root node owns the edge from its
// parent: the task map, the weight function and the aux bindings of the map.
struct TreeNode {
  std::string name;
  int dim = 0;
  int parent = -1;
  std::vector<int> children;

  std::optional<TaskMap> map;
  // Per map parameter: -1 keeps the literal value, k >= 0 reads aux[k].
  std::vector<int> aux_params;
  WeightFn weight = WeightFn::constant(1.0);

  std::optional<GdsSpec> leaf;
};

// A rooted tree of task spaces with a weight function on every edge and a
// GDS on every leaf. Nodes are stored parents-before-children.
class TreeSpec {
 public:
  TreeSpec() = default;
  TreeSpec(std::string root_name, int root_dim, int aux_dim);

  // Adds a child under `parent` and returns its index.
  int add_child(int parent, std::string name, TaskMap map, WeightFn weight = WeightFn::constant(1.0),
                std::vector<int> aux_params = {});
  void set_leaf(int node, GdsSpec spec);

  int find(const std::string& name) const;  // -1 when absent
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  TreeNode& mutable_node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int root_dim() const { return nodes_.empty() ? 0 : nodes_.front().dim; }
  int aux_dim() const { return aux_dim_; }
  int edge_count() const { return size() - 1; }

  // Total length of the flat parameter vector (shared slices counted once).
  int param_count() const { return param_count_; }

  // Throws ConfigError/DimensionError on a malformed tree.
  void validate() const;

  // Recomputes parameter slices (after weight functions were replaced).
  void assign_param_slices();

  std::string name;

 private:
  std::vector<TreeNode> nodes_;
  int aux_dim_ = 0;
  int param_count_ = 0;
};

struct PolicyState {
  Vector q;
  Vector qd;
  Vector aux;
};

// Forward-pass cache for one node.
struct NodeState {
  Vector x;
  Vector xd;
  Matrix jacobian;    // of the edge into this node (empty at the root)
  Vector curvature;   // Jdot xd of that edge
};

// Map with aux-bound parameters substituted.
TaskMap bind_map(const TreeNode& node, const Vector& aux);

// Root-to-leaf propagation of (x, xd).
std::vector<NodeState> pushforward(const TreeSpec& tree, const PolicyState& s);

template <typename T>
struct NodeOutput {
  VecT<T> f;
  MatT<T> m;
  MatT<T> g;
  MatT<T> b;
  T phi;
  T lagrangian;
  T energy;
};

NodeOutput<double> from_leaf(const LeafOutput& leaf);

template <typename T>
struct ChildInput {
  const NodeOutput<T>* out;
  const Matrix* jacobian;   // child dim x parent dim
  const Vector* curvature;  // Jdot xd
  T w;
  VecT<T> grad_w;
};

// Weighted combination of child RMPs, including the correction term
//   h_i = L_i grad_w_i - (xd' grad_w_i) J_i' G_i J_i xd.
// Throws StabilityContractError on a negative weight.
template <typename T>
NodeOutput<T> pullback_star(const Vector& x, const Vector& xd, std::span<const ChildInput<T>> children);

// a = M^+ f. Throws StabilityContractError when M is not PSD.
Vector resolve(const Vector& f, const Matrix& m, double tol = kDefaultRankTol);

// Minimum eigenvalue below which the root inertia is reported as degenerate.
inline constexpr double kRootDegeneracyTol = 1e-9;

template <typename T>
struct PolicyOutput {
  VecT<T> a;
  NodeOutput<T> root;
  double root_min_eigenvalue = 0.0;
  bool degenerate = false;
};

// Pushforward, leaf GDS evaluation, pullback* to the root and resolve.
// With T = ad::Var every weight-dependent quantity is recorded on the active
// tape; the root solve is then an on-tape Cholesky solve (full-rank case).
template <typename T>
PolicyOutput<T> evaluate_policy(const TreeSpec& tree, const PolicyState& s, std::span<const T> params);

PolicyOutput<double> evaluate_policy(const TreeSpec& tree, const PolicyState& s,
                                     const std::vector<double>& params);

double lyapunov_root(const TreeSpec& tree, const PolicyState& s, const std::vector<double>& params);

// Same topology with every weight replaced by the constant 1.
TreeSpec reduce_to_rmpflow(const TreeSpec& tree);

// Inserts an intermediate node on every edge: identity map carrying the
// original weight, then the original map with weight 1.
TreeSpec decompose_two_step(const TreeSpec& tree);

}  // namespace rmpfusion
