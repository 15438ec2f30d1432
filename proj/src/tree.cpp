#include "rmpfusion/tree.hpp"

#include <spdlog/spdlog.h>

#include <map>
#include <type_traits>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

// Runs f, attaching the node name to any library error it throws.
template <typename F>
auto with_node_context(const std::string& node, F&& f) {
  return with_context("node '" + node + "'", std::forward<F>(f));
}

// J' A J for a constant Jacobian, skipping structural zeros of J.
template <typename T>
MatT<T> sandwich(const Matrix& j, const MatT<T>& a) {
  const auto m = j.rows();
  const auto n = j.cols();
  MatT<T> aj = MatT<T>::Zero(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index c = 0; c < n; ++c) {
        if (j(k, c) != 0.0) aj(r, c) += a(r, k) * j(k, c);
      }
    }
  }
  MatT<T> out = MatT<T>::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index r = 0; r < m; ++r) {
      if (j(r, p) == 0.0) continue;
      for (Eigen::Index c = 0; c < n; ++c) out(p, c) += j(r, p) * aj(r, c);
    }
  }
  return out;
}

// J' v for a constant Jacobian.
template <typename T>
VecT<T> pull_vector(const Matrix& j, const VecT<T>& v) {
  VecT<T> out = VecT<T>::Zero(j.cols());
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      if (j(r, c) != 0.0) out[c] += j(r, c) * v[r];
    }
  }
  return out;
}

template <typename T>
NodeOutput<T> cast_output(const NodeOutput<double>& o) {
  if constexpr (std::is_same_v<T, double>) {
    return o;
  } else {
    return NodeOutput<T>{o.f.cast<T>(),       o.m.cast<T>(), o.g.cast<T>(), o.b.cast<T>(),
                         T(o.phi),            T(o.lagrangian), T(o.energy)};
  }
}

struct Spectrum {
  double min = 0.0;
  double max_abs = 0.0;
};

Spectrum spectrum(const Matrix& m) {
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().cwiseAbs().maxCoeff()};
}

void require_psd_spectrum(const Spectrum& sp, double tol) {
  if (sp.min < -tol * std::max(1.0, sp.max_abs)) {
    throw StabilityContractError("resolve: inertia matrix is not positive semidefinite (min eigenvalue " +
                                 std::to_string(sp.min) + ")");
  }
}

// Cholesky solve of M a = f, recorded operation by operation.
template <typename T>
VecT<T> cholesky_solve(const MatT<T>& m, const VecT<T>& f) {
  using std::sqrt;
  using ad::sqrt;
  const auto n = m.rows();
  MatT<T> l = MatT<T>::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    T diag = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    l(j, j) = sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      T acc = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  VecT<T> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    T acc = f[i];
    for (Eigen::Index k = 0; k < i; ++k) acc -= l(i, k) * y[k];
    y[i] = acc / l(i, i);
  }
  VecT<T> a(n);
  for (Eigen::Index i = n; i-- > 0;) {
    T acc = y[i];
    for (Eigen::Index k = i + 1; k < n; ++k) acc -= l(k, i) * a[k];
    a[i] = acc / l(i, i);
  }
  return a;
}

Matrix values_of(const MatT<ad::Var>& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) out(i) = m(i).value();
  return out;
}

Vector values_of(const VecT<ad::Var>& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i].value();
  return out;
}

}  // namespace

TreeSpec::TreeSpec(std::string root_name, int root_dim, int aux_dim) : aux_dim_(aux_dim) {
  if (root_dim < 1) throw ConfigError("TreeSpec: root dimension must be positive");
  if (aux_dim < 0) throw ConfigError("TreeSpec: aux dimension must be non-negative");
  TreeNode root;
  root.name = std::move(root_name);
  root.dim = root_dim;
  nodes_.push_back(std::move(root));
}

int TreeSpec::add_child(int parent, std::string name, TaskMap map, WeightFn weight,
                        std::vector<int> aux_params) {
  if (parent < 0 || parent >= size()) throw ConfigError("add_child: unknown parent index");
  if (find(name) >= 0) throw ConfigError("add_child: duplicate node name '" + name + "'");
  const TreeNode& p = node(parent);
  if (p.leaf) throw ConfigError("add_child: node '" + p.name + "' is a leaf");
  if (map.in_dim() != p.dim) {
    throw DimensionError("add_child: map into '" + name + "' expects input dimension " +
                         std::to_string(map.in_dim()) + " but parent '" + p.name + "' has " +
                         std::to_string(p.dim));
  }
  if (!aux_params.empty() && aux_params.size() != map.params().size()) {
    throw ConfigError("add_child: aux binding of '" + name + "' must list every map parameter");
  }
  for (int k : aux_params) {
    if (k >= aux_dim_) throw ConfigError("add_child: aux index out of range for '" + name + "'");
  }
  if (weight.learnable() && (weight.parent_dim() != p.dim || weight.aux_dim() != aux_dim_)) {
    throw DimensionError("add_child: weight on edge into '" + name +
                         "' must take the parent coordinate and the full aux state");
  }
  if (weight.kind() == WeightKind::kAnalytic && weight.parent_dim() != p.dim) {
    throw DimensionError("add_child: analytic weight center must live in the parent space");
  }
  TreeNode child;
  child.name = std::move(name);
  child.dim = map.out_dim();
  child.parent = parent;
  child.map = std::move(map);
  child.aux_params = std::move(aux_params);
  child.weight = std::move(weight);
  nodes_.push_back(std::move(child));
  const int idx = size() - 1;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(idx);
  assign_param_slices();
  return idx;
}

void TreeSpec::set_leaf(int node_index, GdsSpec spec) {
  if (node_index < 0 || node_index >= size()) throw ConfigError("set_leaf: unknown node index");
  TreeNode& n = nodes_[static_cast<std::size_t>(node_index)];
  if (!n.children.empty()) throw ConfigError("set_leaf: node '" + n.name + "' has children");
  if (spec.dim != n.dim) {
    throw DimensionError("set_leaf: GDS dimension " + std::to_string(spec.dim) +
                         " does not match node '" + n.name + "' dimension " + std::to_string(n.dim));
  }
  n.leaf = std::move(spec);
}

int TreeSpec::find(const std::string& node_name) const {
  for (int i = 0; i < size(); ++i) {
    if (node(i).name == node_name) return i;
  }
  return -1;
}

void TreeSpec::assign_param_slices() {
  std::map<std::string, int> shared;
  int offset = 0;
  for (auto& n : nodes_) {
    if (!n.weight.learnable()) continue;
    const int length = n.weight.param_count();
    const std::string& tag = n.weight.share_tag();
    if (!tag.empty()) {
      auto it = shared.find(tag);
      if (it != shared.end()) {
        const TreeNode& first = nodes_[static_cast<std::size_t>(it->second)];
        if (first.weight.param_count() != length || first.weight.arch().hidden != n.weight.arch().hidden) {
          throw ConfigError("weight share tag '" + tag + "' joins weights of different shape");
        }
        n.weight.set_slice(first.weight.slice());
        continue;
      }
      shared.emplace(tag, static_cast<int>(&n - nodes_.data()));
    }
    n.weight.set_slice(ParamSlice{offset, length});
    offset += length;
  }
  param_count_ = offset;
}

void TreeSpec::validate() const {
  if (nodes_.empty()) throw ConfigError("tree has no root");
  for (int i = 0; i < size(); ++i) {
    const TreeNode& n = node(i);
    if (i == 0) {
      if (n.parent != -1 || n.map) throw ConfigError("root must not have a parent edge");
    } else {
      if (n.parent < 0 || n.parent >= i) throw ConfigError("node '" + n.name + "' has no valid parent");
      if (!n.map) throw ConfigError("node '" + n.name + "' has no task map");
      if (n.map->in_dim() != node(n.parent).dim || n.map->out_dim() != n.dim) {
        throw DimensionError("edge into '" + n.name + "' has inconsistent dimensions");
      }
    }
    if (n.children.empty() && !n.leaf) {
      throw ConfigError("leaf node '" + n.name + "' has no GDS");
    }
    if (!n.children.empty() && n.leaf) {
      throw ConfigError("internal node '" + n.name + "' must not carry a GDS");
    }
  }
}

TaskMap bind_map(const TreeNode& n, const Vector& aux) {
  if (n.aux_params.empty()) return *n.map;
  std::vector<double> params = n.map->params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const int a = n.aux_params[k];
    if (a >= 0) {
      if (a >= aux.size()) throw DimensionError("aux state too short for binding of '" + n.name + "'");
      params[k] = aux[a];
    }
  }
  return n.map->with_params(std::move(params));
}

std::vector<NodeState> pushforward(const TreeSpec& tree, const PolicyState& s) {
  if (s.q.size() != tree.root_dim() || s.qd.size() != tree.root_dim()) {
    throw DimensionError("pushforward: state dimension " + std::to_string(s.q.size()) +
                         " does not match root dimension " + std::to_string(tree.root_dim()));
  }
  if (s.aux.size() != tree.aux_dim()) {
    throw DimensionError("pushforward: aux dimension " + std::to_string(s.aux.size()) +
                         " does not match tree aux dimension " + std::to_string(tree.aux_dim()));
  }
  std::vector<NodeState> states(static_cast<std::size_t>(tree.size()));
  states[0].x = s.q;
  states[0].xd = s.qd;
  for (int i = 1; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    const NodeState& parent = states[static_cast<std::size_t>(n.parent)];
    NodeState& st = states[static_cast<std::size_t>(i)];
    with_node_context(n.name, [&] {
      MapDerivatives d = map_all(bind_map(n, s.aux), parent.x, parent.xd);
      st.x = std::move(d.y);
      st.xd = d.jacobian * parent.xd;
      st.jacobian = std::move(d.jacobian);
      st.curvature = std::move(d.curvature);
      return 0;
    });
  }
  return states;
}

NodeOutput<double> from_leaf(const LeafOutput& leaf) {
  return NodeOutput<double>{leaf.f, leaf.m, leaf.g, leaf.b, leaf.phi, leaf.lagrangian, leaf.energy};
}

template <typename T>
NodeOutput<T> pullback_star(const Vector& x, const Vector& xd, std::span<const ChildInput<T>> children) {
  const auto n = x.size();
  NodeOutput<T> out{VecT<T>::Zero(n), MatT<T>::Zero(n, n), MatT<T>::Zero(n, n), MatT<T>::Zero(n, n),
                    T(0.0),           T(0.0),             T(0.0)};
  for (const ChildInput<T>& c : children) {
    const Matrix& j = *c.jacobian;
    if (j.cols() != n || j.rows() != c.out->f.size() || c.curvature->size() != j.rows() ||
        c.grad_w.size() != n) {
      throw DimensionError("pullback_star: child shapes are inconsistent");
    }
    if (value_of(c.w) < 0.0) {
      throw StabilityContractError("pullback_star: negative edge weight " +
                                   std::to_string(value_of(c.w)) +
                                   " (stability requires positive weights)");
    }
    const NodeOutput<T>& o = *c.out;
    // J' (f_i - M_i Jdot xd)
    VecT<T> force = o.f;
    for (Eigen::Index r = 0; r < force.size(); ++r) {
      for (Eigen::Index k = 0; k < force.size(); ++k) {
        const double ck = (*c.curvature)[k];
        if (ck != 0.0) force[r] -= o.m(r, k) * ck;
      }
    }
    const VecT<T> pulled_f = pull_vector<T>(j, force);
    const MatT<T> pulled_m = sandwich<T>(j, o.m);
    const MatT<T> pulled_g = sandwich<T>(j, o.g);
    const MatT<T> pulled_b = sandwich<T>(j, o.b);

    // Correction term h_i.
    T xd_dot_grad = T(0.0);
    for (Eigen::Index k = 0; k < n; ++k) xd_dot_grad += c.grad_w[k] * xd[k];
    VecT<T> g_xd = VecT<T>::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (xd[k] != 0.0) g_xd[r] += pulled_g(r, k) * xd[k];
      }
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      out.f[r] += c.w * pulled_f[r] + o.lagrangian * c.grad_w[r] - xd_dot_grad * g_xd[r];
      for (Eigen::Index k = 0; k < n; ++k) {
        out.m(r, k) += c.w * pulled_m(r, k);
        out.g(r, k) += c.w * pulled_g(r, k);
        out.b(r, k) += c.w * pulled_b(r, k);
      }
    }
    out.phi += c.w * o.phi;
    out.lagrangian += c.w * o.lagrangian;
    out.energy += c.w * o.energy;
  }
  return out;
}

Vector resolve(const Vector& f, const Matrix& m, double tol) {
  require_square(m, "resolve");
  if (f.size() != m.rows()) throw DimensionError("resolve: force and inertia sizes differ");
  require_finite(m, "resolve");
  require_finite(f, "resolve");
  require_psd_spectrum(spectrum(m), 1e-9);
  return pseudo_inverse(0.5 * (m + m.transpose()), tol) * f;
}

template <typename T>
PolicyOutput<T> evaluate_policy(const TreeSpec& tree, const PolicyState& s, std::span<const T> params) {
  if (static_cast<int>(params.size()) != tree.param_count()) {
    throw DimensionError("evaluate_policy: expected " + std::to_string(tree.param_count()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  const std::vector<NodeState> states = pushforward(tree, s);
  std::vector<NodeOutput<T>> outs(static_cast<std::size_t>(tree.size()));
  std::vector<ChildInput<T>> inputs;
  for (int i = tree.size() - 1; i >= 0; --i) {
    const TreeNode& n = tree.node(i);
    const NodeState& st = states[static_cast<std::size_t>(i)];
    auto& slot = outs[static_cast<std::size_t>(i)];
    if (n.leaf) {
      slot = cast_output<T>(
          with_node_context(n.name, [&] { return from_leaf(gds_evaluate(*n.leaf, st.x, st.xd)); }));
      continue;
    }
    inputs.clear();
    for (int c : n.children) {
      const TreeNode& child = tree.node(c);
      const NodeState& cs = states[static_cast<std::size_t>(c)];
      WeightValue<T> wv = with_node_context(
          child.name, [&] { return weight_eval<T>(child.weight, st.x, s.aux, params); });
      inputs.push_back(ChildInput<T>{&outs[static_cast<std::size_t>(c)], &cs.jacobian, &cs.curvature,
                                     wv.value, std::move(wv.grad_x)});
    }
    slot = with_node_context(n.name, [&] {
      return pullback_star<T>(st.x, st.xd, std::span<const ChildInput<T>>(inputs));
    });
  }

  PolicyOutput<T> result;
  result.root = std::move(outs.front());
  const NodeOutput<T>& root = result.root;
  if constexpr (std::is_same_v<T, double>) {
    require_finite(root.m, "root inertia");
    require_finite(root.f, "root force");
    const Spectrum sp = spectrum(root.m);
    require_psd_spectrum(sp, 1e-9);
    result.root_min_eigenvalue = sp.min;
    result.a = pseudo_inverse(0.5 * (root.m + root.m.transpose()), kDefaultRankTol) * root.f;
  } else {
    const Matrix m = values_of(root.m);
    const Vector f = values_of(root.f);
    require_finite(m, "root inertia");
    require_finite(f, "root force");
    const Spectrum sp = spectrum(m);
    require_psd_spectrum(sp, 1e-9);
    result.root_min_eigenvalue = sp.min;
    if (sp.min > kRootDegeneracyTol) {
      result.a = cholesky_solve<T>(root.m, root.f);
    } else {
      result.a = (pseudo_inverse(0.5 * (m + m.transpose()), kDefaultRankTol) * f).template cast<T>();
    }
  }
  result.degenerate = result.root_min_eigenvalue < kRootDegeneracyTol;
  if (result.degenerate) {
    spdlog::warn("root inertia nearly singular (min eigenvalue {:.3e}); stability precondition M_r > 0 "
                 "cannot be verified",
                 result.root_min_eigenvalue);
  }
  return result;
}

PolicyOutput<double> evaluate_policy(const TreeSpec& tree, const PolicyState& s,
                                     const std::vector<double>& params) {
  return evaluate_policy<double>(tree, s, std::span<const double>(params));
}

double lyapunov_root(const TreeSpec& tree, const PolicyState& s, const std::vector<double>& params) {
  return evaluate_policy(tree, s, params).root.energy;
}

TreeSpec reduce_to_rmpflow(const TreeSpec& tree) {
  TreeSpec out = tree;
  for (int i = 1; i < out.size(); ++i) out.mutable_node(i).weight = WeightFn::constant(1.0);
  out.assign_param_slices();
  return out;
}

TreeSpec decompose_two_step(const TreeSpec& tree) {
  const TreeNode& root = tree.node(0);
  TreeSpec out(root.name, root.dim, tree.aux_dim());
  out.name = tree.name;
  if (root.leaf) out.set_leaf(0, *root.leaf);
  // Original index -> new index.
  std::vector<int> remap(static_cast<std::size_t>(tree.size()), -1);
  remap[0] = 0;
  for (int i = 1; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    const int parent = remap[static_cast<std::size_t>(n.parent)];
    const int parent_dim = tree.node(n.parent).dim;
    const int mid = out.add_child(parent, n.name + "~", TaskMap::identity(parent_dim), n.weight);
    const int child = out.add_child(mid, n.name, *n.map, WeightFn::constant(1.0), n.aux_params);
    if (n.leaf) out.set_leaf(child, *n.leaf);
    remap[static_cast<std::size_t>(i)] = child;
  }
  // Keep the original parameter layout so the same vector drives both trees.
  for (int i = 1; i < tree.size(); ++i) {
    const int mid = out.node(remap[static_cast<std::size_t>(i)]).parent;
    out.mutable_node(mid).weight.set_slice(tree.node(i).weight.slice());
  }
  return out;
}

template NodeOutput<double> pullback_star<double>(const Vector&, const Vector&,
                                                  std::span<const ChildInput<double>>);
template NodeOutput<ad::Var> pullback_star<ad::Var>(const Vector&, const Vector&,
                                                    std::span<const ChildInput<ad::Var>>);
template PolicyOutput<double> evaluate_policy<double>(const TreeSpec&, const PolicyState&,
                                                      std::span<const double>);
template PolicyOutput<ad::Var> evaluate_policy<ad::Var>(const TreeSpec&, const PolicyState&,
                                                        std::span<const ad::Var>);

}  // namespace rmpfusion
