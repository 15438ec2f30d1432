#include "rmpfusion/learn.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

template <typename T>
VecT<T> network_input(const PolicyState& s) {
  VecT<T> in(s.q.size() + s.qd.size() + s.aux.size());
  Eigen::Index k = 0;
  for (double v : s.q) in[k++] = T(v);
  for (double v : s.qd) in[k++] = T(v);
  for (double v : s.aux) in[k++] = T(v);
  return in;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void Dataset::validate() const {
  if (records.empty()) return;
  const Record& first = records.front();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.q.size() != first.q.size() || r.qd.size() != first.qd.size() ||
        r.aux.size() != first.aux.size() || r.a.size() != first.a.size()) {
      throw DimensionError("dataset record " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (!r.a.allFinite()) throw NumericError("dataset record " + std::to_string(i) + " has a non-finite action");
  }
}

double loss_mse(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size()) {
    throw DimensionError("loss_mse: prediction has " + std::to_string(pred.size()) + " entries, target " +
                         std::to_string(target.size()));
  }
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

RmpFusionPolicy::RmpFusionPolicy(TreeSpec tree) : tree_(std::move(tree)) { tree_.validate(); }

std::vector<double> RmpFusionPolicy::initial_params(std::uint64_t seed) const {
  std::vector<double> params(static_cast<std::size_t>(tree_.param_count()), 0.0);
  std::vector<bool> filled(params.size(), false);
  for (int i = 1; i < tree_.size(); ++i) {
    const WeightFn& w = tree_.node(i).weight;
    if (!w.learnable()) continue;
    const ParamSlice s = w.slice();
    if (filled[static_cast<std::size_t>(s.offset)]) continue;
    const std::vector<double> init = mlp_init(w.arch(), derive_seed(seed, static_cast<std::uint64_t>(s.offset)));
    std::copy(init.begin(), init.end(), params.begin() + s.offset);
    filled[static_cast<std::size_t>(s.offset)] = true;
  }
  return params;
}

Vector RmpFusionPolicy::act(const PolicyState& s, std::span<const double> params) const {
  return evaluate_policy<double>(tree_, s, params).a;
}

TapedAction RmpFusionPolicy::act(const PolicyState& s, std::span<const ad::Var> params) const {
  PolicyOutput<ad::Var> out = evaluate_policy<ad::Var>(tree_, s, params);
  return TapedAction{std::move(out.a), out.degenerate};
}

double RmpFusionPolicy::lyapunov(const PolicyState& s, std::span<const double> params) const {
  return evaluate_policy<double>(tree_, s, params).root.energy;
}

std::string RmpFusionPolicy::describe_param(int index) const {
  for (int i = 1; i < tree_.size(); ++i) {
    const TreeNode& n = tree_.node(i);
    const ParamSlice s = n.weight.slice();
    if (n.weight.learnable() && index >= s.offset && index < s.offset + s.length) {
      return "weight of edge '" + tree_.node(n.parent).name + "' -> '" + n.name + "' [" +
             std::to_string(s.offset) + ", " + std::to_string(s.offset + s.length) + ")";
    }
  }
  return "parameter " + std::to_string(index);
}

UnstructuredPolicy::UnstructuredPolicy(int q_dim, int aux_dim, std::vector<int> hidden, Activation activation)
    : q_dim_(q_dim), aux_dim_(aux_dim), arch_{2 * q_dim + aux_dim, std::move(hidden), q_dim, activation} {
  if (q_dim < 1 || aux_dim < 0) throw ConfigError("unstructured policy: bad dimensions");
  arch_.validate();
}

std::vector<double> UnstructuredPolicy::initial_params(std::uint64_t seed) const {
  return mlp_init(arch_, derive_seed(seed, 0));
}

Vector UnstructuredPolicy::act(const PolicyState& s, std::span<const double> params) const {
  if (s.q.size() != q_dim_ || s.qd.size() != q_dim_ || s.aux.size() != aux_dim_) {
    throw DimensionError("unstructured policy: state dimensions do not match the network input");
  }
  if (static_cast<int>(params.size()) != param_count()) {
    throw DimensionError("unstructured policy: expected " + std::to_string(param_count()) + " parameters");
  }
  return mlp_forward<double>(arch_, params, network_input<double>(s));
}

TapedAction UnstructuredPolicy::act(const PolicyState& s, std::span<const ad::Var> params) const {
  if (s.q.size() != q_dim_ || s.qd.size() != q_dim_ || s.aux.size() != aux_dim_) {
    throw DimensionError("unstructured policy: state dimensions do not match the network input");
  }
  if (static_cast<int>(params.size()) != param_count()) {
    throw DimensionError("unstructured policy: expected " + std::to_string(param_count()) + " parameters");
  }
  return TapedAction{mlp_forward<ad::Var>(arch_, params, network_input<ad::Var>(s)), false};
}

double UnstructuredPolicy::lyapunov(const PolicyState&, std::span<const double>) const {
  return std::numeric_limits<double>::quiet_NaN();
}

std::string UnstructuredPolicy::describe_param(int index) const {
  int offset = 0;
  int fan_in = arch_.in_dim;
  const auto layers = arch_.hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int width = l + 1 == layers ? arch_.out_dim : arch_.hidden[l];
    const int len = width * fan_in + width;
    if (index < offset + len) return "network layer " + std::to_string(l) + " [" + std::to_string(offset) + ", " +
                                     std::to_string(offset + len) + ")";
    offset += len;
    fan_in = width;
  }
  return "parameter " + std::to_string(index);
}

UnstructuredPolicy unstructured_policy(int in_dim, std::vector<int> hidden, int out_dim, Activation activation) {
  const int aux_dim = in_dim - 2 * out_dim;
  if (out_dim < 1 || aux_dim < 0) {
    throw ConfigError("unstructured_policy: input must hold position, velocity and aux state");
  }
  return UnstructuredPolicy(out_dim, aux_dim, std::move(hidden), activation);
}

GradResult grad_params(const LearnablePolicy& policy, std::span<const Record> batch,
                       const std::vector<double>& params) {
  if (batch.empty()) throw ConfigError("grad_params: empty batch");
  const auto n = params.size();
  if (static_cast<int>(n) != policy.param_count()) {
    throw DimensionError("grad_params: expected " + std::to_string(policy.param_count()) + " parameters, got " +
                         std::to_string(n));
  }
  GradResult result;
  result.grad.assign(n, 0.0);
  ad::Tape tape;
  std::vector<ad::Var> p(n);
  std::vector<double> record_grad(n);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Record& r = batch[i];
    tape.clear();
    ad::TapeScope scope(tape);
    for (std::size_t k = 0; k < n; ++k) p[k] = ad::Var::input(params[k]);
    const PolicyState s{r.q, r.qd, r.aux};
    const TapedAction out = with_context("record " + std::to_string(i), [&] {
      return policy.act(s, std::span<const ad::Var>(p));
    });
    if (out.a.size() != r.a.size()) throw DimensionError("grad_params: action dimension mismatch");
    ad::Var loss(0.0);
    for (Eigen::Index d = 0; d < r.a.size(); ++d) {
      const ad::Var diff = out.a[d] - r.a[d];
      loss += diff * diff;
    }
    loss = loss * (1.0 / static_cast<double>(r.a.size()));
    result.loss += loss.value();
    if (out.degenerate) {
      ++result.degenerate_records;
      continue;
    }
    if (loss.is_constant()) continue;
    const std::pair<std::int32_t, double> seed{loss.index(), 1.0};
    const std::vector<double> adj = tape.backward(std::span(&seed, 1));
    for (std::size_t k = 0; k < n; ++k) record_grad[k] = adj[static_cast<std::size_t>(p[k].index())];
    for (std::size_t k = 0; k < n; ++k) result.grad[k] += record_grad[k];
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  result.loss *= scale;
  for (std::size_t k = 0; k < n; ++k) {
    result.grad[k] *= scale;
    if (!std::isfinite(result.grad[k])) {
      throw NumericError("grad_params: non-finite gradient in " + policy.describe_param(static_cast<int>(k)));
    }
  }
  if (!std::isfinite(result.loss)) throw NumericError("grad_params: non-finite loss");
  if (result.degenerate_records > 0) {
    spdlog::warn("grad_params: dropped the gradient of {} record(s) with a nearly singular root inertia",
                 result.degenerate_records);
  }
  return result;
}

double batch_loss(const LearnablePolicy& policy, std::span<const Record> batch, const std::vector<double>& params) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Record& r = batch[i];
    const PolicyState s{r.q, r.qd, r.aux};
    const Vector a = with_context("record " + std::to_string(i), [&] {
      return policy.act(s, std::span<const double>(params));
    });
    total += loss_mse(a, r.a);
  }
  return total / static_cast<double>(batch.size());
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "rmsprop"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "rmsprop") return OptimizerKind::kRmsprop;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (use rmsprop or adam)");
}

OptimizerState make_optimizer(OptimizerKind kind, std::size_t n) {
  OptimizerState s;
  s.kind = kind;
  s.v.assign(n, 0.0);
  if (kind == OptimizerKind::kAdam) s.m.assign(n, 0.0);
  return s;
}

void optimizer_step(OptimizerState& state, std::vector<double>& params, const std::vector<double>& grad, double lr) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.v.size() != n ||
      (state.kind == OptimizerKind::kAdam && state.m.size() != n)) {
    throw DimensionError("optimizer_step: parameter, gradient and state sizes differ");
  }
  std::vector<double> next = params;
  ++state.step;
  if (state.kind == OptimizerKind::kRmsprop) {
    for (std::size_t k = 0; k < n; ++k) {
      state.v[k] = kRmspropRho * state.v[k] + (1.0 - kRmspropRho) * grad[k] * grad[k];
      next[k] -= lr * grad[k] / (std::sqrt(state.v[k]) + kOptimizerEps);
    }
  } else {
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    for (std::size_t k = 0; k < n; ++k) {
      state.m[k] = kAdamBeta1 * state.m[k] + (1.0 - kAdamBeta1) * grad[k];
      state.v[k] = kAdamBeta2 * state.v[k] + (1.0 - kAdamBeta2) * grad[k] * grad[k];
      const double m_hat = state.m[k] / c1;
      const double v_hat = state.v[k] / c2;
      next[k] -= lr * m_hat / (std::sqrt(v_hat) + kOptimizerEps);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(next[k])) throw NumericError("optimizer_step: non-finite update at parameter " + std::to_string(k));
  }
  params = std::move(next);
}

double clip_global_norm(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

void TrainConfig::validate(std::size_t dataset_size) const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (minibatch < 1) throw ConfigError("train: minibatch must be positive");
  if (iterations < 0) throw ConfigError("train: iterations must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be non-negative");
  if (static_cast<std::size_t>(minibatch) > dataset_size) {
    throw ConfigError("train: minibatch " + std::to_string(minibatch) + " exceeds dataset size " +
                      std::to_string(dataset_size));
  }
}

std::vector<std::size_t> minibatch_indices(std::uint64_t seed, int iteration, std::size_t dataset_size,
                                           int minibatch) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(iteration) + 1000003ULL));
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto b = std::min(static_cast<std::size_t>(minibatch), dataset_size);
  // Partial Fisher-Yates: the first b entries are a uniform sample without replacement.
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, dataset_size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(b);
  return idx;
}

TrainResult train_bc(const LearnablePolicy& policy, const Dataset& data, const TrainConfig& config,
                     TrainState start, const CheckpointFn& on_checkpoint) {
  if (data.empty()) throw ConfigError("train: dataset is empty");
  data.validate();
  config.validate(data.size());
  if (static_cast<int>(start.params.size()) != policy.param_count()) {
    throw DimensionError("train: starting parameters do not match the policy");
  }
  if (start.optimizer.v.size() != start.params.size() || start.optimizer.kind != config.optimizer) {
    start.optimizer = make_optimizer(config.optimizer, start.params.size());
  }
  TrainResult result;
  result.state = std::move(start);
  std::vector<Record> batch(static_cast<std::size_t>(config.minibatch));
  TrainState& st = result.state;
  while (st.iteration < config.iterations) {
    const auto idx = minibatch_indices(config.seed, st.iteration, data.size(), config.minibatch);
    for (std::size_t k = 0; k < idx.size(); ++k) batch[k] = data.records[idx[k]];
    GradResult g = with_context("iteration " + std::to_string(st.iteration), [&] {
      return grad_params(policy, batch, st.params);
    });
    clip_global_norm(g.grad, config.clip_norm);
    optimizer_step(st.optimizer, st.params, g.grad, config.learning_rate);
    ++st.iteration;
    result.curve.push_back(CurvePoint{st.iteration, g.loss});
    if (st.iteration % 100 == 0) spdlog::debug("iteration {} loss {:.6e}", st.iteration, g.loss);
    const bool periodic = config.checkpoint_every > 0 && st.iteration % config.checkpoint_every == 0;
    if (on_checkpoint && (periodic || st.iteration == config.iterations)) on_checkpoint(st);
  }
  if (config.iterations == 0 && on_checkpoint) on_checkpoint(st);
  return result;
}

TrainResult train_bc(const LearnablePolicy& policy, const Dataset& data, const TrainConfig& config,
                     const CheckpointFn& on_checkpoint) {
  TrainState start;
  start.params = policy.initial_params(config.seed);
  start.optimizer = make_optimizer(config.optimizer, start.params.size());
  return train_bc(policy, data, config, std::move(start), on_checkpoint);
}

}  // namespace rmpfusion
