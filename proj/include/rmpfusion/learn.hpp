#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmpfusion/ad.hpp"
#include "rmpfusion/tree.hpp"
#include "rmpfusion/weights.hpp"

namespace rmpfusion {

// Deterministic, well-mixed seed for an independent random stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// One expert demonstration sample.
struct Record {
  int env = 0;
  int traj = 0;
  double t = 0.0;
  Vector q;
  Vector qd;
  Vector aux;
  Vector a;  // expert action
};

struct Dataset {
  std::string split = "train";
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  // Throws unless every record shares dims and all actions are finite.
  void validate() const;
};

double loss_mse(const Vector& pred, const Vector& target);

// Action produced on the active tape.
struct TapedAction {
  VecT<ad::Var> a;
  bool degenerate = false;  // resolve fell back to the constant pseudo-inverse
};

// A policy with a flat parameter vector that train_bc can fit.
class LearnablePolicy {
 public:
  virtual ~LearnablePolicy() = default;
  virtual std::string kind() const = 0;
  virtual int param_count() const = 0;
  virtual std::vector<double> initial_params(std::uint64_t seed) const = 0;
  virtual Vector act(const PolicyState& s, std::span<const double> params) const = 0;
  virtual TapedAction act(const PolicyState& s, std::span<const ad::Var> params) const = 0;
  // Root Lyapunov value, or NaN when the policy has none.
  virtual double lyapunov(const PolicyState& s, std::span<const double> params) const = 0;
  // Which named block a parameter index belongs to (for error messages).
  virtual std::string describe_param(int index) const = 0;
};

class RmpFusionPolicy final : public LearnablePolicy {
 public:
  explicit RmpFusionPolicy(TreeSpec tree);

  std::string kind() const override { return "rmpfusion"; }
  int param_count() const override { return tree_.param_count(); }
  std::vector<double> initial_params(std::uint64_t seed) const override;
  Vector act(const PolicyState& s, std::span<const double> params) const override;
  TapedAction act(const PolicyState& s, std::span<const ad::Var> params) const override;
  double lyapunov(const PolicyState& s, std::span<const double> params) const override;
  std::string describe_param(int index) const override;

  const TreeSpec& tree() const { return tree_; }

 private:
  TreeSpec tree_;
};

// Plain regression network from [q; qd; aux] to an action.
class UnstructuredPolicy final : public LearnablePolicy {
 public:
  UnstructuredPolicy(int q_dim, int aux_dim, std::vector<int> hidden,
                     Activation activation = Activation::kTanh);

  std::string kind() const override { return "unstructured"; }
  int param_count() const override { return arch_.param_count(); }
  std::vector<double> initial_params(std::uint64_t seed) const override;
  Vector act(const PolicyState& s, std::span<const double> params) const override;
  TapedAction act(const PolicyState& s, std::span<const ad::Var> params) const override;
  double lyapunov(const PolicyState&, std::span<const double>) const override;
  std::string describe_param(int index) const override;

  const MlpArch& arch() const { return arch_; }
  int q_dim() const { return q_dim_; }
  int aux_dim() const { return aux_dim_; }

 private:
  int q_dim_;
  int aux_dim_;
  MlpArch arch_;
};

// in_dim = 2 q_dim + aux_dim, out_dim = q_dim.
UnstructuredPolicy unstructured_policy(int in_dim, std::vector<int> hidden, int out_dim,
                                       Activation activation = Activation::kTanh);

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad;
  int degenerate_records = 0;  // records whose gradient was dropped
};

// Mean MSE over `batch` and its gradient with respect to the parameters,
// one tape per record, summed in record order.
GradResult grad_params(const LearnablePolicy& policy, std::span<const Record> batch,
                       const std::vector<double>& params);

// Mean MSE without gradients.
double batch_loss(const LearnablePolicy& policy, std::span<const Record> batch,
                  const std::vector<double>& params);

enum class OptimizerKind { kRmsprop, kAdam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kRmsprop;
  std::vector<double> m;  // Adam first moment
  std::vector<double> v;  // second moment (both optimizers)
  long step = 0;
};

OptimizerState make_optimizer(OptimizerKind kind, std::size_t n);

inline constexpr double kRmspropRho = 0.9;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kOptimizerEps = 1e-8;

// In-place update of `params`. Throws NumericError on a non-finite update.
void optimizer_step(OptimizerState& state, std::vector<double>& params, const std::vector<double>& grad,
                    double lr);

// Rescales `grad` to norm `max_norm` when it is longer. Returns the original norm.
double clip_global_norm(std::vector<double>& grad, double max_norm);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kRmsprop;
  double learning_rate = 1e-3;
  int minibatch = 200;
  int iterations = 1000;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables intermediate checkpoints
  double clip_norm = 100.0;

  void validate(std::size_t dataset_size) const;
};

struct TrainState {
  std::vector<double> params;
  OptimizerState optimizer;
  int iteration = 0;
};

struct CurvePoint {
  int iteration = 0;
  double loss = 0.0;
};

struct TrainResult {
  TrainState state;
  std::vector<CurvePoint> curve;
};

// Indices of the minibatch drawn at `iteration`; depends only on (seed, iteration).
std::vector<std::size_t> minibatch_indices(std::uint64_t seed, int iteration, std::size_t dataset_size,
                                           int minibatch);

using CheckpointFn = std::function<void(const TrainState&)>;

// Behavior cloning from `start` up to config.iterations. `on_checkpoint` runs
// every checkpoint_every iterations and after the final one.
TrainResult train_bc(const LearnablePolicy& policy, const Dataset& data, const TrainConfig& config,
                     TrainState start, const CheckpointFn& on_checkpoint = {});

// Fresh start from policy.initial_params(config.seed).
TrainResult train_bc(const LearnablePolicy& policy, const Dataset& data, const TrainConfig& config,
                     const CheckpointFn& on_checkpoint = {});

}  // namespace rmpfusion
