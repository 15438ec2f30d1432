#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/learn.hpp"
#include "rmpfusion/serialize.hpp"
#include "rmpfusion/sim.hpp"

namespace rmpfusion {

enum class PolicyKind { kRmpFusion, kUnstructured };

std::string_view to_string(PolicyKind k);
PolicyKind policy_kind_from_string(std::string_view name);

struct ExperimentConfig {
  std::string fixture = "2d1level";
  // Optional tree documents overriding the fixture's trees.
  std::filesystem::path expert_tree;
  std::filesystem::path learner_tree;
  PolicyKind policy = PolicyKind::kRmpFusion;
  LearnerArch learner;
  std::vector<int> unstructured_hidden{16, 12};
  SamplingConfig sampling;
  DatasetCounts train_counts{5, 20, 60};
  DatasetCounts test_counts{2, 10, 60};
  TrainConfig train;
  RolloutOptions rollout;
  double online_interval = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  static ExperimentConfig defaults(const std::string& fixture);
  void validate() const;
};

// Relative paths inside the document resolve against its directory.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);
Json experiment_to_json(const ExperimentConfig& cfg);
// FNV-1a of the compact config document.
std::string config_digest(const ExperimentConfig& cfg);

// Streams of the experiment seed.
std::uint64_t train_data_seed(const ExperimentConfig& cfg);
std::uint64_t test_data_seed(const ExperimentConfig& cfg);

TreeSpec expert_tree(const ExperimentConfig& cfg);
std::unique_ptr<LearnablePolicy> make_learner(const ExperimentConfig& cfg);

// Environment carrying kind, bounds and link lengths for decode_aux.
Environment env_shape(const SamplingConfig& sampling);

struct DataBundle {
  GenResult train;
  GenResult test;
};

DataBundle generate_data(const ExperimentConfig& cfg);

struct EvalReport {
  double batch_loss = 0.0;   // mean MSE over the test dataset
  double online_loss = 0.0;  // along the learner's own rollouts
  int rollouts = 0;
  int reached = 0;
  int collided = 0;
  int timed_out = 0;
  double max_lyapunov_increment = 0.0;  // NaN without a Lyapunov function
  Metrics learner;                       // means over the test rollouts
  Metrics expert;
  double ratio_time = 0.0;
  double ratio_conf_length = 0.0;
  double ratio_end_eff_length = 0.0;
  double ratio_goal_distance = 0.0;
  std::vector<Trajectory> trajectories;  // learner rollouts, in test order

  double completion_rate() const { return rollouts ? static_cast<double>(reached) / rollouts : 0.0; }
  double collision_rate() const { return rollouts ? static_cast<double>(collided) / rollouts : 0.0; }
  double timeout_rate() const { return rollouts ? static_cast<double>(timed_out) / rollouts : 0.0; }
};

// Learner rollouts from every test initial state, compared with the expert.
EvalReport evaluate(const LearnablePolicy& learner, const std::vector<double>& params, const TreeSpec& expert,
                    const Dataset& test, const Environment& shape, const RolloutOptions& options,
                    double online_interval = 1.0);

Json report_to_json(const EvalReport& r);

}  // namespace rmpfusion
