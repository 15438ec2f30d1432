#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmpfusion/learn.hpp"
#include "rmpfusion/sim.hpp"
#include "rmpfusion/tree.hpp"

namespace rmpfusion {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json map_to_json(const TaskMap& m);
TaskMap map_from_json(const Json& j);

Json weight_to_json(const WeightFn& w);
WeightFn weight_from_json(const Json& j, int parent_dim, int aux_dim);

Json leaf_to_json(const GdsSpec& g);
GdsSpec leaf_from_json(const Json& j);

// {"schema", "name", "root": {name, dim}, "aux_dim", "nodes": [...]} with
// nodes listed parents-before-children.
Json tree_to_json(const TreeSpec& tree);
TreeSpec tree_from_json(const Json& j);

// FNV-1a (64 bit, hex) of the compact tree document.
std::string tree_hash(const TreeSpec& tree);

// Fully describes a learnable policy so a checkpoint can rebuild it.
Json policy_to_json(const LearnablePolicy& policy);
std::unique_ptr<LearnablePolicy> policy_from_json(const Json& j);

struct Checkpoint {
  std::shared_ptr<LearnablePolicy> policy;
  TrainState state;
};

// {"schema", "kind": "checkpoint", "policy", "tree_hash", "edges": [per-edge
// arch and slice], "iteration", "params", "optimizer": {kind, step, m, v}}
Json checkpoint_to_json(const LearnablePolicy& policy, const TrainState& state);
Checkpoint checkpoint_from_json(const Json& j);

Json environment_to_json(const Environment& env);
Environment environment_from_json(const Json& j);

Json sampling_to_json(const SamplingConfig& c);
SamplingConfig sampling_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

Json rollout_options_to_json(const RolloutOptions& o);
RolloutOptions rollout_options_from_json(const Json& j);

// Files. Readers throw ConfigError naming the path on malformed input.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// One header line {"schema", "kind": "dataset", "split", "count"}, then one
// record per line.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

// Tab-separated with header: t q0.. qd0.. a0.. V
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path);

// Tab-separated with header: iteration loss
void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> read_curve(const std::filesystem::path& path);

// Shortest decimal form that round-trips.
std::string format_double(double v);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace rmpfusion
