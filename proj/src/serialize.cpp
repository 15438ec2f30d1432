#include "rmpfusion/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

Json vec_json(const Vector& v) { return Json(std::vector<double>(v.begin(), v.end())); }

Vector json_vec(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

void check_schema(const Json& j, const std::string& kind) {
  if (!j.is_object()) throw ConfigError(kind + ": expected an object");
  const int version = field<int>(j, "schema");
  if (version != kSchemaVersion) {
    throw ConfigError(kind + ": unsupported schema version " + std::to_string(version));
  }
  if (j.contains("kind") && j.at("kind") != kind) {
    throw ConfigError("expected a " + kind + " document, got '" + j.at("kind").get<std::string>() + "'");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

std::vector<double> split_numbers(const std::string& line, const std::filesystem::path& path, int line_no) {
  std::vector<double> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, '\t')) {
    double v = 0.0;
    const auto* begin = cell.data();
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json map_to_json(const TaskMap& m) {
  Json j;
  j["kind"] = std::string(to_string(m.kind()));
  j["in_dim"] = m.in_dim();
  if (m.kind() == MapKind::kComposition) {
    j["outer"] = map_to_json(m.outer());
    j["inner"] = map_to_json(m.inner());
  } else {
    j["params"] = m.params();
  }
  return j;
}

TaskMap map_from_json(const Json& j) {
  const auto kind = map_kind_from_string(field<std::string>(j, "kind"));
  if (kind == MapKind::kComposition) {
    return compose(map_from_json(field<Json>(j, "outer")), map_from_json(field<Json>(j, "inner")));
  }
  return TaskMap::from_params(kind, field<int>(j, "in_dim"), field_or<std::vector<double>>(j, "params", {}));
}

Json weight_to_json(const WeightFn& w) {
  Json j;
  j["kind"] = std::string(to_string(w.kind()));
  switch (w.kind()) {
    case WeightKind::kConstant:
      j["value"] = w.constant_value();
      break;
    case WeightKind::kAnalytic: {
      const auto& c = w.coeffs();
      j["offset"] = c[0];
      j["amplitude"] = c[1];
      j["width"] = c[2];
      j["center"] = std::vector<double>(c.begin() + 3, c.end());
      break;
    }
    case WeightKind::kMlp:
      j["hidden"] = w.arch().hidden;
      j["activation"] = std::string(to_string(w.arch().activation));
      if (!w.share_tag().empty()) j["share"] = w.share_tag();
      break;
  }
  return j;
}

WeightFn weight_from_json(const Json& j, int parent_dim, int aux_dim) {
  const auto kind = field<std::string>(j, "kind");
  if (kind == "constant") return WeightFn::constant(field<double>(j, "value"));
  if (kind == "analytic") {
    return WeightFn::analytic(json_vec(field<Json>(j, "center")), field<double>(j, "offset"),
                              field<double>(j, "amplitude"), field<double>(j, "width"));
  }
  if (kind == "mlp") {
    WeightFn w = WeightFn::mlp(parent_dim, aux_dim, field<std::vector<int>>(j, "hidden"),
                               activation_from_string(field_or<std::string>(j, "activation", "tanh")));
    w.set_share_tag(field_or<std::string>(j, "share", ""));
    return w;
  }
  throw ConfigError("unknown weight kind '" + kind + "'");
}

Json leaf_to_json(const GdsSpec& g) {
  Json gains = Json::object();
  for (const auto& [k, v] : g.gains) gains[k] = v;
  return Json{{"kind", g.kind}, {"dim", g.dim}, {"gains", gains}};
}

GdsSpec leaf_from_json(const Json& j) {
  std::map<std::string, double> gains;
  if (j.contains("gains")) gains = j.at("gains").get<std::map<std::string, double>>();
  return make_leaf(field<std::string>(j, "kind"), field<int>(j, "dim"), gains);
}

Json tree_to_json(const TreeSpec& tree) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "tree";
  j["name"] = tree.name;
  j["root"] = Json{{"name", tree.node(0).name}, {"dim", tree.node(0).dim}};
  j["aux_dim"] = tree.aux_dim();
  if (tree.node(0).leaf) j["root"]["leaf"] = leaf_to_json(*tree.node(0).leaf);
  Json nodes = Json::array();
  for (int i = 1; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    Json e;
    e["name"] = n.name;
    e["parent"] = tree.node(n.parent).name;
    e["map"] = map_to_json(*n.map);
    if (!n.aux_params.empty()) e["aux_params"] = n.aux_params;
    e["weight"] = weight_to_json(n.weight);
    if (n.leaf) e["leaf"] = leaf_to_json(*n.leaf);
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

TreeSpec tree_from_json(const Json& j) {
  check_schema(j, "tree");
  const Json root = field<Json>(j, "root");
  TreeSpec t(field<std::string>(root, "name"), field<int>(root, "dim"), field<int>(j, "aux_dim"));
  t.name = field_or<std::string>(j, "name", "");
  if (root.contains("leaf")) t.set_leaf(0, leaf_from_json(root.at("leaf")));
  for (const Json& e : field<Json>(j, "nodes")) {
    const auto name = field<std::string>(e, "name");
    with_context("node '" + name + "'", [&] {
      const auto parent_name = field<std::string>(e, "parent");
      const int parent = t.find(parent_name);
      if (parent < 0) throw ConfigError("unknown parent '" + parent_name + "'");
      const int parent_dim = t.node(parent).dim;
      const int idx = t.add_child(parent, name, map_from_json(field<Json>(e, "map")),
                                  weight_from_json(field<Json>(e, "weight"), parent_dim, t.aux_dim()),
                                  field_or<std::vector<int>>(e, "aux_params", {}));
      if (e.contains("leaf")) t.set_leaf(idx, leaf_from_json(e.at("leaf")));
    });
  }
  t.validate();
  return t;
}

std::string tree_hash(const TreeSpec& tree) { return fnv1a_hex(tree_to_json(tree).dump()); }

Json policy_to_json(const LearnablePolicy& policy) {
  if (const auto* r = dynamic_cast<const RmpFusionPolicy*>(&policy)) {
    return Json{{"kind", "rmpfusion"}, {"tree", tree_to_json(r->tree())}};
  }
  if (const auto* u = dynamic_cast<const UnstructuredPolicy*>(&policy)) {
    return Json{{"kind", "unstructured"},
                {"q_dim", u->q_dim()},
                {"aux_dim", u->aux_dim()},
                {"hidden", u->arch().hidden},
                {"activation", std::string(to_string(u->arch().activation))}};
  }
  throw ConfigError("policy_to_json: unsupported policy kind '" + policy.kind() + "'");
}

std::unique_ptr<LearnablePolicy> policy_from_json(const Json& j) {
  const auto kind = field<std::string>(j, "kind");
  if (kind == "rmpfusion") return std::make_unique<RmpFusionPolicy>(tree_from_json(field<Json>(j, "tree")));
  if (kind == "unstructured") {
    return std::make_unique<UnstructuredPolicy>(field<int>(j, "q_dim"), field<int>(j, "aux_dim"),
                                                field<std::vector<int>>(j, "hidden"),
                                                activation_from_string(field_or<std::string>(j, "activation", "tanh")));
  }
  throw ConfigError("unknown policy kind '" + kind + "'");
}

Json checkpoint_to_json(const LearnablePolicy& policy, const TrainState& state) {
  if (static_cast<int>(state.params.size()) != policy.param_count()) {
    throw DimensionError("checkpoint: parameter vector does not match the policy");
  }
  Json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "checkpoint";
  j["policy"] = policy_to_json(policy);
  Json edges = Json::array();
  if (const auto* r = dynamic_cast<const RmpFusionPolicy*>(&policy)) {
    j["tree_hash"] = tree_hash(r->tree());
    for (int i = 1; i < r->tree().size(); ++i) {
      const TreeNode& n = r->tree().node(i);
      if (!n.weight.learnable()) continue;
      edges.push_back(Json{{"node", n.name},
                           {"in_dim", n.weight.arch().in_dim},
                           {"hidden", n.weight.arch().hidden},
                           {"activation", std::string(to_string(n.weight.arch().activation))},
                           {"offset", n.weight.slice().offset},
                           {"length", n.weight.slice().length}});
    }
  } else {
    j["tree_hash"] = "";
  }
  j["edges"] = std::move(edges);
  j["iteration"] = state.iteration;
  j["params"] = state.params;
  j["optimizer"] = Json{{"kind", std::string(to_string(state.optimizer.kind))},
                        {"step", state.optimizer.step},
                        {"m", state.optimizer.m},
                        {"v", state.optimizer.v}};
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  check_schema(j, "checkpoint");
  Checkpoint c;
  c.policy = policy_from_json(field<Json>(j, "policy"));
  if (const auto* r = dynamic_cast<const RmpFusionPolicy*>(c.policy.get())) {
    const auto stored = field<std::string>(j, "tree_hash");
    if (stored != tree_hash(r->tree())) {
      throw ConfigError("checkpoint: tree hash " + stored + " does not match the embedded tree");
    }
  }
  c.state.iteration = field<int>(j, "iteration");
  c.state.params = field<std::vector<double>>(j, "params");
  if (static_cast<int>(c.state.params.size()) != c.policy->param_count()) {
    throw ConfigError("checkpoint: expected " + std::to_string(c.policy->param_count()) + " parameters, found " +
                         std::to_string(c.state.params.size()));
  }
  const Json opt = field<Json>(j, "optimizer");
  c.state.optimizer.kind = optimizer_from_string(field<std::string>(opt, "kind"));
  c.state.optimizer.step = field<long>(opt, "step");
  c.state.optimizer.m = field<std::vector<double>>(opt, "m");
  c.state.optimizer.v = field<std::vector<double>>(opt, "v");
  return c;
}

Json environment_to_json(const Environment& env) {
  Json obstacles = Json::array();
  for (const Obstacle& o : env.obstacles) obstacles.push_back(Json{{"center", vec_json(o.center)}, {"radius", o.radius}});
  Json j{{"schema", kSchemaVersion},   {"kind", "environment"}, {"env_kind", std::string(to_string(env.kind))},
         {"goal", vec_json(env.goal)}, {"obstacles", obstacles}, {"lower", vec_json(env.lower)},
         {"upper", vec_json(env.upper)}};
  if (!env.link_lengths.empty()) j["link_lengths"] = env.link_lengths;
  return j;
}

Environment environment_from_json(const Json& j) {
  check_schema(j, "environment");
  Environment env;
  env.kind = env_kind_from_string(field<std::string>(j, "env_kind"));
  env.goal = json_vec(field<Json>(j, "goal"));
  for (const Json& o : field<Json>(j, "obstacles")) {
    env.obstacles.push_back(Obstacle{json_vec(field<Json>(o, "center")), field<double>(o, "radius")});
  }
  env.lower = json_vec(field<Json>(j, "lower"));
  env.upper = json_vec(field<Json>(j, "upper"));
  env.link_lengths = field_or<std::vector<double>>(j, "link_lengths", {});
  env.validate();
  return env;
}

Json sampling_to_json(const SamplingConfig& c) {
  Json j{{"env_kind", std::string(to_string(c.kind))},
         {"obstacles", c.obstacles},
         {"lower", vec_json(c.lower)},
         {"upper", vec_json(c.upper)},
         {"goal_lower", vec_json(c.goal_lower)},
         {"goal_upper", vec_json(c.goal_upper)},
         {"obstacle_lower", vec_json(c.obstacle_lower)},
         {"obstacle_upper", vec_json(c.obstacle_upper)},
         {"radius_min", c.radius_min},
         {"radius_max", c.radius_max},
         {"goal_clearance", c.goal_clearance},
         {"obstacle_separation", c.obstacle_separation},
         {"start_lower", vec_json(c.start_lower)},
         {"start_upper", vec_json(c.start_upper)},
         {"start_speed", c.start_speed},
         {"start_clearance", c.start_clearance}};
  if (c.kind == EnvKind::kPlanarArm) {
    j["link_lengths"] = c.link_lengths;
    j["goal_reach_min"] = c.goal_reach_min;
    j["goal_reach_max"] = c.goal_reach_max;
  }
  return j;
}

SamplingConfig sampling_from_json(const Json& j) {
  const auto kind = env_kind_from_string(field<std::string>(j, "env_kind"));
  const int obstacles = field_or<int>(j, "obstacles", 1);
  // Unlisted fields keep the defaults of the environment kind.
  SamplingConfig c = kind == EnvKind::kPlanarArm ? SamplingConfig::planar_arm() : SamplingConfig::point2d(obstacles);
  c.obstacles = obstacles;
  auto vec = [&](const char* key, Vector& out) {
    if (j.contains(key)) out = json_vec(j.at(key));
  };
  vec("lower", c.lower);
  vec("upper", c.upper);
  vec("goal_lower", c.goal_lower);
  vec("goal_upper", c.goal_upper);
  vec("obstacle_lower", c.obstacle_lower);
  vec("obstacle_upper", c.obstacle_upper);
  vec("start_lower", c.start_lower);
  vec("start_upper", c.start_upper);
  c.radius_min = field_or(j, "radius_min", c.radius_min);
  c.radius_max = field_or(j, "radius_max", c.radius_max);
  c.goal_clearance = field_or(j, "goal_clearance", c.goal_clearance);
  c.obstacle_separation = field_or(j, "obstacle_separation", c.obstacle_separation);
  c.start_speed = field_or(j, "start_speed", c.start_speed);
  c.start_clearance = field_or(j, "start_clearance", c.start_clearance);
  c.link_lengths = field_or(j, "link_lengths", c.link_lengths);
  c.goal_reach_min = field_or(j, "goal_reach_min", c.goal_reach_min);
  c.goal_reach_max = field_or(j, "goal_reach_max", c.goal_reach_max);
  c.validate();
  return c;
}

Json train_config_to_json(const TrainConfig& c) {
  return Json{{"optimizer", std::string(to_string(c.optimizer))},
              {"learning_rate", c.learning_rate},
              {"minibatch", c.minibatch},
              {"iterations", c.iterations},
              {"seed", c.seed},
              {"checkpoint_every", c.checkpoint_every},
              {"clip_norm", c.clip_norm}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.optimizer = optimizer_from_string(field_or<std::string>(j, "optimizer", "rmsprop"));
  c.learning_rate = field_or(j, "learning_rate", c.learning_rate);
  c.minibatch = field_or(j, "minibatch", c.minibatch);
  c.iterations = field_or(j, "iterations", c.iterations);
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed);
  c.checkpoint_every = field_or(j, "checkpoint_every", c.checkpoint_every);
  c.clip_norm = field_or(j, "clip_norm", c.clip_norm);
  return c;
}

Json rollout_options_to_json(const RolloutOptions& o) {
  return Json{{"horizon", o.horizon},
              {"dt", o.dt},
              {"method", std::string(to_string(o.method))},
              {"goal_tolerance", o.goal_tolerance}};
}

RolloutOptions rollout_options_from_json(const Json& j) {
  RolloutOptions o;
  o.horizon = field_or(j, "horizon", o.horizon);
  o.dt = field_or(j, "dt", o.dt);
  o.method = integrator_from_string(field_or<std::string>(j, "method", "rk4"));
  o.goal_tolerance = field_or(j, "goal_tolerance", o.goal_tolerance);
  if (!(o.dt > 0.0) || !(o.horizon >= 0.0) || !(o.goal_tolerance >= 0.0)) {
    throw ConfigError("rollout: dt must be positive, horizon and goal_tolerance non-negative");
  }
  return o;
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_out(path);
  out << Json{{"schema", kSchemaVersion}, {"kind", "dataset"}, {"split", data.split}, {"count", data.size()}}.dump()
      << '\n';
  for (const Record& r : data.records) {
    out << Json{{"env", r.env},           {"traj", r.traj},      {"t", r.t},          {"q", vec_json(r.q)},
                {"qd", vec_json(r.qd)}, {"aux", vec_json(r.aux)}, {"a", vec_json(r.a)}}
               .dump()
        << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty dataset file");
  Dataset data;
  std::size_t expected = 0;
  int line_no = 1;
  try {
    const Json header = Json::parse(line);
    check_schema(header, "dataset");
    data.split = field<std::string>(header, "split");
    expected = field<std::size_t>(header, "count");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      data.records.push_back(Record{field<int>(j, "env"), field<int>(j, "traj"), field<double>(j, "t"),
                                    json_vec(field<Json>(j, "q")), json_vec(field<Json>(j, "qd")),
                                    json_vec(field<Json>(j, "aux")), json_vec(field<Json>(j, "a"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (data.size() != expected) {
    throw ConfigError(path.string() + ": header declares " + std::to_string(expected) + " records, found " +
                      std::to_string(data.size()));
  }
  data.validate();
  return data;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.samples.empty()) throw ConfigError("write_trajectory: empty trajectory");
  auto out = open_out(path);
  const auto& ev = traj.events;
  out << "# dt " << format_double(traj.dt) << " collision " << ev.collision << ' ' << format_double(ev.collision_time)
      << " goal " << ev.goal_reached << ' ' << format_double(ev.goal_time) << " timeout " << ev.timed_out << '\n';
  const auto n = traj.samples.front().q.size();
  out << 't';
  for (const char* prefix : {"q", "qd", "a"}) {
    for (Eigen::Index i = 0; i < n; ++i) out << '\t' << prefix << i;
  }
  out << "\tV\n";
  for (const Sample& s : traj.samples) {
    out << format_double(s.t);
    for (const Vector* v : {&s.q, &s.qd, &s.a}) {
      for (Eigen::Index i = 0; i < n; ++i) out << '\t' << format_double((*v)[i]);
    }
    out << '\t' << format_double(s.v) << '\n';
  }
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  Trajectory traj;
  int line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      auto& ev = traj.events;
      ss >> key >> traj.dt >> key >> ev.collision >> ev.collision_time >> key >> ev.goal_reached >> ev.goal_time >> key >>
          ev.timed_out;
      if (!ss) throw ConfigError(path.string() + ": malformed trajectory header");
      continue;
    }
    if (line[0] == 't') {
      columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t') + 1);
      if (columns < 5 || (columns - 2) % 3 != 0) throw ConfigError(path.string() + ": malformed column header");
      continue;
    }
    if (columns == 0) throw ConfigError(path.string() + ": missing column header");
    const auto values = split_numbers(line, path, line_no);
    if (values.size() != columns) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                        " columns");
    }
    const auto n = static_cast<Eigen::Index>((columns - 2) / 3);
    Sample s;
    s.t = values[0];
    s.q = Eigen::Map<const Vector>(values.data() + 1, n);
    s.qd = Eigen::Map<const Vector>(values.data() + 1 + n, n);
    s.a = Eigen::Map<const Vector>(values.data() + 1 + 2 * n, n);
    s.v = values.back();
    traj.samples.push_back(std::move(s));
  }
  if (traj.samples.empty()) throw ConfigError(path.string() + ": trajectory has no samples");
  return traj;
}

void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  auto out = open_out(path);
  out << "iteration\tloss\n";
  for (const CurvePoint& p : curve) out << p.iteration << '\t' << format_double(p.loss) << '\n';
}

std::vector<CurvePoint> read_curve(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<CurvePoint> curve;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;
    const auto values = split_numbers(line, path, line_no);
    if (values.size() != 2) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
    curve.push_back(CurvePoint{static_cast<int>(values[0]), values[1]});
  }
  if (curve.empty()) throw ConfigError(path.string() + ": curve has no points");
  return curve;
}

}  // namespace rmpfusion
