#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <string>

#include "rmpfusion/errors.hpp"
#include "rmpfusion/experiment.hpp"
#include "rmpfusion/fixtures.hpp"
#include "rmpfusion/learn.hpp"
#include "rmpfusion/oracles.hpp"
#include "rmpfusion/serialize.hpp"
#include "rmpfusion/sim.hpp"
#include "rmpfusion/tree.hpp"

namespace py = pybind11;
using namespace rmpfusion;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
TreeSpec tree_from_text(const std::string& text) { return tree_from_json(Json::parse(text)); }

std::shared_ptr<LearnablePolicy> policy_from_text(const std::string& text) {
  return std::shared_ptr<LearnablePolicy>(policy_from_json(Json::parse(text)));
}

PolicyState state(const Vector& q, const Vector& qd, const Vector& aux) { return PolicyState{q, qd, aux}; }

py::dict trajectory_dict(const Trajectory& traj) {
  const auto n = static_cast<Eigen::Index>(traj.samples.size());
  const Eigen::Index dim = n > 0 ? traj.samples.front().q.size() : 0;
  Vector t(n), v(n);
  Matrix q(n, dim), qd(n, dim), a(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = traj.samples[static_cast<std::size_t>(i)];
    t[i] = s.t;
    v[i] = s.v;
    q.row(i) = s.q.transpose();
    qd.row(i) = s.qd.transpose();
    a.row(i) = s.a.transpose();
  }
  py::dict d;
  d["dt"] = traj.dt;
  d["t"] = t;
  d["q"] = q;
  d["qd"] = qd;
  d["a"] = a;
  d["v"] = v;
  d["goal_reached"] = traj.events.goal_reached;
  d["goal_time"] = traj.events.goal_time;
  d["collision"] = traj.events.collision;
  d["collision_time"] = traj.events.collision_time;
  d["timed_out"] = traj.events.timed_out;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured motion-policy trees: evaluation, learning and simulation";
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<StabilityContractError>(m, "StabilityContractError", base.ptr());

  py::class_<TreeSpec>(m, "Tree")
      .def_static("from_json", &tree_from_text, py::arg("text"))
      .def_static(
          "fixture",
          [](const std::string& name, const std::string& role) {
            const FixturePair p = make_fixture(name);
            return role_from_string(role) == Role::kExpert ? p.expert : p.learner;
          },
          py::arg("name"), py::arg("role") = "expert")
      .def_static("ytree", &make_ytree)
      .def("to_json", [](const TreeSpec& t) { return tree_to_json(t).dump(); })
      .def("hash", &tree_hash)
      .def("find", &TreeSpec::find, py::arg("name"))
      .def_property_readonly("size", &TreeSpec::size)
      .def_property_readonly("root_dim", &TreeSpec::root_dim)
      .def_property_readonly("aux_dim", &TreeSpec::aux_dim)
      .def_property_readonly("param_count", &TreeSpec::param_count)
      .def("reduce_to_rmpflow", &reduce_to_rmpflow)
      .def("decompose_two_step", &decompose_two_step)
      .def("without_damping", &without_damping);

  py::class_<LearnablePolicy, std::shared_ptr<LearnablePolicy>>(m, "Policy")
      .def_static("from_json", &policy_from_text, py::arg("text"))
      .def_static("from_tree", [](const TreeSpec& t) -> std::shared_ptr<LearnablePolicy> {
        return std::make_shared<RmpFusionPolicy>(t);
      })
      .def_static(
          "unstructured",
          [](int q_dim, int aux_dim, std::vector<int> hidden) -> std::shared_ptr<LearnablePolicy> {
            return std::make_shared<UnstructuredPolicy>(q_dim, aux_dim, std::move(hidden));
          },
          py::arg("q_dim"), py::arg("aux_dim"), py::arg("hidden"))
      .def("to_json", [](const LearnablePolicy& p) { return policy_to_json(p).dump(); })
      .def_property_readonly("kind", &LearnablePolicy::kind)
      .def_property_readonly("param_count", &LearnablePolicy::param_count)
      .def("initial_params", &LearnablePolicy::initial_params, py::arg("seed") = 0)
      .def(
          "act",
          [](const LearnablePolicy& p, const Vector& q, const Vector& qd, const Vector& aux,
             const std::vector<double>& params) { return p.act(state(q, qd, aux), params); },
          py::arg("q"), py::arg("qd"), py::arg("aux"), py::arg("params"))
      .def(
          "lyapunov",
          [](const LearnablePolicy& p, const Vector& q, const Vector& qd, const Vector& aux,
             const std::vector<double>& params) { return p.lyapunov(state(q, qd, aux), params); },
          py::arg("q"), py::arg("qd"), py::arg("aux"), py::arg("params"))
      .def(
          "rollout",
          [](const LearnablePolicy& p, const std::vector<double>& params, const std::string& env_text,
             const Vector& q0, const Vector& qd0, double horizon, double dt, const std::string& method) {
            RolloutOptions o;
            o.horizon = horizon;
            o.dt = dt;
            o.method = integrator_from_string(method);
            const Environment env = environment_from_json(Json::parse(env_text));
            Trajectory traj;
            {
              py::gil_scoped_release release;
              traj = rollout(make_sim_policy(p, params), env, q0, qd0, o);
            }
            return trajectory_dict(traj);
          },
          py::arg("params"), py::arg("env"), py::arg("q0"), py::arg("qd0"), py::arg("horizon") = 10.0,
          py::arg("dt") = 1e-2, py::arg("method") = "rk4");

  m.def(
      "load_checkpoint",
      [](const std::string& text) {
        const Checkpoint c = checkpoint_from_json(Json::parse(text));
        return py::make_tuple(c.policy, c.state.params, c.state.iteration);
      },
      py::arg("text"));

  m.def("fixture_names", &fixture_names);

  m.def(
      "verify",
      [](const std::string& suite, std::uint64_t seed, int cases) {
        VerifyOptions o;
        o.seed = seed;
        o.cases = cases;
        SuiteResult r;
        {
          py::gil_scoped_release release;
          r = run_suite(suite, o);
        }
        return suite_result_to_json(r).dump();
      },
      py::arg("suite"), py::arg("seed") = 0, py::arg("cases") = -1);

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::filesystem::path& base_dir, int iterations) {
        ExperimentConfig cfg = experiment_from_json(Json::parse(config_text), base_dir);
        if (iterations >= 0) cfg.train.iterations = iterations;
        py::gil_scoped_release release;
        const DataBundle data = generate_data(cfg);
        const std::unique_ptr<LearnablePolicy> learner = make_learner(cfg);
        const TrainResult r = train_bc(*learner, data.train.data, cfg.train);
        const EvalReport report = evaluate(*learner, r.state.params, expert_tree(cfg), data.test.data,
                                           env_shape(cfg.sampling), cfg.rollout, cfg.online_interval);
        Json out{{"report", report_to_json(report)},
                 {"checkpoint", checkpoint_to_json(*learner, r.state)},
                 {"curve", Json::array()}};
        for (const CurvePoint& p : r.curve) out["curve"].push_back(Json::array({p.iteration, p.loss}));
        return out.dump();
      },
      py::arg("config"), py::arg("base_dir") = std::filesystem::path(), py::arg("iterations") = -1);
}
