#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rmpfusion/learn.hpp"
#include "rmpfusion/serialize.hpp"
#include "rmpfusion/tree.hpp"

namespace rmpfusion {

enum class RandomWeights { kUnit, kConstant, kAnalytic, kMlp, kMixed };

struct RandomTreeOptions {
  int max_depth = 3;  // edges from the root to the deepest leaf
  int max_dim = 4;
  int max_children = 3;
  int aux_dim = 2;
  RandomWeights weights = RandomWeights::kUnit;
  std::vector<int> hidden{4};
};

// Random well-formed tree over every map family. The root always carries an
// identity-metric leaf so the root inertia is well conditioned. States drawn
// by random_state keep every distance and joint-limit coordinate positive.
TreeSpec random_tree(std::mt19937_64& rng, const RandomTreeOptions& options);
PolicyState random_state(const TreeSpec& tree, std::mt19937_64& rng);

// MLP initialization plus Gaussian noise so learned weights vary visibly.
std::vector<double> random_params(const TreeSpec& tree, std::mt19937_64& rng, double noise = 0.5);

// Plain unweighted recursion f = sum J'(f_i - M_i Jdot xd), M = sum J' M_i J,
// a = M^+ f, written without the weighted pullback.
struct ReferenceRmp {
  Vector f;
  Matrix m;
  Vector a;
};
ReferenceRmp reference_rmpflow(const TreeSpec& tree, const PolicyState& s);

// V_r as the sum over leaves of the product of edge weights on the path from
// the root times the leaf energy.
double reference_lyapunov(const TreeSpec& tree, const PolicyState& s, const std::vector<double>& params);

// Resultant root dynamics of the two-child Y-tree fixture written out in
// closed form: G_r a = -grad Phi_r - B_r qd - xi_{G_r}, with xi_{G_r} from
// Richardson-extrapolated finite differences of G_r(q).
Vector ytree_closed_form(const TreeSpec& ytree, const PolicyState& s);

struct GradCheck {
  int components = 0;
  int within_rel = 0;      // |g - fd| <= rel_tol * max(|g|, |fd|)
  int within_abs = 0;      // the rest with |g - fd| <= abs_tol
  double worst_abs = 0.0;  // largest |g - fd| outside the relative band
};

GradCheck check_gradients(const LearnablePolicy& policy, const Record& record, const std::vector<double>& params,
                          double h = 1e-5, double rel_tol = 1e-4, double abs_tol = 1e-3);

struct SuiteResult {
  std::string suite;
  bool passed = false;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // suite-specific worst deviation
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
  Json counterexample;  // null when passed
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int cases = -1;  // suite default when negative
  double dt = -1.0;  // suite default when non-positive
  Integrator method = Integrator::kRk4;
  bool inject_negative_weight = false;  // stability suite: add a tree with w < 0
};

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, const VerifyOptions& options = {});
Json suite_result_to_json(const SuiteResult& r);

}  // namespace rmpfusion
