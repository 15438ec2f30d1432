#pragma once

#include <string>
#include <vector>

#include "rmpfusion/gds.hpp"
#include "rmpfusion/sim.hpp"
#include "rmpfusion/tree.hpp"
#include "rmpfusion/weights.hpp"

namespace rmpfusion {

// Expert trees carry fixed constant weights; learner trees carry one MLP per
// weighted edge, fed with the parent coordinate and the aux state.
enum class Role { kExpert, kLearner };

std::string_view to_string(Role r);
Role role_from_string(std::string_view name);

struct LearnerArch {
  std::vector<int> hidden{8};
  Activation activation = Activation::kTanh;
};

// Leaf gains shared by the 2-D trees.
AttractorGains point_attractor_gains();
BarrierGains point_obstacle_gains();

// Root q with an attractor child and one obstacle child. aux = [goal, c, r].
TreeSpec make_2d1level(Role role, const LearnerArch& arch = {});

// Root q with an attractor child and an all-obstacle node that combines two
// obstacle children. aux = [goal, c1, r1, c2, r2].
TreeSpec make_2d2level(Role role, const LearnerArch& arch = {});

inline const std::vector<double> kArmLinks{1.0, 0.8, 0.6};
inline constexpr double kArmJointLimit = 2.6;

// Planar 3-link arm: end effector -> attractor, upper/lower joint limits per
// joint, control points along the links with a distance space per obstacle,
// a root damper and an identity metric. aux = [goal, c, r] per obstacle.
TreeSpec make_arm(Role role, const LearnerArch& arch = {}, int obstacles = 1);

// Root with two children whose metrics depend on position only, weighted by
// hand-set analytic weight functions.
TreeSpec make_ytree();

// Every leaf rebuilt with its damping gain set to zero.
TreeSpec without_damping(const TreeSpec& tree);

// Learner and expert of one experiment share topology and leaves.
struct FixturePair {
  TreeSpec expert;
  TreeSpec learner;
  SamplingConfig sampling;
};

FixturePair make_fixture(const std::string& name, const LearnerArch& arch = {});
std::vector<std::string> fixture_names();

// Number of parameters of a plain network with the given hidden widths from
// [q; qd; aux] to an action.
int unstructured_param_count(int q_dim, int aux_dim, const std::vector<int>& hidden);

}  // namespace rmpfusion
