#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmpfusion/learn.hpp"
#include "rmpfusion/sim.hpp"

namespace rmpfusion {

// Two panels: task-space paths with start markers, goal and obstacles (when
// `env` is given), and V against time. Throws ConfigError on empty input.
std::string trajectory_svg(const std::vector<Trajectory>& trajs, const std::optional<Environment>& env = {});

// Loss against iteration on a log10 axis.
std::string curve_svg(const std::vector<CurvePoint>& curve);

}  // namespace rmpfusion
