#include "rmpfusion/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

namespace {

constexpr double kPanel = 360.0;
constexpr double kMargin = 40.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 5e-3 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    const double span = hi - lo;
    const double p = span > 0.0 ? 0.05 * span : 0.5;
    lo -= p;
    hi += p;
  }
};

// Maps data coordinates into a panel whose top-left corner is (ox, oy).
struct Frame {
  double ox, oy;
  Range x, y;

  double px(double v) const { return ox + (v - x.lo) / (x.hi - x.lo) * kPanel; }
  double py(double v) const { return oy + kPanel - (v - y.lo) / (y.hi - y.lo) * kPanel; }
  double scale() const { return kPanel / std::max(x.hi - x.lo, y.hi - y.lo); }
};

void axes(std::ostringstream& out, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  out << "<rect x=\"" << num(f.ox) << "\" y=\"" << num(f.oy) << "\" width=\"" << num(kPanel) << "\" height=\""
      << num(kPanel) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << num(f.ox + kPanel / 2) << "\" y=\"" << num(f.oy + kPanel + 28)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  out << "<text x=\"" << num(f.ox - 28) << "\" y=\"" << num(f.oy + kPanel / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << num(f.ox - 28) << ' '
      << num(f.oy + kPanel / 2) << ")\">" << ylabel << "</text>\n";
  out << "<text x=\"" << num(f.ox) << "\" y=\"" << num(f.oy + kPanel + 14) << "\" font-size=\"10\">" << num(f.x.lo)
      << "</text>\n";
  out << "<text x=\"" << num(f.ox + kPanel) << "\" y=\"" << num(f.oy + kPanel + 14)
      << "\" text-anchor=\"end\" font-size=\"10\">" << num(f.x.hi) << "</text>\n";
  out << "<text x=\"" << num(f.ox - 4) << "\" y=\"" << num(f.oy + kPanel) << "\" text-anchor=\"end\" font-size=\"10\">"
      << num(f.y.lo) << "</text>\n";
  out << "<text x=\"" << num(f.ox - 4) << "\" y=\"" << num(f.oy + 10) << "\" text-anchor=\"end\" font-size=\"10\">"
      << num(f.y.hi) << "</text>\n";
}

void polyline(std::ostringstream& out, const std::vector<std::pair<double, double>>& pts, const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
  }
  out << "\"/>\n";
}

std::string header(double width, double height) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out.str();
}

}  // namespace

std::string trajectory_svg(const std::vector<Trajectory>& trajs, const std::optional<Environment>& env) {
  if (trajs.empty()) throw ConfigError("plot: no trajectories");
  std::vector<std::vector<Vector>> paths;
  for (const Trajectory& t : trajs) {
    if (t.samples.empty()) throw ConfigError("plot: empty trajectory");
    std::vector<Vector> p;
    for (const Sample& s : t.samples) {
      if (env) {
        p.push_back(task_point(*env, s.q));
      } else {
        if (s.q.size() < 2) throw ConfigError("plot: trajectories need at least two coordinates without an environment");
        p.push_back(s.q.head(2));
      }
    }
    paths.push_back(std::move(p));
  }

  Frame space{kMargin + 10, kMargin, {}, {}};
  for (const auto& p : paths) {
    for (const Vector& v : p) {
      space.x.add(v[0]);
      space.y.add(v[1]);
    }
  }
  if (env) {
    space.x.add(env->goal[0]);
    space.y.add(env->goal[1]);
    for (const Obstacle& o : env->obstacles) {
      space.x.add(o.center[0] - o.radius);
      space.x.add(o.center[0] + o.radius);
      space.y.add(o.center[1] - o.radius);
      space.y.add(o.center[1] + o.radius);
    }
  }
  space.x.pad();
  space.y.pad();
  // Equal aspect ratio.
  const double span = std::max(space.x.hi - space.x.lo, space.y.hi - space.y.lo);
  const double cx = 0.5 * (space.x.lo + space.x.hi);
  const double cy = 0.5 * (space.y.lo + space.y.hi);
  space.x = {cx - span / 2, cx + span / 2};
  space.y = {cy - span / 2, cy + span / 2};

  Frame lyap{2 * kMargin + kPanel + 30, kMargin, {}, {}};
  for (const Trajectory& t : trajs) {
    for (const Sample& s : t.samples) {
      lyap.x.add(s.t);
      lyap.y.add(s.v);
    }
  }
  lyap.x.pad();
  lyap.y.pad();

  std::ostringstream out;
  out << header(3 * kMargin + 2 * kPanel + 40, 2 * kMargin + kPanel + 10);
  axes(out, space, "x", "y");
  axes(out, lyap, "t [s]", "V");
  if (env) {
    for (const Obstacle& o : env->obstacles) {
      out << "<circle cx=\"" << num(space.px(o.center[0])) << "\" cy=\"" << num(space.py(o.center[1])) << "\" r=\""
          << num(o.radius * space.scale()) << "\" fill=\"#bbb\" stroke=\"#666\"/>\n";
    }
    out << "<path d=\"M " << num(space.px(env->goal[0]) - 6) << ' ' << num(space.py(env->goal[1])) << " h 12 M "
        << num(space.px(env->goal[0])) << ' ' << num(space.py(env->goal[1]) - 6)
        << " v 12\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::vector<std::pair<double, double>> pts;
    for (const Vector& v : paths[i]) pts.emplace_back(space.px(v[0]), space.py(v[1]));
    polyline(out, pts, color);
    out << "<circle cx=\"" << num(pts.front().first) << "\" cy=\"" << num(pts.front().second)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    std::vector<std::pair<double, double>> vs;
    for (const Sample& s : trajs[i].samples) {
      if (std::isfinite(s.v)) vs.emplace_back(lyap.px(s.t), lyap.py(s.v));
    }
    if (!vs.empty()) polyline(out, vs, color);
  }
  out << "</svg>\n";
  return out.str();
}

std::string curve_svg(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw ConfigError("plot: empty learning curve");
  Frame f{kMargin + 10, kMargin, {}, {}};
  for (const CurvePoint& c : curve) {
    f.x.add(c.iteration);
    if (c.loss > 0.0) f.y.add(std::log10(c.loss));
  }
  f.x.pad();
  f.y.pad();
  std::ostringstream out;
  out << header(2 * kMargin + kPanel + 20, 2 * kMargin + kPanel + 10);
  axes(out, f, "iteration", "log10 loss");
  std::vector<std::pair<double, double>> pts;
  for (const CurvePoint& c : curve) {
    if (c.loss > 0.0) pts.emplace_back(f.px(c.iteration), f.py(std::log10(c.loss)));
  }
  polyline(out, pts, kColors[0]);
  out << "</svg>\n";
  return out.str();
}

}  // namespace rmpfusion
