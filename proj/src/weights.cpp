#include "rmpfusion/weights.hpp"

#include <random>

namespace rmpfusion {

std::string_view to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "elu"; }

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "elu") return Activation::kElu;
  throw ConfigError("unsupported activation '" + std::string(name) + "' (use tanh or elu)");
}

std::string_view to_string(WeightKind k) {
  switch (k) {
    case WeightKind::kConstant:
      return "constant";
    case WeightKind::kAnalytic:
      return "analytic";
    case WeightKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

int MlpArch::param_count() const {
  int count = 0;
  int fan_in = in_dim;
  for (int width : hidden) {
    count += width * fan_in + width;
    fan_in = width;
  }
  return count + out_dim * fan_in + out_dim;
}

void MlpArch::validate() const {
  if (in_dim < 1) throw ConfigError("mlp: input dimension must be positive");
  if (out_dim < 1) throw ConfigError("mlp: output dimension must be positive");
  for (int w : hidden) {
    if (w < 1) throw ConfigError("mlp: hidden widths must be >= 1");
  }
}

std::vector<double> mlp_init(const MlpArch& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> params;
  params.reserve(static_cast<std::size_t>(arch.param_count()));
  int fan_in = arch.in_dim;
  const auto layers = arch.hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    const int width = last ? arch.out_dim : arch.hidden[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double scale = last ? 0.1 : 1.0;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int k = 0; k < width * fan_in + width; ++k) params.push_back(scale * dist(rng));
    fan_in = width;
  }
  return params;
}

WeightFn WeightFn::constant(double c) {
  if (!std::isfinite(c)) throw NumericError("constant weight must be finite");
  WeightFn w;
  w.kind_ = WeightKind::kConstant;
  w.coeffs_ = {c};
  return w;
}

WeightFn WeightFn::analytic(const Vector& center, double offset, double amplitude, double width) {
  if (!(offset > 0.0) || !(amplitude >= 0.0) || !(width > 0.0)) {
    throw ConfigError("analytic weight needs offset > 0, amplitude >= 0, width > 0");
  }
  WeightFn w;
  w.kind_ = WeightKind::kAnalytic;
  w.parent_dim_ = static_cast<int>(center.size());
  w.coeffs_ = {offset, amplitude, width};
  w.coeffs_.insert(w.coeffs_.end(), center.begin(), center.end());
  return w;
}

WeightFn WeightFn::mlp(int parent_dim, int aux_dim, std::vector<int> hidden,
                       Activation activation) {
  if (parent_dim < 1 || aux_dim < 0) throw ConfigError("mlp weight: bad input dimensions");
  WeightFn w;
  w.kind_ = WeightKind::kMlp;
  w.parent_dim_ = parent_dim;
  w.aux_dim_ = aux_dim;
  w.arch_ = MlpArch{parent_dim + aux_dim, std::move(hidden), 1, activation};
  w.arch_.validate();
  w.slice_ = ParamSlice{0, w.arch_.param_count()};
  return w;
}

}  // namespace rmpfusion
