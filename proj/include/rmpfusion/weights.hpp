#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmpfusion/ad.hpp"
#include "rmpfusion/errors.hpp"
#include "rmpfusion/numerics.hpp"

namespace rmpfusion {

template <typename T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Lower bound added after the softplus so learned weights stay strictly positive.
inline constexpr double kWeightFloor = 1e-4;

enum class Activation { kTanh, kElu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Fully connected network shape. Parameters are laid out layer by layer as
// W (out x in, row-major) followed by b.
struct MlpArch {
  int in_dim = 0;
  std::vector<int> hidden;
  int out_dim = 1;
  Activation activation = Activation::kTanh;

  int param_count() const;
  void validate() const;
};

// Uniform(+-1/sqrt(fan_in)) for every layer, final layer scaled by 0.1.
std::vector<double> mlp_init(const MlpArch& arch, std::uint64_t seed);

namespace detail {

template <typename T>
T activate(Activation a, const T& z) {
  using std::tanh;
  using ad::tanh;
  if (a == Activation::kTanh) return tanh(z);
  using rmpfusion::elu;
  using ad::elu;
  return elu(z);
}

// d(activation)/dz expressed through the activation value h = act(z).
template <typename T>
T activate_slope(Activation a, const T& z, const T& h) {
  if (a == Activation::kTanh) return T(1.0) - h * h;
  return value_of(z) > 0.0 ? T(1.0) : h + T(1.0);
}

}  // namespace detail

// Plain forward pass.
template <typename T>
VecT<T> mlp_forward(const MlpArch& arch, std::span<const T> params, const VecT<T>& input) {
  VecT<T> h = input;
  std::size_t offset = 0;
  const auto layers = arch.hidden.size() + 1;
  int fan_in = arch.in_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    const int width = last ? arch.out_dim : arch.hidden[l];
    VecT<T> z(width);
    for (int r = 0; r < width; ++r) {
      T acc = params[offset + static_cast<std::size_t>(width * fan_in + r)];
      for (int c = 0; c < fan_in; ++c) {
        acc += params[offset + static_cast<std::size_t>(r * fan_in + c)] * h[c];
      }
      z[r] = acc;
    }
    offset += static_cast<std::size_t>(width * fan_in + width);
    if (!last) {
      for (int r = 0; r < width; ++r) z[r] = detail::activate(arch.activation, z[r]);
    }
    h = std::move(z);
    fan_in = width;
  }
  return h;
}

// Scalar-output network value and its gradient with respect to the first
// `grad_dims` inputs, propagated analytically layer by layer so that on a
// tape the gradient is itself a differentiable expression of the parameters.
template <typename T>
struct MlpValueGrad {
  T value;
  VecT<T> grad;
};

template <typename T>
MlpValueGrad<T> mlp_value_and_input_grad(const MlpArch& arch, std::span<const T> params,
                                         const VecT<T>& input, int grad_dims) {
  VecT<T> h = input;
  // tangent(r, j) = d h_r / d input_j for j < grad_dims.
  MatT<T> tangent = MatT<T>::Zero(arch.in_dim, grad_dims);
  for (int j = 0; j < grad_dims; ++j) tangent(j, j) = T(1.0);
  std::size_t offset = 0;
  const auto layers = arch.hidden.size() + 1;
  int fan_in = arch.in_dim;
  bool first = true;
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    const int width = last ? 1 : arch.hidden[l];
    VecT<T> z(width);
    MatT<T> dz(width, grad_dims);
    for (int r = 0; r < width; ++r) {
      T acc = params[offset + static_cast<std::size_t>(width * fan_in + r)];
      for (int c = 0; c < fan_in; ++c) {
        acc += params[offset + static_cast<std::size_t>(r * fan_in + c)] * h[c];
      }
      z[r] = acc;
      for (int j = 0; j < grad_dims; ++j) {
        if (first) {
          // The input tangent is the identity: read the weight directly.
          dz(r, j) = params[offset + static_cast<std::size_t>(r * fan_in + j)];
        } else {
          T d = T(0.0);
          for (int c = 0; c < fan_in; ++c) {
            d += params[offset + static_cast<std::size_t>(r * fan_in + c)] * tangent(c, j);
          }
          dz(r, j) = d;
        }
      }
    }
    offset += static_cast<std::size_t>(width * fan_in + width);
    first = false;
    if (last) {
      return MlpValueGrad<T>{z[0], dz.row(0).transpose()};
    }
    VecT<T> act(width);
    for (int r = 0; r < width; ++r) {
      act[r] = detail::activate(arch.activation, z[r]);
      const T slope = detail::activate_slope(arch.activation, z[r], act[r]);
      for (int j = 0; j < grad_dims; ++j) dz(r, j) = slope * dz(r, j);
    }
    h = std::move(act);
    tangent = std::move(dz);
    fan_in = width;
  }
  return {};  // unreachable: the last layer returns
}

enum class WeightKind { kConstant, kAnalytic, kMlp };

std::string_view to_string(WeightKind k);

// Offset and length of a weight function's parameters inside the flat
// parameter vector. Several edges may alias one slice.
struct ParamSlice {
  int offset = 0;
  int length = 0;
};

// Edge weight w(x, aux) > 0 of the parent coordinate x and auxiliary state.
//
//   constant: w = c
//   analytic: w = offset + amplitude * exp(-|x - center|^2 / (2 width^2))
//   mlp:      w = softplus(net([x; aux]; theta)) + 1e-4
class WeightFn {
 public:
  static WeightFn constant(double c);
  static WeightFn analytic(const Vector& center, double offset, double amplitude, double width);
  static WeightFn mlp(int parent_dim, int aux_dim, std::vector<int> hidden,
                      Activation activation = Activation::kTanh);

  WeightKind kind() const { return kind_; }
  bool learnable() const { return kind_ == WeightKind::kMlp; }
  int parent_dim() const { return parent_dim_; }
  int aux_dim() const { return aux_dim_; }
  int param_count() const { return learnable() ? arch_.param_count() : 0; }
  const MlpArch& arch() const { return arch_; }
  double constant_value() const { return coeffs_[0]; }
  // analytic: [offset, amplitude, width, center...]
  const std::vector<double>& coeffs() const { return coeffs_; }

  const ParamSlice& slice() const { return slice_; }
  void set_slice(ParamSlice s) { slice_ = s; }
  // Edges with the same non-empty share tag use one parameter slice.
  const std::string& share_tag() const { return share_tag_; }
  void set_share_tag(std::string tag) { share_tag_ = std::move(tag); }

 private:
  WeightKind kind_ = WeightKind::kConstant;
  int parent_dim_ = 0;
  int aux_dim_ = 0;
  MlpArch arch_;
  std::vector<double> coeffs_{1.0};
  ParamSlice slice_;
  std::string share_tag_;
};

template <typename T>
struct WeightValue {
  T value;
  VecT<T> grad_x;
};

// Evaluates w and dw/dx at the parent coordinate x. `params` is the full
// parameter vector; the function reads its own slice.
template <typename T>
WeightValue<T> weight_eval(const WeightFn& w, const Vector& x, const Vector& aux,
                           std::span<const T> params) {
  const auto n = x.size();
  switch (w.kind()) {
    case WeightKind::kConstant:
      return {T(w.constant_value()), VecT<T>::Zero(n)};
    case WeightKind::kAnalytic: {
      const auto& c = w.coeffs();
      if (static_cast<Eigen::Index>(c.size()) != n + 3) {
        throw DimensionError("weight_eval: analytic weight center dimension mismatch");
      }
      Eigen::Map<const Vector> center(c.data() + 3, n);
      const Vector diff = x - center;
      const double width2 = c[2] * c[2];
      const double bump = c[1] * std::exp(-0.5 * diff.squaredNorm() / width2);
      const Vector grad = (-bump / width2) * diff;
      return {T(c[0] + bump), grad.template cast<T>()};
    }
    case WeightKind::kMlp: {
      if (n != w.parent_dim() || aux.size() != w.aux_dim()) {
        throw DimensionError("weight_eval: expected parent dim " + std::to_string(w.parent_dim()) +
                             " and aux dim " + std::to_string(w.aux_dim()));
      }
      const ParamSlice s = w.slice();
      if (static_cast<std::size_t>(s.offset + s.length) > params.size()) {
        throw DimensionError("weight_eval: parameter vector too short for slice");
      }
      VecT<T> input(n + aux.size());
      for (Eigen::Index i = 0; i < n; ++i) input[i] = T(x[i]);
      for (Eigen::Index i = 0; i < aux.size(); ++i) input[n + i] = T(aux[i]);
      const auto raw = mlp_value_and_input_grad<T>(
          w.arch(), params.subspan(static_cast<std::size_t>(s.offset), static_cast<std::size_t>(s.length)),
          input, static_cast<int>(n));
      using rmpfusion::sigmoid;
      using rmpfusion::softplus;
      using ad::sigmoid;
      using ad::softplus;
      const T gate = sigmoid(raw.value);
      return {softplus(raw.value) + T(kWeightFloor), raw.grad * gate};
    }
  }
  throw ConfigError("weight_eval: unknown weight kind");
}

}  // namespace rmpfusion
