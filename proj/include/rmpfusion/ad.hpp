#pragma once

// Scalar reverse-mode tape.
//
// A Var is either a constant (index < 0) or a reference to a node on the
// thread's active Tape. Arithmetic on Vars records one node per operation;
// operations whose inputs are all constants fold to constants and record
// nothing. Nodes store their opcode and operands, so a tape can be replayed
// forward from (possibly new) input values as well as swept backward.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace rmpfusion::ad {

enum class Op : std::uint8_t {
  kInput,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kAddConst,  // a + c
  kMulConst,  // a * c
  kConstSub,  // c - a
  kConstDiv,  // c / a
  kNeg,
  kExp,
  kLog,
  kLog1p,
  kSqrt,
  kTanh,
  kElu,
  kSoftplus,
  kSigmoid,
  kSin,
  kCos,
};

enum class InputTag : std::uint8_t { kState, kAux, kParam };

struct Node {
  Op op;
  std::int32_t a;
  std::int32_t b;
  double c;
  double value;
};

class Tape {
 public:
  std::int32_t push(Op op, std::int32_t a, std::int32_t b, double c, double value) {
    nodes_.push_back(Node{op, a, b, c, value});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t add_input(double value, InputTag tag) {
    const std::int32_t idx = push(Op::kInput, -1, -1, 0.0, value);
    inputs_.push_back(idx);
    tags_.push_back(tag);
    return idx;
  }

  // Drops every node but keeps the allocation.
  void clear() {
    nodes_.clear();
    inputs_.clear();
    tags_.clear();
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
  double value(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)].value; }
  const std::vector<std::int32_t>& inputs() const { return inputs_; }
  const std::vector<InputTag>& input_tags() const { return tags_; }

  // Reverse sweep seeded with d(output)/d(seed[i].first) = seed[i].second.
  // Returns adjoints for every node.
  std::vector<double> backward(std::span<const std::pair<std::int32_t, double>> seeds) const;

  // Recomputes every node value from the given input values (one per input,
  // in registration order) and stores them. Used to check that the tape
  // faithfully encodes the forward computation.
  void replay(std::span<const double> input_values);

 private:
  std::vector<Node> nodes_;
  std::vector<std::int32_t> inputs_;
  std::vector<InputTag> tags_;
};

// The tape that Var arithmetic records onto for the calling thread.
Tape* active_tape();

// Installs `tape` as the active tape for the current thread for the lifetime
// of the guard.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT(google-explicit-constructor): constants mix freely
  Var(double v, std::int32_t index) : value_(v), index_(index) {}

  static Var input(double v, InputTag tag = InputTag::kParam) {
    return Var(v, active_tape()->add_input(v, tag));
  }

  double value() const { return value_; }
  std::int32_t index() const { return index_; }
  bool is_constant() const { return index_ < 0; }

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }
  Var& operator/=(const Var& o) { return *this = *this / o; }

  friend Var operator+(const Var& x, const Var& y);
  friend Var operator-(const Var& x, const Var& y);
  friend Var operator*(const Var& x, const Var& y);
  friend Var operator/(const Var& x, const Var& y);
  friend Var operator-(const Var& x);

 private:
  double value_ = 0.0;
  std::int32_t index_ = -1;
};

namespace detail {
inline Var record(Op op, const Var& x, double c, double value) {
  return Var(value, active_tape()->push(op, x.index(), -1, c, value));
}
inline Var record2(Op op, const Var& x, const Var& y, double value) {
  return Var(value, active_tape()->push(op, x.index(), y.index(), 0.0, value));
}
}  // namespace detail

inline Var operator+(const Var& x, const Var& y) {
  const double v = x.value_ + y.value_;
  if (x.is_constant() && y.is_constant()) return Var(v);
  if (x.is_constant()) return x.value_ == 0.0 ? y : detail::record(Op::kAddConst, y, x.value_, v);
  if (y.is_constant()) return y.value_ == 0.0 ? x : detail::record(Op::kAddConst, x, y.value_, v);
  return detail::record2(Op::kAdd, x, y, v);
}

inline Var operator-(const Var& x, const Var& y) {
  const double v = x.value_ - y.value_;
  if (x.is_constant() && y.is_constant()) return Var(v);
  if (x.is_constant()) return detail::record(Op::kConstSub, y, x.value_, v);
  if (y.is_constant()) return y.value_ == 0.0 ? x : detail::record(Op::kAddConst, x, -y.value_, v);
  return detail::record2(Op::kSub, x, y, v);
}

inline Var operator*(const Var& x, const Var& y) {
  const double v = x.value_ * y.value_;
  if (x.is_constant() && y.is_constant()) return Var(v);
  if (x.is_constant()) {
    if (x.value_ == 0.0) return Var(0.0);
    if (x.value_ == 1.0) return y;
    return detail::record(Op::kMulConst, y, x.value_, v);
  }
  if (y.is_constant()) {
    if (y.value_ == 0.0) return Var(0.0);
    if (y.value_ == 1.0) return x;
    return detail::record(Op::kMulConst, x, y.value_, v);
  }
  return detail::record2(Op::kMul, x, y, v);
}

inline Var operator/(const Var& x, const Var& y) {
  const double v = x.value_ / y.value_;
  if (x.is_constant() && y.is_constant()) return Var(v);
  if (y.is_constant()) return detail::record(Op::kMulConst, x, 1.0 / y.value_, x.value_ * (1.0 / y.value_));
  if (x.is_constant()) return detail::record(Op::kConstDiv, y, x.value_, v);
  return detail::record2(Op::kDiv, x, y, v);
}

inline Var operator-(const Var& x) {
  if (x.is_constant()) return Var(-x.value_);
  return detail::record(Op::kNeg, x, 0.0, -x.value_);
}

inline bool operator<(const Var& x, const Var& y) { return x.value() < y.value(); }
inline bool operator>(const Var& x, const Var& y) { return x.value() > y.value(); }
inline bool operator<=(const Var& x, const Var& y) { return x.value() <= y.value(); }
inline bool operator>=(const Var& x, const Var& y) { return x.value() >= y.value(); }
inline bool operator==(const Var& x, const Var& y) { return x.value() == y.value(); }
inline bool operator!=(const Var& x, const Var& y) { return x.value() != y.value(); }

inline double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double elu_value(double x) { return x > 0.0 ? x : std::expm1(x); }

#define RMPFUSION_AD_UNARY(name, op, expr)                        \
  inline Var name(const Var& x) {                                 \
    const double a = x.value();                                   \
    const double v = (expr);                                      \
    if (x.is_constant()) return Var(v);                           \
    return detail::record(Op::op, x, 0.0, v);                     \
  }

RMPFUSION_AD_UNARY(exp, kExp, std::exp(a))
RMPFUSION_AD_UNARY(log, kLog, std::log(a))
RMPFUSION_AD_UNARY(log1p, kLog1p, std::log1p(a))
RMPFUSION_AD_UNARY(sqrt, kSqrt, std::sqrt(a))
RMPFUSION_AD_UNARY(tanh, kTanh, std::tanh(a))
RMPFUSION_AD_UNARY(elu, kElu, elu_value(a))
RMPFUSION_AD_UNARY(softplus, kSoftplus, softplus_value(a))
RMPFUSION_AD_UNARY(sigmoid, kSigmoid, sigmoid_value(a))
RMPFUSION_AD_UNARY(sin, kSin, std::sin(a))
RMPFUSION_AD_UNARY(cos, kCos, std::cos(a))

#undef RMPFUSION_AD_UNARY

inline Var abs(const Var& x) { return x.value() < 0.0 ? -x : x; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

}  // namespace rmpfusion::ad

// Scalar-generic helpers so templated code can call elu/softplus/sigmoid on
// plain doubles too.
namespace rmpfusion {
inline double elu(double x) { return ad::elu_value(x); }
inline double softplus(double x) { return ad::softplus_value(x); }
inline double sigmoid(double x) { return ad::sigmoid_value(x); }
using ad::value_of;
}  // namespace rmpfusion

namespace Eigen {
template <>
struct NumTraits<rmpfusion::ad::Var> : NumTraits<double> {
  using Real = rmpfusion::ad::Var;
  using NonInteger = rmpfusion::ad::Var;
  using Nested = rmpfusion::ad::Var;
  using Literal = rmpfusion::ad::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 4
  };
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<rmpfusion::ad::Var, double, BinaryOp> {
  using ReturnType = rmpfusion::ad::Var;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, rmpfusion::ad::Var, BinaryOp> {
  using ReturnType = rmpfusion::ad::Var;
};
}  // namespace Eigen
