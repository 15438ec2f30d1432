#include "rmpfusion/ad.hpp"

#include <stdexcept>

#include "rmpfusion/errors.hpp"

namespace rmpfusion::ad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() {
  if (g_active_tape == nullptr) {
    throw Error("ad: no active tape on this thread (construct a TapeScope first)");
  }
  return g_active_tape;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

std::vector<double> Tape::backward(std::span<const std::pair<std::int32_t, double>> seeds) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  for (const auto& [idx, g] : seeds) {
    if (idx >= 0) adj[static_cast<std::size_t>(idx)] += g;
  }
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    const double g = adj[k];
    if (g == 0.0) continue;
    const Node& n = nodes_[k];
    auto bump = [&adj](std::int32_t i, double d) {
      if (i >= 0) adj[static_cast<std::size_t>(i)] += d;
    };
    const double va = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value : 0.0;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kAdd:
        bump(n.a, g);
        bump(n.b, g);
        break;
      case Op::kSub:
        bump(n.a, g);
        bump(n.b, -g);
        break;
      case Op::kMul:
        bump(n.a, g * nodes_[static_cast<std::size_t>(n.b)].value);
        bump(n.b, g * va);
        break;
      case Op::kDiv: {
        const double vb = nodes_[static_cast<std::size_t>(n.b)].value;
        bump(n.a, g / vb);
        bump(n.b, -g * n.value / vb);
        break;
      }
      case Op::kAddConst:
        bump(n.a, g);
        break;
      case Op::kMulConst:
        bump(n.a, g * n.c);
        break;
      case Op::kConstSub:
        bump(n.a, -g);
        break;
      case Op::kConstDiv:
        bump(n.a, -g * n.value / va);
        break;
      case Op::kNeg:
        bump(n.a, -g);
        break;
      case Op::kExp:
        bump(n.a, g * n.value);
        break;
      case Op::kLog:
        bump(n.a, g / va);
        break;
      case Op::kLog1p:
        bump(n.a, g / (1.0 + va));
        break;
      case Op::kSqrt:
        bump(n.a, g / (2.0 * n.value));
        break;
      case Op::kTanh:
        bump(n.a, g * (1.0 - n.value * n.value));
        break;
      case Op::kElu:
        bump(n.a, va > 0.0 ? g : g * (n.value + 1.0));
        break;
      case Op::kSoftplus:
        bump(n.a, g * sigmoid_value(va));
        break;
      case Op::kSigmoid:
        bump(n.a, g * n.value * (1.0 - n.value));
        break;
      case Op::kSin:
        bump(n.a, g * std::cos(va));
        break;
      case Op::kCos:
        bump(n.a, -g * std::sin(va));
        break;
    }
  }
  return adj;
}

void Tape::replay(std::span<const double> input_values) {
  if (input_values.size() != inputs_.size()) {
    throw DimensionError("Tape::replay: expected " + std::to_string(inputs_.size()) +
                         " input values");
  }
  std::size_t next_input = 0;
  for (Node& n : nodes_) {
    const double va = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value : 0.0;
    const double vb = n.b >= 0 ? nodes_[static_cast<std::size_t>(n.b)].value : 0.0;
    switch (n.op) {
      case Op::kInput:
        n.value = input_values[next_input++];
        break;
      case Op::kAdd:
        n.value = va + vb;
        break;
      case Op::kSub:
        n.value = va - vb;
        break;
      case Op::kMul:
        n.value = va * vb;
        break;
      case Op::kDiv:
        n.value = va / vb;
        break;
      case Op::kAddConst:
        n.value = va + n.c;
        break;
      case Op::kMulConst:
        n.value = va * n.c;
        break;
      case Op::kConstSub:
        n.value = n.c - va;
        break;
      case Op::kConstDiv:
        n.value = n.c / va;
        break;
      case Op::kNeg:
        n.value = -va;
        break;
      case Op::kExp:
        n.value = std::exp(va);
        break;
      case Op::kLog:
        n.value = std::log(va);
        break;
      case Op::kLog1p:
        n.value = std::log1p(va);
        break;
      case Op::kSqrt:
        n.value = std::sqrt(va);
        break;
      case Op::kTanh:
        n.value = std::tanh(va);
        break;
      case Op::kElu:
        n.value = elu_value(va);
        break;
      case Op::kSoftplus:
        n.value = softplus_value(va);
        break;
      case Op::kSigmoid:
        n.value = sigmoid_value(va);
        break;
      case Op::kSin:
        n.value = std::sin(va);
        break;
      case Op::kCos:
        n.value = std::cos(va);
        break;
    }
  }
}

}  // namespace rmpfusion::ad
