#pragma once

#include <stdexcept>
#include <string>

namespace rmpfusion {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf or other numeric breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a point where a map is not differentiable.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters, gains, architectures or configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A precondition of the stability guarantee was broken (negative weight,
// indefinite root inertia).
class StabilityContractError : public Error {
 public:
  using Error::Error;
};

// Runs f and re-throws any library error with `context` prepended to the
// message, keeping the error type.
template <typename F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DimensionError& e) {
    throw DimensionError(context + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const SingularityError& e) {
    throw SingularityError(context + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const StabilityContractError& e) {
    throw StabilityContractError(context + ": " + e.what());
  }
}

}  // namespace rmpfusion
