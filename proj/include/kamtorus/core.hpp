#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kt {

using cplx = std::complex<double>;
using i64 = std::int64_t;
using IVec = std::vector<i64>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Base of every error raised by the library. `code` is a short stable tag
// used in reports and for exit-code mapping in the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct OverflowError : Error {
  explicit OverflowError(const std::string& w) : Error("overflow", w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error("precondition", w) {}
};
struct JordanCaseError : Error {
  explicit JordanCaseError(const std::string& w) : Error("jordan_case", w) {}
};
struct SmallDivisorError : Error {
  explicit SmallDivisorError(const std::string& w) : Error("small_divisor", w) {}
};
struct ObstructionError : Error {
  explicit ObstructionError(const std::string& w) : Error("obstruction", w) {}
};
struct OrbitEscapeError : Error {
  explicit OrbitEscapeError(const std::string& w) : Error("orbit_escape", w) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error("convergence", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace kt
