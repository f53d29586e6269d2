#pragma once

#include <complex>
#include <cstdio>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace svx {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Every failure surfaced by the library derives from Error so callers (the CLI
// in particular) can map the whole family onto exit codes in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };
struct NonPositiveDimension : Error { using Error::Error; };
struct NonPositiveConformalFactor : Error { using Error::Error; };
struct GeometryMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NotProper : Error { using Error::Error; };
struct NotASolution : Error { using Error::Error; };
struct AmbiguousZero : Error { using Error::Error; };
struct LineSearchStall : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct PointsTooClose : Error { using Error::Error; };
struct SpectralFailure : Error { using Error::Error; };
struct EtaOutOfBall : Error { using Error::Error; };
struct DenominatorBlowup : Error { using Error::Error; };
struct StepBlowup : Error { using Error::Error; };
struct SnapshotVersionMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

/// Neumaier-compensated accumulator. All field reductions go through this so
/// results do not depend on anything but the (fixed) iteration order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Short form of a double for diagnostics ("%.6g").
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// SplitMix64 finalizer; used to derive independent PRNG streams from
/// (seed, index) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace svx
