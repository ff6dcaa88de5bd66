#pragma once

// Copula families used as factors of a cumulative distribution field, with
// CDF values and the mixed partial derivatives required by the chain-rule
// expansion of the field's density.

#include <cstddef>
#include <span>
#include <vector>

namespace cdfield {

enum class Family { Clayton, Independence };

const char* to_string(Family family) noexcept;

inline constexpr double kThetaMin = 1e-4;
inline constexpr double kThetaMax = 50.0;

// Arguments below this floor are raised to it inside derivative evaluations.
inline constexpr double kClampFloor = 1e-10;

class CopulaFactor {
 public:
  // Throws ErrorKind::Parameter when theta is outside [kThetaMin, kThetaMax].
  static CopulaFactor clayton(double theta, std::size_t arity);
  static CopulaFactor independence(std::size_t arity);

  Family family() const noexcept { return family_; }
  // Zero for Independence.
  double theta() const noexcept { return theta_; }
  std::size_t arity() const noexcept { return arity_; }

  CopulaFactor with_theta(double theta) const;

  friend bool operator==(const CopulaFactor&, const CopulaFactor&) = default;

 private:
  CopulaFactor(Family family, double theta, std::size_t arity)
      : family_(family), theta_(theta), arity_(arity) {}

  Family family_;
  double theta_;
  std::size_t arity_;
};

// Subsets are given as coordinate positions in [0, arity), without repeats.
using Subset = std::span<const std::size_t>;

double factor_cdf(const CopulaFactor& f, std::span<const double> v);

// d^{|S|} C / d v_S. An empty subset returns factor_cdf.
double factor_mixed_partial(const CopulaFactor& f, std::span<const double> v, Subset subset);

// log of factor_mixed_partial, accumulated in log space; -inf when the
// linear value is zero.
double factor_log_mixed_partial(const CopulaFactor& f, std::span<const double> v, Subset subset);

// Per-point quantities shared by every subset evaluated at the same argument.
// Built from log-arguments so callers holding a*log(u) avoid a pow/log round
// trip.
class FactorPoint {
 public:
  FactorPoint(const CopulaFactor& f, std::span<const double> log_v);

  // Unchecked: positions must be valid and distinct. Returns -inf for an
  // empty subset at a point with a zero argument.
  double log_mixed_partial(Subset subset) const;

 private:
  Family family_;
  double theta_;
  bool has_zero_ = false;
  double log_cdf_ = 0.0;          // unclamped
  double log_s_clamped_ = 0.0;    // Clayton generator sum on clamped arguments
  double sum_log_v_clamped_ = 0.0;
  std::vector<double> log_v_clamped_;
};

// log(sum_i v_i^{-theta} - k + 1) from log v_i <= 0, stable for both
// v_i -> 1 and v_i -> 0.
double clayton_log_generator_sum(double theta, std::span<const double> log_v);

}  // namespace cdfield
