#include "cdfield/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdfield/error.hpp"
#include "numeric.hpp"

namespace cdfield {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_arguments(const CopulaFactor& f, std::span<const double> v) {
  if (v.size() != f.arity()) {
    throw Error(ErrorKind::Argument, "copula argument has " + std::to_string(v.size()) +
                                         " coordinates, factor arity is " +
                                         std::to_string(f.arity()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw Error(ErrorKind::Domain,
                  "copula argument " + std::to_string(i) + " is outside [0, 1]");
    }
  }
}

void check_subset(const CopulaFactor& f, std::span<const double> v, Subset subset) {
  std::vector<bool> seen(f.arity(), false);
  for (std::size_t pos : subset) {
    if (pos >= f.arity()) {
      throw Error(ErrorKind::Argument, "subset position " + std::to_string(pos) +
                                           " exceeds factor arity " +
                                           std::to_string(f.arity()));
    }
    if (seen[pos]) {
      throw Error(ErrorKind::Argument, "subset position " + std::to_string(pos) + " repeated");
    }
    seen[pos] = true;
    if (v[pos] == 0.0) {
      throw Error(ErrorKind::Domain, "derivative with respect to coordinate " +
                                         std::to_string(pos) + " is unbounded at zero");
    }
  }
}

std::vector<double> logs_of(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::log(x); });
  return out;
}

}  // namespace

const char* to_string(Family family) noexcept {
  switch (family) {
    case Family::Clayton: return "clayton";
    case Family::Independence: return "independence";
  }
  return "unknown";
}

CopulaFactor CopulaFactor::clayton(double theta, std::size_t arity) {
  if (!(theta >= kThetaMin && theta <= kThetaMax)) {
    throw Error(ErrorKind::Parameter, "Clayton theta " + std::to_string(theta) +
                                          " outside [1e-4, 50]");
  }
  if (arity == 0) throw Error(ErrorKind::Argument, "factor arity must be at least 1");
  return CopulaFactor(Family::Clayton, theta, arity);
}

CopulaFactor CopulaFactor::independence(std::size_t arity) {
  if (arity == 0) throw Error(ErrorKind::Argument, "factor arity must be at least 1");
  return CopulaFactor(Family::Independence, 0.0, arity);
}

CopulaFactor CopulaFactor::with_theta(double theta) const {
  if (family_ != Family::Clayton) {
    throw Error(ErrorKind::Argument, "independence factor has no parameter");
  }
  return clayton(theta, arity_);
}

double clayton_log_generator_sum(double theta, std::span<const double> log_v) {
  // t_i = -theta log v_i >= 0, S = 1 + sum_i expm1(t_i).
  double t_max = 0.0;
  for (double lv : log_v) t_max = std::max(t_max, -theta * lv);
  if (t_max < 700.0) {
    detail::NeumaierSum acc;
    for (double lv : log_v) acc.add(std::expm1(-theta * lv));
    return std::log1p(acc.value());
  }
  detail::NeumaierSum acc;
  for (double lv : log_v) acc.add(std::exp(-theta * lv - t_max));
  acc.add(-static_cast<double>(log_v.size() - 1) * std::exp(-t_max));
  return t_max + std::log(acc.value());
}

FactorPoint::FactorPoint(const CopulaFactor& f, std::span<const double> log_v)
    : family_(f.family()), theta_(f.theta()), log_v_clamped_(log_v.begin(), log_v.end()) {
  const double log_floor = std::log(kClampFloor);
  bool clamped = false;
  for (double& lv : log_v_clamped_) {
    if (lv == kNegInf) has_zero_ = true;
    if (lv < log_floor) {
      lv = log_floor;
      clamped = true;
    }
  }
  if (family_ == Family::Clayton) {
    log_s_clamped_ = clayton_log_generator_sum(theta_, log_v_clamped_);
    if (has_zero_) {
      log_cdf_ = kNegInf;
    } else if (clamped) {
      log_cdf_ = -clayton_log_generator_sum(theta_, log_v) / theta_;
    } else {
      log_cdf_ = -log_s_clamped_ / theta_;
    }
  } else {
    detail::NeumaierSum raw;
    detail::NeumaierSum cl;
    for (std::size_t i = 0; i < log_v.size(); ++i) {
      raw.add(log_v[i]);
      cl.add(log_v_clamped_[i]);
    }
    log_cdf_ = has_zero_ ? kNegInf : raw.value();
    sum_log_v_clamped_ = cl.value();
  }
}

double FactorPoint::log_mixed_partial(Subset subset) const {
  if (subset.empty()) return log_cdf_;
  double sum_log_v = 0.0;
  for (std::size_t pos : subset) sum_log_v += log_v_clamped_[pos];
  if (family_ == Family::Independence) return sum_log_v_clamped_ - sum_log_v;

  // d^m/dv_S (S_v)^{-1/theta} = prod_{l<m}(1 + l theta) S_v^{-1/theta - m} prod v_i^{-theta-1}
  const auto m = static_cast<double>(subset.size());
  double log_rising = 0.0;
  for (std::size_t l = 1; l < subset.size(); ++l) {
    log_rising += std::log1p(static_cast<double>(l) * theta_);
  }
  return log_rising + (-1.0 / theta_ - m) * log_s_clamped_ + (-theta_ - 1.0) * sum_log_v;
}

double factor_cdf(const CopulaFactor& f, std::span<const double> v) {
  check_arguments(f, v);
  if (std::any_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) return 0.0;
  if (f.family() == Family::Independence) {
    double prod = 1.0;
    for (double x : v) prod *= x;
    return prod;
  }
  const auto log_v = logs_of(v);
  return std::exp(-clayton_log_generator_sum(f.theta(), log_v) / f.theta());
}

double factor_log_mixed_partial(const CopulaFactor& f, std::span<const double> v, Subset subset) {
  check_arguments(f, v);
  check_subset(f, v, subset);
  const auto log_v = logs_of(v);
  return FactorPoint(f, log_v).log_mixed_partial(subset);
}

double factor_mixed_partial(const CopulaFactor& f, std::span<const double> v, Subset subset) {
  if (subset.empty()) return factor_cdf(f, v);
  return std::exp(factor_log_mixed_partial(f, v, subset));
}

}  // namespace cdfield
