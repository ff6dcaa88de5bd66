#include "cdfield/latent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cdfield/error.hpp"
#include "numeric.hpp"

namespace cdfield {

namespace {

constexpr double kInvertTolerance = 1e-12;
constexpr int kInvertMaxIterations = 200;

void check_conditional(const CdnModel& m, std::size_t i, std::span<const double> h_row) {
  if (i >= m.num_variables()) throw Error(ErrorKind::Argument, "variable index out of range");
  if (h_row.size() != m.num_factors()) {
    throw Error(ErrorKind::Argument, "latent row has " + std::to_string(h_row.size()) +
                                         " entries, model has " +
                                         std::to_string(m.num_factors()) + " factors");
  }
  for (std::size_t j : parents(m, i)) {
    if (m.factor(j).family() != Family::Clayton) {
      throw Error(ErrorKind::UnsupportedFamily,
                  "factor " + std::to_string(j) + " has no latent representation");
    }
    if (!(h_row[j] > 0.0) || !std::isfinite(h_row[j])) {
      throw Error(ErrorKind::Parameter, "latent value for factor " + std::to_string(j) +
                                            " must be positive and finite");
    }
  }
}

// -log P(U_i <= e^t | h) for t = log u <= 0.
double neg_log_cdf_at(const CdnModel& m, std::size_t i, double log_u,
                      std::span<const double> h_row) {
  double acc = 0.0;
  for (std::size_t j : parents(m, i)) {
    const double ta = m.factor(j).theta() * m.exponent(i, j);
    acc += h_row[j] * std::expm1(-ta * log_u);
  }
  return acc;
}

void require_all_clayton(const CdnModel& m) {
  if (!m.all_clayton()) {
    throw Error(ErrorKind::UnsupportedFamily,
                "latent sampling requires every factor to be Clayton");
  }
}

}  // namespace

double log_gamma_pdf(double x, double shape) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x - std::lgamma(shape);
}

double log_conditional_cdf(const CdnModel& m, std::size_t i, double u,
                           std::span<const double> h_row) {
  check_conditional(m, i, h_row);
  if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::Domain, "u outside [0, 1]");
  if (u == 0.0) return -std::numeric_limits<double>::infinity();
  return -neg_log_cdf_at(m, i, std::log(u), h_row);
}

double conditional_cdf(const CdnModel& m, std::size_t i, double u, std::span<const double> h_row) {
  return std::exp(log_conditional_cdf(m, i, u, h_row));
}

double log_conditional_pdf(const CdnModel& m, std::size_t i, double u,
                           std::span<const double> h_row) {
  check_conditional(m, i, h_row);
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorKind::Domain, "u outside (0, 1)");
  const double log_u = std::log(u);
  std::vector<double> terms;
  const auto par = parents(m, i);
  terms.reserve(par.size());
  double log_cdf = 0.0;
  for (std::size_t j : par) {
    const double ta = m.factor(j).theta() * m.exponent(i, j);
    log_cdf -= h_row[j] * std::expm1(-ta * log_u);
    terms.push_back(std::log(ta * h_row[j]) + (-ta - 1.0) * log_u);
  }
  return log_cdf + detail::log_sum_exp(terms);
}

double conditional_pdf(const CdnModel& m, std::size_t i, double u, std::span<const double> h_row) {
  return std::exp(log_conditional_pdf(m, i, u, h_row));
}

double invert_conditional_cdf(const CdnModel& m, std::size_t i, double x,
                              std::span<const double> h_row) {
  check_conditional(m, i, h_row);
  if (!(x > 0.0 && x < 1.0)) throw Error(ErrorKind::Domain, "target probability outside (0, 1)");
  const auto par = parents(m, i);
  if (par.size() == 1) {
    const std::size_t j = par[0];
    const double ta = m.factor(j).theta() * m.exponent(i, j);
    return std::exp(-std::log1p(-std::log(x) / h_row[j]) / ta);
  }

  // Bracket in t = log u, then bisect. F is strictly increasing in t.
  const double target = -std::log(x);
  auto residual = [&](double t) { return std::exp(-neg_log_cdf_at(m, i, t, h_row)) - x; };
  double hi = 0.0;
  double lo = -1.0;
  while (neg_log_cdf_at(m, i, lo, h_row) < target) {
    lo *= 2.0;
    if (lo < -745.0) return std::numeric_limits<double>::denorm_min();
  }
  for (int it = 0; it < kInvertMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::isnan(r)) break;
    if (std::abs(r) <= kInvertTolerance) return std::exp(mid);
    if (mid == lo || mid == hi) {
      // Adjacent doubles: this is the inverse to machine precision.
      return std::abs(residual(lo)) < std::abs(residual(hi)) ? std::exp(lo) : std::exp(hi);
    }
    (r < 0.0 ? lo : hi) = mid;
  }
  throw Error(ErrorKind::Convergence, "conditional CDF inversion for variable " +
                                          std::to_string(i) + " did not converge");
}

LatentState sample_latents(const CdnModel& m, std::size_t n, Rng& rng) {
  require_all_clayton(m);
  const std::size_t K = m.num_factors();
  LatentState h(n, K);
  std::vector<std::gamma_distribution<double>> gammas;
  for (std::size_t j = 0; j < K; ++j) gammas.emplace_back(1.0 / m.factor(j).theta(), 1.0);
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t j = 0; j < K; ++j) {
      // Shapes well below 1 can underflow to zero.
      h(d, j) = std::max(gammas[j](rng), std::numeric_limits<double>::min());
    }
  }
  return h;
}

DataMatrix sample_dataset(const CdnModel& m, std::size_t n, Rng& rng) {
  require_all_clayton(m);
  const std::size_t p = m.num_variables();
  DataMatrix out(n, p);
  const double below_one = std::nextafter(1.0, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    const auto h = sample_latents(m, 1, rng);
    for (std::size_t i = 0; i < p; ++i) {
      const double x = uniform_open(rng);
      double u = invert_conditional_cdf(m, i, x, h.row(0));
      u = std::clamp(u, std::numeric_limits<double>::min(), below_one);
      out(d, i) = u;
    }
  }
  return out;
}

double augmented_loglik_continuous(const CdnModel& m, const DataMatrix& data,
                                   const LatentState& latents) {
  require_all_clayton(m);
  if (data.rows() != latents.rows() || (data.rows() > 0 && (data.cols() != m.num_variables() ||
                                                            latents.cols() != m.num_factors()))) {
    throw Error(ErrorKind::Argument, "data and latent shapes do not match the model");
  }
  detail::NeumaierSum acc;
  for (std::size_t d = 0; d < data.rows(); ++d) {
    for (std::size_t j = 0; j < m.num_factors(); ++j) {
      const double h = latents(d, j);
      if (!(h > 0.0)) {
        throw Error(ErrorKind::Parameter, "latent (" + std::to_string(d) + ", " +
                                              std::to_string(j) + ") is not positive");
      }
      acc.add(log_gamma_pdf(h, 1.0 / m.factor(j).theta()));
    }
    for (std::size_t i = 0; i < m.num_variables(); ++i) {
      try {
        acc.add(log_conditional_pdf(m, i, data(d, i), latents.row(d)));
      } catch (const Error& e) {
        throw Error(e.kind(), "row " + std::to_string(d) + ", variable " + std::to_string(i) +
                                  ": " + e.what());
      }
    }
  }
  return acc.value();
}

}  // namespace cdfield
