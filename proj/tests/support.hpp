#pragma once

// Independent reference formulas and random-model generators shared by the
// test binaries. Nothing here calls into the evaluators it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "cdfield/model.hpp"
#include "cdfield/rng.hpp"

namespace testing {

// Bivariate Clayton density, textbook form.
inline double clayton2_density(double theta, double u, double v) {
  const double s = std::pow(u, -theta) + std::pow(v, -theta) - 1.0;
  return (1.0 + theta) * std::pow(u * v, -theta - 1.0) * std::pow(s, -1.0 / theta - 2.0);
}

inline double clayton_cdf(double theta, const std::vector<double>& v) {
  double s = 1.0 - static_cast<double>(v.size());
  for (double x : v) s += std::pow(x, -theta);
  return std::pow(s, -1.0 / theta);
}

// Mixed central difference d^n f / du_0..du_{n-1}, step h in every coordinate.
inline double mixed_central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& u, double h) {
  const std::size_t n = u.size();
  double total = 0.0;
  std::vector<double> x(n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    int sign = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const bool plus = (mask >> i) & 1U;
      x[i] = u[i] + (plus ? h : -h);
      if (!plus) sign = -sign;
    }
    total += sign * f(x);
  }
  return total / std::pow(2.0 * h, static_cast<double>(n));
}

// Central differences are O(h^2); one Richardson step cancels that term.
inline double richardson_mixed_difference(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& u,
    double h) {
  return (4.0 * mixed_central_difference(f, u, h / 2.0) - mixed_central_difference(f, u, h)) / 3.0;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

struct RandomModelOptions {
  std::size_t max_variables = 8;
  std::size_t max_factors = 8;
  std::size_t max_scope = 3;
  double theta_lo = 0.1;
  double theta_hi = 5.0;
};

// Random all-Clayton model: every variable covered, scopes bounded, uniform
// exponents.
inline cdfield::CdnModel random_model(cdfield::Rng& rng, const RandomModelOptions& opt = {}) {
  std::uniform_int_distribution<std::size_t> pick_p(2, opt.max_variables);
  const std::size_t p = pick_p(rng);
  const std::size_t k_min = (p + opt.max_scope - 1) / opt.max_scope;
  std::uniform_int_distribution<std::size_t> pick_k(k_min, opt.max_factors);
  const std::size_t K = pick_k(rng);
  std::vector<std::vector<std::size_t>> scopes(K);

  std::vector<std::size_t> vars(p);
  std::iota(vars.begin(), vars.end(), 0);
  std::shuffle(vars.begin(), vars.end(), rng);
  for (std::size_t i : vars) {
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < K; ++j) {
      if (scopes[j].size() < opt.max_scope) open.push_back(j);
    }
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    scopes[open[pick(rng)]].push_back(i);
  }
  std::uniform_int_distribution<std::size_t> pick_var(0, p - 1);
  std::uniform_int_distribution<std::size_t> pick_size(1, opt.max_scope);
  for (auto& s : scopes) {
    const std::size_t target = pick_size(rng);
    for (int tries = 0; s.size() < target && tries < 20; ++tries) {
      const std::size_t i = pick_var(rng);
      if (std::find(s.begin(), s.end(), i) == s.end()) s.push_back(i);
    }
    std::sort(s.begin(), s.end());
  }

  std::uniform_real_distribution<double> pick_theta(opt.theta_lo, opt.theta_hi);
  std::vector<cdfield::FactorSpec> specs;
  for (auto& s : scopes) specs.push_back({cdfield::Family::Clayton, pick_theta(rng), s});
  return cdfield::build_model(p, specs);
}

inline std::vector<double> random_interior(cdfield::Rng& rng, std::size_t n, double lo = 0.02,
                                           double hi = 0.98) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> u(n);
  for (auto& x : u) x = unif(rng);
  return u;
}

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 1).
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    d = std::max({d, (k + 1) / n - x[k], x[k] - k / n});
  }
  return d;
}

}  // namespace testing
