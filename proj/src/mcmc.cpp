#include "cdfield/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cdfield/latent.hpp"
#include "numeric.hpp"

namespace cdfield {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCollapseWidth = 1e-14;

const double kLogThetaMin = std::log(kThetaMin);
const double kLogThetaMax = std::log(kThetaMax);

void check_data(const CdnModel& m, const DataMatrix& data) {
  if (data.empty()) return;
  if (data.cols() != m.num_variables()) {
    throw Error(ErrorKind::Validation, "data has " + std::to_string(data.cols()) +
                                           " columns, model has " +
                                           std::to_string(m.num_variables()) + " variables");
  }
  for (std::size_t d = 0; d < data.rows(); ++d) {
    for (std::size_t i = 0; i < data.cols(); ++i) {
      const double u = data(d, i);
      if (!(u > 0.0 && u < 1.0)) {
        throw Error(ErrorKind::Validation, "row " + std::to_string(d) + ", variable " +
                                               std::to_string(i) +
                                               ": value is not in the open unit interval");
      }
    }
  }
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain:
    case ErrorKind::DegenerateConditional:
    case ErrorKind::Convergence:
    case ErrorKind::Precondition:
    case ErrorKind::Parameter:
      return true;
    default:
      return false;
  }
}

// Shared bookkeeping: parameter list, kept-row schedule, slice updates of
// log theta against a caller-supplied conditional log likelihood.
class Chain {
 public:
  Chain(SamplerKind kind, const CdnModel& m, const Prior& prior, const SamplerConfig& config,
        Rng& rng)
      : prior_(prior), config_(config), rng_(rng), model_(m) {
    config.validate();
    prior.validate();
    trace_.sampler = kind;
    trace_.config = config;
    trace_.parameters = m.clayton_factors();
    burn_in_ = config.resolved_burn_in();
  }

  const CdnModel& model() const { return model_; }
  Rng& rng() { return rng_; }
  Trace& trace() { return trace_; }

  // Slice update of log theta_j. loglik_given(theta) is the part of the log
  // likelihood that depends on theta_j; loglik_now its value at the current
  // theta_j.
  template <typename F>
  double update_theta(std::size_t j, F&& loglik_given, double loglik_now) {
    const auto target = [&](double eta) {
      if (eta < kLogThetaMin || eta > kLogThetaMax) return kNegInf;
      const double theta = std::exp(eta);
      return loglik_given(theta) + prior_.log_density(theta) + eta;
    };
    const double theta0 = model_.factor(j).theta();
    const double eta0 = std::log(theta0);
    const double f0 = loglik_now + prior_.log_density(theta0) + eta0;
    const auto res = slice_sample(target, eta0, f0, config_.slice_width, config_.max_stepouts, rng_);
    ++trace_.slice_updates;
    trace_.slice_evaluations += res.evaluations;
    if (res.collapsed) ++trace_.slice_collapses;
    const double theta = std::exp(res.x);
    model_ = model_.with_theta(j, std::clamp(theta, kThetaMin, kThetaMax));
    return res.log_density - prior_.log_density(theta) - res.x;
  }

  double log_prior() const {
    double lp = 0.0;
    for (std::size_t j : trace_.parameters) lp += prior_.log_density(model_.factor(j).theta());
    return lp;
  }

  bool keep(std::size_t it) const {
    return it >= burn_in_ && (it - burn_in_ + 1) % config_.thin == 0;
  }

  void record(std::size_t it, double log_post) {
    std::vector<double> row;
    row.reserve(trace_.parameters.size());
    for (std::size_t j : trace_.parameters) row.push_back(model_.factor(j).theta());
    trace_.iterations.push_back(it);
    trace_.theta.push_back(std::move(row));
    trace_.log_post.push_back(log_post);
  }

  // Runs body(it) for every iteration, stopping on numerical failure.
  template <typename F>
  void run(F&& body) {
    for (std::size_t it = 0; it < config_.iterations; ++it) {
      try {
        body(it);
      } catch (const Error& e) {
        if (!is_numerical(e.kind())) throw;
        trace_.failure = "iteration " + std::to_string(it) + ": " + e.what();
        trace_.failure_kind = e.kind();
        return;
      }
    }
  }

 private:
  const Prior& prior_;
  const SamplerConfig& config_;
  Rng& rng_;
  CdnModel model_;
  Trace trace_;
  std::size_t burn_in_ = 0;
};

}  // namespace

void Prior::validate() const {
  if (!(shape > 0.0 && rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw Error(ErrorKind::Validation, "prior shape and rate must be positive");
  }
}

double Prior::log_density(double theta) const {
  if (!(theta > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(theta) -
         rate * theta;
}

const char* to_string(SamplerKind kind) noexcept {
  switch (kind) {
    case SamplerKind::Collapsed: return "collapsed";
    case SamplerKind::DiscreteLatent: return "discrete";
    case SamplerKind::ContinuousLatent: return "continuous";
  }
  return "unknown";
}

std::optional<SamplerKind> parse_sampler_kind(std::string_view name) {
  if (name == "collapsed") return SamplerKind::Collapsed;
  if (name == "discrete") return SamplerKind::DiscreteLatent;
  if (name == "continuous") return SamplerKind::ContinuousLatent;
  return std::nullopt;
}

std::size_t SamplerConfig::resolved_burn_in() const {
  return burn_in.value_or(iterations / 5);
}

std::size_t SamplerConfig::kept_rows() const {
  const auto b = resolved_burn_in();
  return b >= iterations ? 0 : (iterations - b) / thin;
}

void SamplerConfig::validate() const {
  const auto b = resolved_burn_in();
  if (iterations > 0 ? b >= iterations : b != 0) {
    throw Error(ErrorKind::Validation, "burn-in must be smaller than the iteration count");
  }
  if (thin == 0) throw Error(ErrorKind::Validation, "thinning must be at least 1");
  if (!(slice_width > 0.0) || !std::isfinite(slice_width)) {
    throw Error(ErrorKind::Validation, "slice width must be positive");
  }
  if (!(rw_std > 0.0) || !std::isfinite(rw_std)) {
    throw Error(ErrorKind::Validation, "random-walk standard deviation must be positive");
  }
}

SliceResult slice_sample(const LogDensity& log_density, double x0, double w,
                         std::size_t max_stepouts, Rng& rng) {
  return slice_sample(log_density, x0, log_density(x0), w, max_stepouts, rng);
}

SliceResult slice_sample(const LogDensity& log_density, double x0, double log_density_x0, double w,
                         std::size_t max_stepouts, Rng& rng) {
  if (!std::isfinite(log_density_x0)) {
    throw Error(ErrorKind::Precondition, "slice sampler started at a point of zero density");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  SliceResult out;
  const double level = log_density_x0 - expo(rng);

  double left = x0 - w * unif(rng);
  double right = left + w;
  auto steps_left = static_cast<std::size_t>(std::floor(static_cast<double>(max_stepouts) * unif(rng)));
  std::size_t steps_right = max_stepouts > 0 ? max_stepouts - 1 - steps_left : 0;
  if (max_stepouts == 0) steps_left = 0;

  auto eval = [&](double x) {
    ++out.evaluations;
    return log_density(x);
  };
  while (steps_left > 0 && eval(left) > level) {
    left -= w;
    --steps_left;
  }
  while (steps_right > 0 && eval(right) > level) {
    right += w;
    --steps_right;
  }
  for (;;) {
    const double x1 = left + unif(rng) * (right - left);
    const double f1 = eval(x1);
    if (f1 > level) {
      out.x = x1;
      out.log_density = f1;
      return out;
    }
    if (x1 < x0) left = x1;
    else right = x1;
    if (right - left < kCollapseWidth) {
      out.x = x0;
      out.log_density = log_density_x0;
      out.collapsed = true;
      return out;
    }
  }
}

std::vector<double> Trace::column(std::size_t k) const {
  std::vector<double> out;
  out.reserve(theta.size());
  for (const auto& row : theta) out.push_back(row.at(k));
  return out;
}

Trace run_collapsed(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                    const SamplerConfig& config, Rng& rng) {
  check_data(m, data);
  Chain chain(SamplerKind::Collapsed, m, prior, config, rng);
  DensityEvaluator evaluator(m, config.treewidth_cap);

  auto loglik_of = [&](const CdnModel& mm) {
    detail::NeumaierSum acc;
    for (std::size_t d = 0; d < data.rows(); ++d) acc.add(evaluator.log_density(mm, data.row(d)));
    return acc.value();
  };

  double current = 0.0;
  bool started = false;
  chain.run([&](std::size_t it) {
    if (!started) {
      current = loglik_of(chain.model());
      started = true;
    }
    for (std::size_t j : chain.trace().parameters) {
      current = chain.update_theta(
          j, [&](double theta) { return loglik_of(chain.model().with_theta(j, theta)); }, current);
    }
    if (chain.keep(it)) chain.record(it, current + chain.log_prior());
  });
  return std::move(chain.trace());
}

Trace run_discrete_latent(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                          const SamplerConfig& config, Rng& rng) {
  check_data(m, data);
  Chain chain(SamplerKind::DiscreteLatent, m, prior, config, rng);
  const std::size_t N = data.rows();
  const std::size_t p = m.num_variables();

  // z(d, i) starts at the first factor of Z_i.
  std::vector<std::size_t> z(N * p);
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < p; ++i) z[d * p + i] = m.z_domain(i)[0];
  }
  auto z_row = [&](std::size_t d) { return std::span<const std::size_t>(z.data() + d * p, p); };

  std::vector<std::size_t> zs;
  auto factor_term = [&](const CdnModel& mm, std::size_t j) {
    const auto scope = mm.scope(j);
    detail::NeumaierSum acc;
    for (std::size_t d = 0; d < N; ++d) {
      zs.resize(scope.size());
      for (std::size_t r = 0; r < scope.size(); ++r) zs[r] = z[d * p + scope[r]];
      acc.add(log_phi(mm, j, data.row(d), zs));
    }
    return acc.value();
  };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  chain.run([&](std::size_t it) {
    for (std::size_t d = 0; d < N; ++d) {
      for (std::size_t i = 0; i < p; ++i) {
        const auto dom = m.z_domain(i);
        if (dom.size() == 1) continue;
        std::vector<double> w;
        try {
          w = gibbs_local_weights(chain.model(), data.row(d), z_row(d), i);
        } catch (const Error& e) {
          throw Error(e.kind(), "datapoint " + std::to_string(d) + ": " + e.what());
        }
        const double r = unif(chain.rng());
        double cum = 0.0;
        std::size_t pick = dom.size() - 1;
        for (std::size_t c = 0; c < dom.size(); ++c) {
          cum += w[c];
          if (r < cum) {
            pick = c;
            break;
          }
        }
        z[d * p + i] = dom[pick];
      }
    }
    for (std::size_t j : chain.trace().parameters) {
      const double now = factor_term(chain.model(), j);
      chain.update_theta(
          j, [&](double theta) { return factor_term(chain.model().with_theta(j, theta), j); }, now);
    }
    if (chain.keep(it)) {
      detail::NeumaierSum acc;
      for (std::size_t j = 0; j < m.num_factors(); ++j) acc.add(factor_term(chain.model(), j));
      chain.record(it, acc.value() + chain.log_prior());
    }
  });
  return std::move(chain.trace());
}

Trace run_continuous_latent(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                            const SamplerConfig& config, Rng& rng) {
  if (!m.all_clayton()) {
    throw Error(ErrorKind::UnsupportedFamily,
                "the continuous latent sampler requires every factor to be Clayton");
  }
  check_data(m, data);
  Chain chain(SamplerKind::ContinuousLatent, m, prior, config, rng);
  const std::size_t N = data.rows();
  const std::size_t p = m.num_variables();
  const std::size_t K = m.num_factors();

  std::vector<double> log_u(N * p);
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < p; ++i) log_u[d * p + i] = std::log(data(d, i));
  }
  LatentState h = sample_latents(m, N, chain.rng());

  std::vector<double> terms;
  // log p_i(u_i | h) with the given parameter vector.
  auto log_cond = [&](std::span<const double> thetas, std::size_t d, std::size_t i) {
    const double lu = log_u[d * p + i];
    double log_cdf = 0.0;
    terms.clear();
    for (std::size_t j : m.z_domain(i)) {
      const double ta = thetas[j] * m.exponent(i, j);
      const double hj = h(d, j);
      log_cdf -= hj * std::expm1(-ta * lu);
      terms.push_back(std::log(ta * hj) + (-ta - 1.0) * lu);
    }
    return log_cdf + detail::log_sum_exp(terms);
  };
  // Terms of the augmented log likelihood of datapoint d that involve factor j.
  auto local = [&](std::span<const double> thetas, std::size_t d, std::size_t j) {
    double s = log_gamma_pdf(h(d, j), 1.0 / thetas[j]);
    for (std::size_t i : m.scope(j)) s += log_cond(thetas, d, i);
    return s;
  };

  std::vector<std::size_t> accepted(K, 0);
  std::vector<std::size_t> proposed(K, 0);
  std::normal_distribution<double> step(0.0, config.rw_std);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  chain.run([&](std::size_t it) {
    auto thetas = chain.model().thetas();
    for (std::size_t d = 0; d < N; ++d) {
      for (std::size_t j = 0; j < K; ++j) {
        const double h_old = h(d, j);
        const double before = local(thetas, d, j) + std::log(h_old);
        const double log_h_new = std::log(h_old) + step(chain.rng());
        const double h_new = std::exp(log_h_new);
        ++proposed[j];
        if (!(h_new > 0.0) || !std::isfinite(h_new)) continue;
        h(d, j) = h_new;
        const double after = local(thetas, d, j) + log_h_new;
        if (std::log(unif(chain.rng())) < after - before) {
          ++accepted[j];
        } else {
          h(d, j) = h_old;
        }
      }
    }
    for (std::size_t j : chain.trace().parameters) {
      auto trial = chain.model().thetas();
      auto factor_term = [&](double theta) {
        trial[j] = theta;
        detail::NeumaierSum acc;
        for (std::size_t d = 0; d < N; ++d) acc.add(local(trial, d, j));
        return acc.value();
      };
      const double now = factor_term(chain.model().factor(j).theta());
      chain.update_theta(j, factor_term, now);
    }
    if (chain.keep(it)) {
      thetas = chain.model().thetas();
      detail::NeumaierSum acc;
      for (std::size_t d = 0; d < N; ++d) {
        for (std::size_t j = 0; j < K; ++j) acc.add(log_gamma_pdf(h(d, j), 1.0 / thetas[j]));
        for (std::size_t i = 0; i < p; ++i) acc.add(log_cond(thetas, d, i));
      }
      chain.record(it, acc.value() + chain.log_prior());
    }
  });

  auto& trace = chain.trace();
  for (std::size_t j : trace.parameters) {
    trace.latent_acceptance.push_back(
        proposed[j] == 0 ? 0.0 : static_cast<double>(accepted[j]) / static_cast<double>(proposed[j]));
  }
  return std::move(trace);
}

Trace run_sampler(SamplerKind kind, const CdnModel& m, const DataMatrix& data, const Prior& prior,
                  const SamplerConfig& config, Rng& rng) {
  switch (kind) {
    case SamplerKind::Collapsed: return run_collapsed(m, data, prior, config, rng);
    case SamplerKind::DiscreteLatent: return run_discrete_latent(m, data, prior, config, rng);
    case SamplerKind::ContinuousLatent: return run_continuous_latent(m, data, prior, config, rng);
  }
  throw Error(ErrorKind::Argument, "unknown sampler");
}

EssResult ess(std::span<const double> column) {
  const std::size_t n = column.size();
  if (n < 10) throw Error(ErrorKind::Precondition, "ESS needs at least 10 draws");
  const double N = static_cast<double>(n);
  detail::NeumaierSum sum;
  for (double x : column) sum.add(x);
  const double mean = sum.value() / N;
  std::vector<double> dev(n);
  for (std::size_t k = 0; k < n; ++k) dev[k] = column[k] - mean;
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) acc += dev[k] * dev[k + lag];
    return acc / N;
  };
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  if (*lo == *hi) return {N, true};
  const double c0 = autocov(0);

  // Sum of Geyer's pair sums Gamma_k = rho_{2k} + rho_{2k+1} while positive.
  double pairs = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double gamma = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (gamma <= 0.0) break;
    pairs += gamma;
  }
  const double tau = -1.0 + 2.0 * pairs;
  if (!(tau > 0.0)) return {N, false};
  return {std::min(N, N / tau), false};
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorKind::Argument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TraceSummary summarize(const Trace& trace) {
  if (trace.rows() == 0) throw Error(ErrorKind::Argument, "cannot summarize an empty trace");
  TraceSummary out;
  out.rows = trace.rows();
  out.latent_acceptance = trace.latent_acceptance;
  out.slice_collapses = trace.slice_collapses;
  out.slice_evaluations_per_update =
      trace.slice_updates == 0
          ? 0.0
          : static_cast<double>(trace.slice_evaluations) / static_cast<double>(trace.slice_updates);
  const double n = static_cast<double>(trace.rows());
  for (std::size_t k = 0; k < trace.parameters.size(); ++k) {
    const auto col = trace.column(k);
    ParameterSummary s;
    detail::NeumaierSum sum;
    for (double x : col) sum.add(x);
    s.mean = sum.value() / n;
    if (col.size() > 1) {
      detail::NeumaierSum ss;
      for (double x : col) ss.add((x - s.mean) * (x - s.mean));
      s.sd = std::sqrt(ss.value() / (n - 1.0));
    }
    s.q025 = quantile(col, 0.025);
    s.q50 = quantile(col, 0.5);
    s.q975 = quantile(col, 0.975);
    if (col.size() >= 10) {
      const auto e = ess(col);
      s.ess = e.value;
      s.degenerate = e.degenerate;
    } else {
      s.ess = std::numeric_limits<double>::quiet_NaN();
    }
    out.parameters.push_back(s);
  }
  return out;
}

}  // namespace cdfield
