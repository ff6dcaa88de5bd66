#pragma once

// Posterior samplers for the Clayton parameters of a cumulative distribution
// field, with exponents held fixed:
//
//  * collapsed: indicators summed out exactly by variable elimination;
//  * discrete latent: per-datapoint indicator vectors updated by Gibbs sweeps;
//  * continuous latent: per-datapoint Gamma latents updated by random-walk
//    Metropolis on the log scale.
//
// Parameters are updated one at a time by slice sampling on log theta.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdfield/data.hpp"
#include "cdfield/error.hpp"
#include "cdfield/likelihood.hpp"
#include "cdfield/model.hpp"
#include "cdfield/rng.hpp"

namespace cdfield {

// Gamma(shape, rate) on each theta.
struct Prior {
  double shape = 2.0;
  double rate = 2.0;

  void validate() const;
  double log_density(double theta) const;
};

enum class SamplerKind { Collapsed, DiscreteLatent, ContinuousLatent };

const char* to_string(SamplerKind kind) noexcept;
std::optional<SamplerKind> parse_sampler_kind(std::string_view name);

struct SamplerConfig {
  std::size_t iterations = 1000;
  std::optional<std::size_t> burn_in;  // default: 20% of iterations
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  double slice_width = 1.0;            // on log theta
  std::size_t max_stepouts = 50;
  double rw_std = 0.5;                 // on log h
  std::size_t treewidth_cap = kDefaultTreewidthCap;

  std::size_t resolved_burn_in() const;
  // Number of rows a completed run keeps.
  std::size_t kept_rows() const;
  void validate() const;
};

struct SliceResult {
  double x = 0.0;
  double log_density = 0.0;
  std::size_t evaluations = 0;
  // Shrinkage reached a negligible bracket; x is the starting point.
  bool collapsed = false;
};

using LogDensity = std::function<double(double)>;

// One stepping-out / shrinkage update.
SliceResult slice_sample(const LogDensity& log_density, double x0, double w,
                         std::size_t max_stepouts, Rng& rng);
SliceResult slice_sample(const LogDensity& log_density, double x0, double log_density_x0, double w,
                         std::size_t max_stepouts, Rng& rng);

struct Trace {
  SamplerKind sampler = SamplerKind::Collapsed;
  SamplerConfig config;
  std::string model_hash;

  // Factor index of each sampled parameter (the Clayton factors).
  std::vector<std::size_t> parameters;
  // Kept rows.
  std::vector<std::size_t> iterations;
  std::vector<std::vector<double>> theta;
  std::vector<double> log_post;

  std::size_t slice_updates = 0;
  std::size_t slice_evaluations = 0;
  std::size_t slice_collapses = 0;
  // Continuous sampler: acceptance rate of latent proposals per factor
  // (aligned with `parameters`).
  std::vector<double> latent_acceptance;

  // Set when a numerical failure stopped the run; rows up to it are kept.
  std::optional<std::string> failure;
  std::optional<ErrorKind> failure_kind;

  std::size_t rows() const noexcept { return theta.size(); }
  std::vector<double> column(std::size_t k) const;
};

// Empty data reduces every sampler to the prior. A numerical failure during
// sampling is recorded on the trace instead of thrown; configuration and
// compatibility errors are thrown before sampling starts.
Trace run_collapsed(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                    const SamplerConfig& config, Rng& rng);
Trace run_discrete_latent(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                          const SamplerConfig& config, Rng& rng);
Trace run_continuous_latent(const CdnModel& m, const DataMatrix& data, const Prior& prior,
                            const SamplerConfig& config, Rng& rng);
Trace run_sampler(SamplerKind kind, const CdnModel& m, const DataMatrix& data, const Prior& prior,
                  const SamplerConfig& config, Rng& rng);

struct EssResult {
  double value = 0.0;
  bool degenerate = false;  // constant column
};

// Initial positive sequence estimator, clipped to (0, N]. Needs N >= 10.
EssResult ess(std::span<const double> column);

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;  // NaN when fewer than 10 rows
  bool degenerate = false;
};

struct TraceSummary {
  std::size_t rows = 0;
  std::vector<ParameterSummary> parameters;
  std::vector<double> latent_acceptance;
  double slice_evaluations_per_update = 0.0;
  std::size_t slice_collapses = 0;
};

// Linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> values, double prob);

TraceSummary summarize(const Trace& trace);

}  // namespace cdfield
