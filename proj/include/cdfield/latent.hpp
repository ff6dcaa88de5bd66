#pragma once

// Latent-variable representation of products of Clayton factors.
//
// Each Clayton factor j carries one latent H_j ~ Gamma(1/theta_j, 1). Given
// the latents, the variables are independent and
//
//   P(U_i <= u | h) = prod_{j in Par(i)} exp(-h_j (u^{-theta_j a_ij} - 1)),
//
// where Par(i) are the factors containing variable i. Integrating the latents
// out recovers the product-of-copulas CDF.

#include <cstddef>
#include <span>

#include "cdfield/data.hpp"
#include "cdfield/model.hpp"
#include "cdfield/rng.hpp"

namespace cdfield {

// N x K latent values; columns of non-Clayton factors are unused.
using LatentState = DataMatrix;

// Parents of variable i in the latent DAG; same as the indicator domain.
inline std::span<const std::size_t> parents(const CdnModel& m, std::size_t i) {
  return m.z_domain(i);
}

double log_gamma_pdf(double x, double shape);

// h_row is indexed by factor (length K).
double conditional_cdf(const CdnModel& m, std::size_t i, double u, std::span<const double> h_row);
double log_conditional_cdf(const CdnModel& m, std::size_t i, double u,
                           std::span<const double> h_row);
double conditional_pdf(const CdnModel& m, std::size_t i, double u, std::span<const double> h_row);
double log_conditional_pdf(const CdnModel& m, std::size_t i, double u,
                           std::span<const double> h_row);

// Solves conditional_cdf(u) = x. Closed form for a single parent, bisection
// on log u otherwise.
double invert_conditional_cdf(const CdnModel& m, std::size_t i, double x,
                              std::span<const double> h_row);

LatentState sample_latents(const CdnModel& m, std::size_t n, Rng& rng);

// Per row: latents first (factor order), then one uniform per variable.
DataMatrix sample_dataset(const CdnModel& m, std::size_t n, Rng& rng);

double augmented_loglik_continuous(const CdnModel& m, const DataMatrix& data,
                                   const LatentState& latents);

}  // namespace cdfield
