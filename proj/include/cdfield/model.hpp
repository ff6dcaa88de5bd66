#pragma once

// A cumulative distribution field: the product over factors of copula CDFs
// evaluated at exponentiated arguments,
//
//   C(u) = prod_j C_j( (u_i^{a_ij})_{i in scope(j)} ),   sum_j a_ij = 1,
//
// which is itself a copula. Variables are addressed by contiguous indices
// 0..p-1; naming lives in the config layer.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cdfield/copula.hpp"

namespace cdfield {

struct FactorSpec {
  Family family = Family::Clayton;
  double theta = 1.0;  // ignored for Independence
  std::vector<std::size_t> scope;
};

struct UniformExponents {};

// Row-major p x K.
struct ExponentMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

using ExponentSpec = std::variant<UniformExponents, ExponentMatrix>;

// z_domain(i): ascending indices of the factors whose scope contains i.
using ZDomain = std::vector<std::vector<std::size_t>>;

using Edge = std::pair<std::size_t, std::size_t>;

class CdnModel {
 public:
  std::size_t num_variables() const noexcept;
  std::size_t num_factors() const noexcept { return factors_.size(); }

  const CopulaFactor& factor(std::size_t j) const { return factors_.at(j); }
  // Ascending variable indices.
  std::span<const std::size_t> scope(std::size_t j) const;
  // a_ij for i = scope(j)[r], aligned with scope(j).
  std::span<const double> scope_exponents(std::size_t j) const;
  double exponent(std::size_t i, std::size_t j) const;
  std::span<const std::size_t> z_domain(std::size_t i) const;

  bool all_clayton() const noexcept;
  std::vector<std::size_t> clayton_factors() const;

  // Parameters of all factors (0 for Independence).
  std::vector<double> thetas() const;
  CdnModel with_theta(std::size_t j, double theta) const;
  CdnModel with_thetas(std::span<const double> thetas) const;

  // Models derived through with_theta share structure; evaluators compiled
  // for one of them are valid for all.
  bool same_structure(const CdnModel& other) const noexcept {
    return structure_ == other.structure_;
  }

 private:
  struct Structure;
  friend CdnModel build_model(std::size_t, std::span<const FactorSpec>, const ExponentSpec&);

  CdnModel(std::shared_ptr<const Structure> structure, std::vector<CopulaFactor> factors)
      : structure_(std::move(structure)), factors_(std::move(factors)) {}

  std::shared_ptr<const Structure> structure_;
  std::vector<CopulaFactor> factors_;
};

// Throws ErrorKind::Validation naming the offending indices on empty or
// out-of-range scopes, orphan variables, or exponent-matrix violations.
CdnModel build_model(std::size_t num_variables, std::span<const FactorSpec> factors,
                     const ExponentSpec& exponents = UniformExponents{});

double model_cdf(const CdnModel& m, std::span<const double> u);

// CDF of the variables in `subset` at `values`; the rest are set to 1.
double marginal_cdf(const CdnModel& m, std::span<const std::size_t> subset,
                    std::span<const double> values);

// Pairs (m, n), m < n, sharing at least one factor; sorted.
std::vector<Edge> bidirected_edges(const CdnModel& m);

ZDomain z_domains(const CdnModel& m);

// Connected components of the bi-directed graph, each sorted, ordered by
// smallest member.
std::vector<std::vector<std::size_t>> connected_components(const CdnModel& m);

// Clayton factors over (j, j+1), uniform exponents.
CdnModel chain_model(std::size_t num_variables, std::span<const double> thetas);

// cluster_of[i] is the cluster of variable i (clusters numbered 0..C-1).
// Factors: one per cluster (indices 0..C-1), then one per unordered pair
// (a, b), a < b, in lexicographic order, scoped over both clusters.
CdnModel cluster_pair_model(std::span<const std::size_t> cluster_of,
                            std::span<const double> thetas);

}  // namespace cdfield
