#pragma once

// Exact density of a cumulative distribution field.
//
// Differentiating C(u) once in every coordinate and applying the product
// rule yields a sum over indicator vectors z (z_i names the factor that
// absorbs the derivative in u_i) of products of per-factor terms phi_j. The
// z_i are discrete variables with domains Z_i, so the density is the
// partition function of an ordinary discrete factor graph and is computed by
// variable elimination over z. Brute-force enumeration is kept as an oracle.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cdfield/data.hpp"
#include "cdfield/model.hpp"

namespace cdfield {

inline constexpr std::size_t kDefaultTreewidthCap = 12;
inline constexpr std::uint64_t kDefaultOracleCap = 10'000'000;

struct EliminationOrder {
  std::vector<std::size_t> order;  // permutation of 0..p-1
  // Width of the order on the full z-interaction graph.
  std::size_t induced_width = 0;
  // Width after dropping variables with a single-factor domain; this governs
  // cost and is what the treewidth cap is checked against.
  std::size_t effective_width = 0;
};

// Greedy min-fill, ties broken by lowest variable index.
EliminationOrder min_fill_order(const CdnModel& m);

// Widths of a given order (order must be a permutation of 0..p-1).
EliminationOrder make_order(const CdnModel& m, std::vector<std::size_t> order);

// phi_j at u for the indicator values of the variables in scope(j)
// (z_scope aligned with m.scope(j)). Includes the d(u^a)/du Jacobian of every
// differentiated coordinate.
double log_phi(const CdnModel& m, std::size_t j, std::span<const double> u,
               std::span<const std::size_t> z_scope);
double phi(const CdnModel& m, std::size_t j, std::span<const double> u,
           std::span<const std::size_t> z_scope);

// sum_j log phi_j(u, z) for a full indicator vector (length p).
double log_joint_phi(const CdnModel& m, std::span<const double> u, std::span<const std::size_t> z);

double log_density_brute_force(const CdnModel& m, std::span<const double> u,
                               std::uint64_t cap = kDefaultOracleCap);
double density_brute_force(const CdnModel& m, std::span<const double> u,
                           std::uint64_t cap = kDefaultOracleCap);

// Compiled elimination schedule for one model structure. Values are filled
// per call, so one evaluator serves every parameter setting of models that
// share structure with the one it was built from. Holds scratch buffers:
// use one instance per thread.
class DensityEvaluator {
 public:
  DensityEvaluator(const CdnModel& m, const EliminationOrder& order,
                   std::size_t treewidth_cap = kDefaultTreewidthCap);
  explicit DensityEvaluator(const CdnModel& m, std::size_t treewidth_cap = kDefaultTreewidthCap);
  ~DensityEvaluator();
  DensityEvaluator(DensityEvaluator&&) noexcept;
  DensityEvaluator& operator=(DensityEvaluator&&) noexcept;

  double log_density(const CdnModel& m, std::span<const double> u);

  const EliminationOrder& order() const noexcept;

 private:
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

double log_density_ve(const CdnModel& m, std::span<const double> u, const EliminationOrder& order,
                      std::size_t treewidth_cap = kDefaultTreewidthCap);
double density_ve(const CdnModel& m, std::span<const double> u, const EliminationOrder& order,
                  std::size_t treewidth_cap = kDefaultTreewidthCap);

// sum over rows of log density_ve. Row errors are rethrown with the row index.
double loglik(const CdnModel& m, const DataMatrix& data,
              std::size_t treewidth_cap = kDefaultTreewidthCap);

// Per-row log densities (same values loglik sums).
std::vector<double> row_log_densities(const CdnModel& m, const DataMatrix& data,
                                      std::size_t treewidth_cap = kDefaultTreewidthCap);

// Conditional distribution of z_i over Z_i given the other indicators; only
// factors in Z_i are evaluated. Throws ErrorKind::DegenerateConditional when
// every weight underflows.
std::vector<double> gibbs_local_weights(const CdnModel& m, std::span<const double> u,
                                        std::span<const std::size_t> z, std::size_t i);

}  // namespace cdfield
