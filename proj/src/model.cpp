#include "cdfield/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "cdfield/error.hpp"
#include "numeric.hpp"

namespace cdfield {

struct CdnModel::Structure {
  std::size_t p = 0;
  std::vector<std::vector<std::size_t>> scopes;
  std::vector<std::vector<double>> scope_exponents;
  std::vector<double> exponents;  // p x K row-major
  ZDomain z;
};

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string join(const std::vector<std::size_t>& xs) {
  std::ostringstream os;
  for (std::size_t k = 0; k < xs.size(); ++k) os << (k ? ", " : "") << xs[k];
  return os.str();
}

}  // namespace

std::size_t CdnModel::num_variables() const noexcept { return structure_->p; }

std::span<const std::size_t> CdnModel::scope(std::size_t j) const {
  return structure_->scopes.at(j);
}

std::span<const double> CdnModel::scope_exponents(std::size_t j) const {
  return structure_->scope_exponents.at(j);
}

double CdnModel::exponent(std::size_t i, std::size_t j) const {
  if (i >= structure_->p || j >= factors_.size()) {
    throw Error(ErrorKind::Argument, "exponent index out of range");
  }
  return structure_->exponents[i * factors_.size() + j];
}

std::span<const std::size_t> CdnModel::z_domain(std::size_t i) const {
  return structure_->z.at(i);
}

bool CdnModel::all_clayton() const noexcept {
  return std::all_of(factors_.begin(), factors_.end(),
                     [](const CopulaFactor& f) { return f.family() == Family::Clayton; });
}

std::vector<std::size_t> CdnModel::clayton_factors() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < factors_.size(); ++j) {
    if (factors_[j].family() == Family::Clayton) out.push_back(j);
  }
  return out;
}

std::vector<double> CdnModel::thetas() const {
  std::vector<double> out(factors_.size());
  std::transform(factors_.begin(), factors_.end(), out.begin(),
                 [](const CopulaFactor& f) { return f.theta(); });
  return out;
}

CdnModel CdnModel::with_theta(std::size_t j, double theta) const {
  auto factors = factors_;
  factors.at(j) = factors[j].with_theta(theta);
  return CdnModel(structure_, std::move(factors));
}

CdnModel CdnModel::with_thetas(std::span<const double> thetas) const {
  if (thetas.size() != factors_.size()) {
    throw Error(ErrorKind::Argument, "expected " + std::to_string(factors_.size()) +
                                         " parameters, got " + std::to_string(thetas.size()));
  }
  auto factors = factors_;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    if (factors[j].family() == Family::Clayton) factors[j] = factors[j].with_theta(thetas[j]);
  }
  return CdnModel(structure_, std::move(factors));
}

CdnModel build_model(std::size_t num_variables, std::span<const FactorSpec> specs,
                     const ExponentSpec& exponents) {
  if (num_variables == 0) throw Error(ErrorKind::Validation, "model has no variables");
  if (specs.empty()) throw Error(ErrorKind::Validation, "model has no factors");

  const std::size_t p = num_variables;
  const std::size_t K = specs.size();
  auto s = std::make_shared<CdnModel::Structure>();
  s->p = p;
  s->scopes.resize(K);
  s->z.resize(p);

  std::vector<std::size_t> empty_scopes;
  std::vector<CopulaFactor> factors;
  factors.reserve(K);
  for (std::size_t j = 0; j < K; ++j) {
    auto scope = specs[j].scope;
    if (scope.empty()) {
      empty_scopes.push_back(j);
      continue;
    }
    std::sort(scope.begin(), scope.end());
    if (std::adjacent_find(scope.begin(), scope.end()) != scope.end()) {
      throw Error(ErrorKind::Validation,
                  "factor " + std::to_string(j) + " lists a variable more than once");
    }
    if (scope.back() >= p) {
      throw Error(ErrorKind::Validation, "factor " + std::to_string(j) +
                                             " references variable " +
                                             std::to_string(scope.back()) + " but p = " +
                                             std::to_string(p));
    }
    for (std::size_t i : scope) s->z[i].push_back(j);
    s->scopes[j] = std::move(scope);
  }
  if (!empty_scopes.empty()) {
    throw Error(ErrorKind::Validation, "empty scope in factors: " + join(empty_scopes));
  }
  for (std::size_t j = 0; j < K; ++j) {
    const auto arity = s->scopes[j].size();
    factors.push_back(specs[j].family == Family::Clayton
                          ? CopulaFactor::clayton(specs[j].theta, arity)
                          : CopulaFactor::independence(arity));
  }
  std::vector<std::size_t> orphans;
  for (std::size_t i = 0; i < p; ++i) {
    if (s->z[i].empty()) orphans.push_back(i);
  }
  if (!orphans.empty()) {
    throw Error(ErrorKind::Validation, "variables in no factor: " + join(orphans));
  }

  s->exponents.assign(p * K, 0.0);
  if (std::holds_alternative<UniformExponents>(exponents)) {
    for (std::size_t i = 0; i < p; ++i) {
      const double a = 1.0 / static_cast<double>(s->z[i].size());
      for (std::size_t j : s->z[i]) s->exponents[i * K + j] = a;
    }
  } else {
    const auto& mat = std::get<ExponentMatrix>(exponents);
    if (mat.rows != p || mat.cols != K || mat.values.size() != p * K) {
      throw Error(ErrorKind::Validation, "exponent matrix must be " + std::to_string(p) + " x " +
                                             std::to_string(K));
    }
    std::vector<std::size_t> bad_support;
    std::vector<std::size_t> bad_rows;
    for (std::size_t i = 0; i < p; ++i) {
      detail::NeumaierSum row;
      for (std::size_t j = 0; j < K; ++j) {
        const double a = mat.values[i * K + j];
        const bool in_scope = std::binary_search(s->z[i].begin(), s->z[i].end(), j);
        if (!(a >= 0.0 && a <= 1.0) || (a > 0.0) != in_scope) {
          bad_support.push_back(i);
          break;
        }
        row.add(a);
      }
      if (std::abs(row.value() - 1.0) > kRowSumTolerance) bad_rows.push_back(i);
    }
    if (!bad_support.empty()) {
      throw Error(ErrorKind::Validation,
                  "exponents must be in (0, 1] exactly on factor scopes; offending rows: " +
                      join(bad_support));
    }
    if (!bad_rows.empty()) {
      throw Error(ErrorKind::Validation, "exponent rows must sum to 1; offending rows: " +
                                             join(bad_rows));
    }
    s->exponents = mat.values;
  }

  s->scope_exponents.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t i : s->scopes[j]) s->scope_exponents[j].push_back(s->exponents[i * K + j]);
  }
  return CdnModel(std::move(s), std::move(factors));
}

double model_cdf(const CdnModel& m, std::span<const double> u) {
  if (u.size() != m.num_variables()) {
    throw Error(ErrorKind::Argument, "point has " + std::to_string(u.size()) +
                                         " coordinates, model has " +
                                         std::to_string(m.num_variables()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
      throw Error(ErrorKind::Domain, "coordinate " + std::to_string(i) + " outside [0, 1]");
    }
  }
  double prod = 1.0;
  std::vector<double> v;
  for (std::size_t j = 0; j < m.num_factors(); ++j) {
    const auto scope = m.scope(j);
    const auto a = m.scope_exponents(j);
    v.resize(scope.size());
    for (std::size_t r = 0; r < scope.size(); ++r) v[r] = std::pow(u[scope[r]], a[r]);
    prod *= factor_cdf(m.factor(j), v);
  }
  return prod;
}

double marginal_cdf(const CdnModel& m, std::span<const std::size_t> subset,
                    std::span<const double> values) {
  if (subset.size() != values.size()) {
    throw Error(ErrorKind::Argument, "subset and values differ in length");
  }
  if (subset.empty()) throw Error(ErrorKind::Argument, "marginal over an empty subset");
  std::vector<double> u(m.num_variables(), 1.0);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (subset[k] >= u.size()) {
      throw Error(ErrorKind::Argument,
                  "variable index " + std::to_string(subset[k]) + " out of range");
    }
    u[subset[k]] = values[k];
  }
  return model_cdf(m, u);
}

std::vector<Edge> bidirected_edges(const CdnModel& m) {
  std::vector<Edge> edges;
  for (std::size_t j = 0; j < m.num_factors(); ++j) {
    const auto scope = m.scope(j);
    for (std::size_t a = 0; a < scope.size(); ++a) {
      for (std::size_t b = a + 1; b < scope.size(); ++b) edges.emplace_back(scope[a], scope[b]);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

ZDomain z_domains(const CdnModel& m) {
  ZDomain z(m.num_variables());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto d = m.z_domain(i);
    z[i].assign(d.begin(), d.end());
  }
  return z;
}

std::vector<std::vector<std::size_t>> connected_components(const CdnModel& m) {
  const std::size_t p = m.num_variables();
  std::vector<std::size_t> parent(p);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : bidirected_edges(m)) {
    const auto ra = find(a);
    const auto rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> slot(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    const auto r = find(i);
    if (slot[r] == p) {
      slot[r] = out.size();
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

CdnModel chain_model(std::size_t num_variables, std::span<const double> thetas) {
  if (num_variables < 2) throw Error(ErrorKind::Argument, "a chain needs at least 2 variables");
  if (thetas.size() != num_variables - 1) {
    throw Error(ErrorKind::Argument, "a chain of " + std::to_string(num_variables) +
                                         " variables needs " +
                                         std::to_string(num_variables - 1) + " parameters");
  }
  std::vector<FactorSpec> specs;
  for (std::size_t j = 0; j + 1 < num_variables; ++j) {
    specs.push_back({Family::Clayton, thetas[j], {j, j + 1}});
  }
  return build_model(num_variables, specs);
}

CdnModel cluster_pair_model(std::span<const std::size_t> cluster_of,
                            std::span<const double> thetas) {
  if (cluster_of.empty()) throw Error(ErrorKind::Argument, "no variables");
  const std::size_t C = *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
  if (C < 2) throw Error(ErrorKind::Argument, "need at least 2 clusters");
  std::vector<std::vector<std::size_t>> members(C);
  for (std::size_t i = 0; i < cluster_of.size(); ++i) members[cluster_of[i]].push_back(i);
  std::vector<std::size_t> degenerate;
  for (std::size_t c = 0; c < C; ++c) {
    if (members[c].size() < 2) degenerate.push_back(c);
  }
  if (!degenerate.empty()) {
    throw Error(ErrorKind::Validation,
                "clusters with fewer than 2 members leave their factor parameter "
                "unidentified: " + join(degenerate));
  }
  const std::size_t K = C + C * (C - 1) / 2;
  if (thetas.size() != K) {
    throw Error(ErrorKind::Argument, std::to_string(C) + " clusters need " + std::to_string(K) +
                                         " parameters, got " + std::to_string(thetas.size()));
  }
  std::vector<FactorSpec> specs;
  for (std::size_t c = 0; c < C; ++c) specs.push_back({Family::Clayton, thetas[c], members[c]});
  for (std::size_t a = 0; a < C; ++a) {
    for (std::size_t b = a + 1; b < C; ++b) {
      auto scope = members[a];
      scope.insert(scope.end(), members[b].begin(), members[b].end());
      specs.push_back({Family::Clayton, thetas[specs.size()], std::move(scope)});
    }
  }
  return build_model(cluster_of.size(), specs);
}

}  // namespace cdfield
