#include "cdfield/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "cdfield/error.hpp"
#include "numeric.hpp"

namespace cdfield {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxTableEntries = std::size_t{1} << 26;

void check_interior(const CdnModel& m, std::span<const double> u) {
  if (u.size() != m.num_variables()) {
    throw Error(ErrorKind::Argument, "point has " + std::to_string(u.size()) +
                                         " coordinates, model has " +
                                         std::to_string(m.num_variables()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0 && u[i] < 1.0)) {
      throw Error(ErrorKind::Domain,
                  "density requires interior points; coordinate " + std::to_string(i) + " is " +
                      std::to_string(u[i]));
    }
  }
}

// Online log-sum-exp accumulator.
class LogAccumulator {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x > hi_) {
      sum_ = sum_ * std::exp(hi_ - x) + 1.0;
      hi_ = x;
    } else {
      sum_ += std::exp(x - hi_);
    }
  }
  double value() const { return hi_ == kNegInf ? kNegInf : hi_ + std::log(sum_); }

 private:
  double hi_ = kNegInf;
  double sum_ = 0.0;
};

using Adjacency = std::vector<std::set<std::size_t>>;

Adjacency interaction_graph(const CdnModel& m) {
  Adjacency adj(m.num_variables());
  for (const auto& [a, b] : bidirected_edges(m)) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  return adj;
}

// Induced width of `order` on the subgraph of vertices with keep[v].
std::size_t induced_width(Adjacency adj, std::span<const std::size_t> order,
                          const std::vector<bool>& keep) {
  for (std::size_t v = 0; v < adj.size(); ++v) {
    if (!keep[v]) {
      adj[v].clear();
      continue;
    }
    std::erase_if(adj[v], [&](std::size_t w) { return !keep[w]; });
  }
  std::size_t width = 0;
  for (std::size_t v : order) {
    if (!keep[v]) continue;
    const auto nbrs = adj[v];
    width = std::max(width, nbrs.size());
    for (std::size_t a : nbrs) {
      adj[a].erase(v);
      for (std::size_t b : nbrs) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj[v].clear();
  }
  return width;
}

std::vector<bool> non_singleton_mask(const CdnModel& m) {
  std::vector<bool> keep(m.num_variables());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = m.z_domain(i).size() > 1;
  return keep;
}

}  // namespace

EliminationOrder make_order(const CdnModel& m, std::vector<std::size_t> order) {
  const std::size_t p = m.num_variables();
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  bool permutation = sorted.size() == p;
  for (std::size_t k = 0; permutation && k < p; ++k) permutation = sorted[k] == k;
  if (!permutation) {
    throw Error(ErrorKind::Argument, "elimination order is not a permutation of the variables");
  }
  const auto adj = interaction_graph(m);
  EliminationOrder out;
  out.induced_width = induced_width(adj, order, std::vector<bool>(p, true));
  out.effective_width = induced_width(adj, order, non_singleton_mask(m));
  out.order = std::move(order);
  return out;
}

EliminationOrder min_fill_order(const CdnModel& m) {
  const std::size_t p = m.num_variables();
  auto adj = interaction_graph(m);
  std::vector<bool> done(p, false);
  std::vector<std::size_t> order;
  order.reserve(p);
  for (std::size_t step = 0; step < p; ++step) {
    std::size_t best = p;
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < p; ++v) {
      if (done[v]) continue;
      std::size_t fill = 0;
      for (auto a = adj[v].begin(); a != adj[v].end() && fill < best_fill; ++a) {
        for (auto b = std::next(a); b != adj[v].end(); ++b) {
          if (!adj[*a].contains(*b)) ++fill;
        }
      }
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
        if (fill == 0) break;
      }
    }
    const auto nbrs = adj[best];
    for (std::size_t a : nbrs) {
      adj[a].erase(best);
      for (std::size_t b : nbrs) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj[best].clear();
    done[best] = true;
    order.push_back(best);
  }
  return make_order(m, std::move(order));
}

double log_phi(const CdnModel& m, std::size_t j, std::span<const double> u,
               std::span<const std::size_t> z_scope) {
  const auto scope = m.scope(j);
  const auto a = m.scope_exponents(j);
  if (u.size() != m.num_variables()) throw Error(ErrorKind::Argument, "point dimension mismatch");
  if (z_scope.size() != scope.size()) {
    throw Error(ErrorKind::Argument, "indicator assignment does not match factor scope");
  }
  std::vector<double> v(scope.size());
  std::vector<std::size_t> subset;
  double jacobian = 0.0;
  for (std::size_t r = 0; r < scope.size(); ++r) {
    const std::size_t i = scope[r];
    const auto dom = m.z_domain(i);
    if (!std::binary_search(dom.begin(), dom.end(), z_scope[r])) {
      throw Error(ErrorKind::Argument, "indicator for variable " + std::to_string(i) +
                                           " is not one of its factors");
    }
    v[r] = std::pow(u[i], a[r]);
    if (z_scope[r] == j) {
      subset.push_back(r);
      jacobian += std::log(a[r]) + (a[r] - 1.0) * std::log(u[i]);
    }
  }
  return factor_log_mixed_partial(m.factor(j), v, subset) + jacobian;
}

double phi(const CdnModel& m, std::size_t j, std::span<const double> u,
           std::span<const std::size_t> z_scope) {
  return std::exp(log_phi(m, j, u, z_scope));
}

double log_joint_phi(const CdnModel& m, std::span<const double> u,
                     std::span<const std::size_t> z) {
  if (z.size() != m.num_variables()) throw Error(ErrorKind::Argument, "indicator vector length");
  double total = 0.0;
  std::vector<std::size_t> zs;
  for (std::size_t j = 0; j < m.num_factors(); ++j) {
    const auto scope = m.scope(j);
    zs.resize(scope.size());
    for (std::size_t r = 0; r < scope.size(); ++r) zs[r] = z[scope[r]];
    total += log_phi(m, j, u, zs);
  }
  return total;
}

double log_density_brute_force(const CdnModel& m, std::span<const double> u, std::uint64_t cap) {
  check_interior(m, u);
  const std::size_t p = m.num_variables();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < p; ++i) {
    total *= m.z_domain(i).size();
    if (total > cap) {
      throw Error(ErrorKind::OracleTooLarge, "oracle too large: indicator space exceeds " +
                                                 std::to_string(cap) + " configurations");
    }
  }
  std::vector<std::size_t> pos(p, 0);
  std::vector<std::size_t> z(p);
  LogAccumulator acc;
  for (std::uint64_t n = 0; n < total; ++n) {
    for (std::size_t i = 0; i < p; ++i) z[i] = m.z_domain(i)[pos[i]];
    acc.add(log_joint_phi(m, u, z));
    for (std::size_t i = p; i-- > 0;) {
      if (++pos[i] < m.z_domain(i).size()) break;
      pos[i] = 0;
    }
  }
  return acc.value();
}

double density_brute_force(const CdnModel& m, std::span<const double> u, std::uint64_t cap) {
  return std::exp(log_density_brute_force(m, u, cap));
}

struct DensityEvaluator::Plan {
  struct FactorTable {
    // Per entry e, scope positions differentiated in this factor are
    // subset_pos[subset_begin[e] .. subset_begin[e+1]).
    std::vector<std::uint32_t> subset_begin;
    std::vector<std::size_t> subset_pos;
  };
  struct Step {
    std::vector<std::size_t> inputs;
    std::vector<std::uint32_t> index_map;  // joint_size x inputs.size()
    std::size_t joint_size = 0;
    std::size_t eliminated_size = 0;       // innermost axis of the joint
    std::size_t output = 0;
  };

  CdnModel model;
  EliminationOrder order;
  std::vector<FactorTable> factors;
  std::vector<std::vector<double>> slots;
  std::vector<Step> steps;
  std::vector<std::size_t> final_slots;
  std::vector<double> joint;
  std::vector<double> log_v;
  std::vector<double> jac;

  Plan(const CdnModel& m, EliminationOrder ord, std::size_t cap);
  double run(const CdnModel& m, std::span<const double> u);
};

namespace {

struct TableShape {
  std::vector<std::size_t> axes;  // ascending variable indices
  std::vector<std::size_t> dims;
  std::size_t size() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
};

std::string clique_text(std::span<const std::size_t> vars) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < vars.size(); ++k) os << (k ? ", " : "") << vars[k];
  os << '}';
  return os.str();
}

}  // namespace

DensityEvaluator::Plan::Plan(const CdnModel& m, EliminationOrder ord, std::size_t cap)
    : model(m), order(std::move(ord)) {
  const std::size_t p = m.num_variables();
  const std::size_t K = m.num_factors();
  if (order.effective_width > cap) {
    // Find the first clique that breaks the cap so the message can name it.
    auto adj = interaction_graph(m);
    const auto keep = non_singleton_mask(m);
    for (std::size_t v = 0; v < p; ++v) {
      if (!keep[v]) adj[v].clear();
      else std::erase_if(adj[v], [&](std::size_t w) { return !keep[w]; });
    }
    for (std::size_t v : order.order) {
      if (!keep[v]) continue;
      const auto nbrs = adj[v];
      if (nbrs.size() > cap) {
        std::vector<std::size_t> clique(nbrs.begin(), nbrs.end());
        clique.push_back(v);
        std::sort(clique.begin(), clique.end());
        throw Error(ErrorKind::TreewidthTooLarge,
                    "treewidth too large: effective width " +
                        std::to_string(order.effective_width) + " exceeds cap " +
                        std::to_string(cap) + "; offending clique " + clique_text(clique));
      }
      for (std::size_t a : nbrs) {
        adj[a].erase(v);
        for (std::size_t b : nbrs) {
          if (a != b) adj[a].insert(b);
        }
      }
      adj[v].clear();
    }
  }

  std::vector<std::size_t> dom(p);
  for (std::size_t i = 0; i < p; ++i) dom[i] = m.z_domain(i).size();

  std::vector<TableShape> shapes;
  factors.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    const auto scope = m.scope(j);
    TableShape shape;
    for (std::size_t i : scope) {
      if (dom[i] > 1) {
        shape.axes.push_back(i);
        shape.dims.push_back(dom[i]);
      }
    }
    const std::size_t size = shape.size();
    if (size > kMaxTableEntries) {
      throw Error(ErrorKind::TreewidthTooLarge,
                  "treewidth too large: factor " + std::to_string(j) + " table has " +
                      std::to_string(size) + " entries");
    }
    auto& table = factors[j];
    table.subset_begin.reserve(size + 1);
    std::vector<std::size_t> values(shape.axes.size(), 0);
    for (std::size_t e = 0; e < size; ++e) {
      table.subset_begin.push_back(static_cast<std::uint32_t>(table.subset_pos.size()));
      std::size_t axis = 0;
      for (std::size_t r = 0; r < scope.size(); ++r) {
        const std::size_t i = scope[r];
        if (dom[i] == 1) {
          table.subset_pos.push_back(r);
          continue;
        }
        if (m.z_domain(i)[values[axis]] == j) table.subset_pos.push_back(r);
        ++axis;
      }
      for (std::size_t k = values.size(); k-- > 0;) {
        if (++values[k] < shape.dims[k]) break;
        values[k] = 0;
      }
    }
    table.subset_begin.push_back(static_cast<std::uint32_t>(table.subset_pos.size()));
    shapes.push_back(std::move(shape));
  }

  std::vector<bool> live(K, true);
  for (std::size_t x : order.order) {
    if (dom[x] == 1) continue;
    Step step;
    std::set<std::size_t> union_axes;
    for (std::size_t t = 0; t < shapes.size(); ++t) {
      if (!live[t]) continue;
      if (std::find(shapes[t].axes.begin(), shapes[t].axes.end(), x) == shapes[t].axes.end()) {
        continue;
      }
      step.inputs.push_back(t);
      union_axes.insert(shapes[t].axes.begin(), shapes[t].axes.end());
    }
    if (step.inputs.empty()) continue;
    union_axes.erase(x);

    TableShape out;
    for (std::size_t v : union_axes) {
      out.axes.push_back(v);
      out.dims.push_back(dom[v]);
    }
    // Joint axes: output axes then x (innermost).
    std::vector<std::size_t> joint_axes = out.axes;
    joint_axes.push_back(x);
    std::vector<std::size_t> joint_dims = out.dims;
    joint_dims.push_back(dom[x]);
    step.joint_size = out.size() * dom[x];
    step.eliminated_size = dom[x];
    if (step.joint_size > kMaxTableEntries) {
      throw Error(ErrorKind::TreewidthTooLarge,
                  "treewidth too large: eliminating variable " + std::to_string(x) +
                      " builds a table of " + std::to_string(step.joint_size) + " entries");
    }

    // For each input, the joint-axis position of each of its axes and strides.
    std::vector<std::vector<std::size_t>> where(step.inputs.size());
    std::vector<std::vector<std::size_t>> strides(step.inputs.size());
    for (std::size_t k = 0; k < step.inputs.size(); ++k) {
      const auto& sh = shapes[step.inputs[k]];
      std::size_t stride = 1;
      strides[k].resize(sh.axes.size());
      for (std::size_t a = sh.axes.size(); a-- > 0;) {
        strides[k][a] = stride;
        stride *= sh.dims[a];
      }
      for (std::size_t v : sh.axes) {
        where[k].push_back(static_cast<std::size_t>(
            std::find(joint_axes.begin(), joint_axes.end(), v) - joint_axes.begin()));
      }
    }
    step.index_map.resize(step.joint_size * step.inputs.size());
    std::vector<std::size_t> values(joint_axes.size(), 0);
    for (std::size_t e = 0; e < step.joint_size; ++e) {
      for (std::size_t k = 0; k < step.inputs.size(); ++k) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < where[k].size(); ++a) flat += values[where[k][a]] * strides[k][a];
        step.index_map[e * step.inputs.size() + k] = static_cast<std::uint32_t>(flat);
      }
      for (std::size_t k = values.size(); k-- > 0;) {
        if (++values[k] < joint_dims[k]) break;
        values[k] = 0;
      }
    }
    for (std::size_t t : step.inputs) live[t] = false;
    step.output = shapes.size();
    shapes.push_back(std::move(out));
    live.push_back(true);
    steps.push_back(std::move(step));
  }
  for (std::size_t t = 0; t < shapes.size(); ++t) {
    if (live[t]) final_slots.push_back(t);
  }
  slots.resize(shapes.size());
  for (std::size_t t = 0; t < shapes.size(); ++t) slots[t].resize(shapes[t].size());
}

double DensityEvaluator::Plan::run(const CdnModel& m, std::span<const double> u) {
  for (std::size_t j = 0; j < factors.size(); ++j) {
    const auto scope = m.scope(j);
    const auto a = m.scope_exponents(j);
    log_v.resize(scope.size());
    jac.resize(scope.size());
    for (std::size_t r = 0; r < scope.size(); ++r) {
      const double lu = std::log(u[scope[r]]);
      log_v[r] = a[r] * lu;
      jac[r] = std::log(a[r]) + (a[r] - 1.0) * lu;
    }
    const FactorPoint point(m.factor(j), log_v);
    const auto& table = factors[j];
    auto& out = slots[j];
    for (std::size_t e = 0; e < out.size(); ++e) {
      const std::span<const std::size_t> subset(table.subset_pos.data() + table.subset_begin[e],
                                                table.subset_begin[e + 1] - table.subset_begin[e]);
      double value = point.log_mixed_partial(subset);
      for (std::size_t r : subset) value += jac[r];
      out[e] = value;
    }
  }
  for (const auto& step : steps) {
    const std::size_t n_in = step.inputs.size();
    joint.resize(step.joint_size);
    for (std::size_t e = 0; e < step.joint_size; ++e) {
      double s = 0.0;
      const std::uint32_t* idx = step.index_map.data() + e * n_in;
      for (std::size_t k = 0; k < n_in; ++k) s += slots[step.inputs[k]][idx[k]];
      joint[e] = s;
    }
    auto& out = slots[step.output];
    const std::size_t dx = step.eliminated_size;
    for (std::size_t o = 0; o < out.size(); ++o) {
      out[o] = detail::log_sum_exp(std::span<const double>(joint.data() + o * dx, dx));
    }
  }
  double total = 0.0;
  for (std::size_t t : final_slots) total += slots[t][0];
  return total;
}

DensityEvaluator::DensityEvaluator(const CdnModel& m, const EliminationOrder& order,
                                   std::size_t treewidth_cap)
    : plan_(std::make_unique<Plan>(m, order, treewidth_cap)) {}

DensityEvaluator::DensityEvaluator(const CdnModel& m, std::size_t treewidth_cap)
    : DensityEvaluator(m, min_fill_order(m), treewidth_cap) {}

DensityEvaluator::~DensityEvaluator() = default;
DensityEvaluator::DensityEvaluator(DensityEvaluator&&) noexcept = default;
DensityEvaluator& DensityEvaluator::operator=(DensityEvaluator&&) noexcept = default;

const EliminationOrder& DensityEvaluator::order() const noexcept { return plan_->order; }

double DensityEvaluator::log_density(const CdnModel& m, std::span<const double> u) {
  if (!m.same_structure(plan_->model)) {
    throw Error(ErrorKind::Argument, "model structure differs from the compiled evaluator");
  }
  check_interior(m, u);
  return plan_->run(m, u);
}

double log_density_ve(const CdnModel& m, std::span<const double> u, const EliminationOrder& order,
                      std::size_t treewidth_cap) {
  DensityEvaluator eval(m, order, treewidth_cap);
  return eval.log_density(m, u);
}

double density_ve(const CdnModel& m, std::span<const double> u, const EliminationOrder& order,
                  std::size_t treewidth_cap) {
  return std::exp(log_density_ve(m, u, order, treewidth_cap));
}

std::vector<double> row_log_densities(const CdnModel& m, const DataMatrix& data,
                                      std::size_t treewidth_cap) {
  std::vector<double> out;
  out.reserve(data.rows());
  if (data.empty()) return out;
  DensityEvaluator eval(m, treewidth_cap);
  for (std::size_t d = 0; d < data.rows(); ++d) {
    try {
      out.push_back(eval.log_density(m, data.row(d)));
    } catch (const Error& e) {
      throw Error(e.kind(), "row " + std::to_string(d) + ": " + e.what());
    }
  }
  return out;
}

double loglik(const CdnModel& m, const DataMatrix& data, std::size_t treewidth_cap) {
  const auto rows = row_log_densities(m, data, treewidth_cap);
  detail::NeumaierSum acc;
  for (double x : rows) acc.add(x);
  return acc.value();
}

std::vector<double> gibbs_local_weights(const CdnModel& m, std::span<const double> u,
                                        std::span<const std::size_t> z, std::size_t i) {
  if (i >= m.num_variables()) throw Error(ErrorKind::Argument, "variable index out of range");
  if (z.size() != m.num_variables()) throw Error(ErrorKind::Argument, "indicator vector length");
  const auto dom = m.z_domain(i);
  if (dom.size() == 1) return {1.0};

  std::vector<std::size_t> zz(z.begin(), z.end());
  std::vector<double> logw(dom.size(), 0.0);
  std::vector<std::size_t> zs;
  for (std::size_t c = 0; c < dom.size(); ++c) {
    zz[i] = dom[c];
    for (std::size_t j : dom) {
      const auto scope = m.scope(j);
      zs.resize(scope.size());
      for (std::size_t r = 0; r < scope.size(); ++r) zs[r] = zz[scope[r]];
      logw[c] += log_phi(m, j, u, zs);
    }
  }
  const double norm = detail::log_sum_exp(logw);
  if (!std::isfinite(norm)) {
    throw Error(ErrorKind::DegenerateConditional,
                "all indicator weights for variable " + std::to_string(i) + " vanish");
  }
  std::vector<double> w(dom.size());
  for (std::size_t c = 0; c < dom.size(); ++c) w[c] = std::exp(logw[c] - norm);
  return w;
}

}  // namespace cdfield
