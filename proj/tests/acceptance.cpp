// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number. Exit status is nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cdfield/latent.hpp"
#include "cdfield/likelihood.hpp"
#include "cdfield/mcmc.hpp"
#include "support.hpp"

using namespace cdfield;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<double> kTruth{1.5, 0.7, 2.0, 1.2};

SamplerConfig iters(std::size_t n, std::uint64_t seed) {
  SamplerConfig c;
  c.iterations = n;
  c.seed = seed;
  return c;
}

// 1
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = testing::random_model(rng);
    const auto order = min_fill_order(m);
    for (int pt = 0; pt < 10; ++pt) {
      const auto u = testing::random_interior(rng, m.num_variables(), 0.001, 0.999);
      const double ve = density_ve(m, u, order);
      const double bf = density_brute_force(m, u);
      worst = std::max(worst, testing::relative_error(ve, bf));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs <= 60.0,
          fmt("max rel err %.3g (<= 1e-9) over 1000 points, %.2f s (<= 60 s)", worst, secs)};
}

// 2
Outcome cdf_derivative() {
  const auto m = chain_model(3, std::vector<double>{1.0, 2.0});
  const auto order = min_fill_order(m);
  auto cdf = [&](const std::vector<double>& x) { return model_cdf(m, x); };
  double worst = 0.0;
  for (double a : {0.25, 0.5, 0.75}) {
    for (double b : {0.25, 0.5, 0.75}) {
      for (double c : {0.25, 0.5, 0.75}) {
        const std::vector<double> u{a, b, c};
        const double fd = testing::mixed_central_difference(cdf, u, 1e-4);
        worst = std::max(worst, testing::relative_error(density_ve(m, u, order), fd));
      }
    }
  }
  return {worst <= 1e-3, fmt("max rel err %.3g (<= 1e-3) on 27 grid points, step 1e-4", worst)};
}

// 3
Outcome copula_property() {
  Rng rng(3);
  std::uniform_real_distribution<double> unif(1e-6, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = testing::random_model(rng);
    for (std::size_t i = 0; i < m.num_variables(); ++i) {
      const double x = unif(rng);
      const std::vector<std::size_t> s{i};
      worst = std::max(worst, std::abs(marginal_cdf(m, s, std::vector<double>{x}) - x));
    }
  }
  const auto chain = chain_model(3, std::vector<double>{1.0, 2.0});
  double chain_worst = 0.0;
  for (double u1 = 0.05; u1 < 1.0; u1 += 0.1) {
    for (double u3 = 0.05; u3 < 1.0; u3 += 0.1) {
      chain_worst = std::max(
          chain_worst, std::abs(model_cdf(chain, std::vector<double>{u1, 1.0, u3}) - u1 * u3));
    }
  }
  return {worst <= 1e-12 && chain_worst <= 1e-12,
          fmt("marginal max abs err %.3g, chain C(u1,1,u3) max abs err %.3g (<= 1e-12)", worst,
              chain_worst)};
}

// 4
Outcome generative_consistency() {
  const auto m = chain_model(2, std::vector<double>{1.0});
  Rng rng(4);
  const std::size_t n = 1'000'000;
  const auto data = sample_dataset(m, n, rng);
  std::vector<double> a(n), b(n);
  std::size_t both = 0;
  for (std::size_t d = 0; d < n; ++d) {
    a[d] = data(d, 0);
    b[d] = data(d, 1);
    if (a[d] <= 0.5 && b[d] <= 0.5) ++both;
  }
  const double ecdf = static_cast<double>(both) / n;
  const double ks = std::max(testing::ks_uniform(a), testing::ks_uniform(b));
  return {std::abs(ecdf - 1.0 / 3.0) <= 0.002 && ks <= 0.002,
          fmt("empirical C(0.5,0.5) = %.5f (1/3 +- 0.002), max KS %.5f (<= 0.002), n = 1e6", ecdf,
              ks)};
}

// 5
Outcome conditional_pdf_check() {
  Rng rng(5);
  std::uniform_real_distribution<double> hd(0.05, 5.0);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto m = testing::random_model(rng);
    std::vector<double> h(m.num_factors());
    for (auto& x : h) x = hd(rng);
    const std::size_t i = rng() % m.num_variables();
    const double u = testing::random_interior(rng, 1, 0.05, 0.95)[0];
    auto f = [&](const std::vector<double>& x) { return conditional_cdf(m, i, x[0], h); };
    const double fd = testing::richardson_mixed_difference(f, {u}, 1e-5 * u);
    worst = std::max(worst, testing::relative_error(conditional_pdf(m, i, u, h), fd));
  }
  return {worst <= 1e-6, fmt("max rel err %.3g (<= 1e-6) over 1000 configurations", worst)};
}

// 6
Outcome linear_scaling() {
  auto time_chain = [](std::size_t p) {
    const auto m = chain_model(p, std::vector<double>(p - 1, 1.3));
    Rng rng(6);
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < 1000; ++k) pts.push_back(testing::random_interior(rng, p));
    double best = 1e300;
    double sink = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = Clock::now();
      DensityEvaluator ev(m);
      for (const auto& u : pts) sink += ev.log_density(m, u);
      best = std::min(best, seconds_since(t0));
    }
    if (!std::isfinite(sink)) best = 1e300;
    return best;
  };
  const double t100 = time_chain(100);
  const double t400 = time_chain(400);
  const double ratio = t400 / t100;
  return {ratio <= 5.0,
          fmt("time(p=400)/time(p=100) = %.2f (<= 5); %.4f s vs %.4f s for 1000 evaluations",
              ratio, t400, t100)};
}

struct Benchmark {
  CdnModel model = chain_model(5, kTruth);
  DataMatrix data;
  std::uint64_t data_seed = 0;
};

Benchmark make_benchmark(std::uint64_t seed) {
  Benchmark b;
  b.data_seed = seed;
  Rng rng(seed);
  b.data = sample_dataset(b.model, 500, rng);
  return b;
}

std::size_t coverage(const Trace& t, std::string& line) {
  const auto s = summarize(t);
  std::size_t covered = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& p = s.parameters[k];
    const bool in = p.q025 <= kTruth[k] && kTruth[k] <= p.q975;
    covered += in;
    line += fmt(" %.1f in [%.2f, %.2f]%s;", kTruth[k], p.q025, p.q975, in ? "" : " MISS");
  }
  return covered;
}

// 7
Outcome posterior_recovery(Benchmark& bench) {
  std::string detail;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) bench = make_benchmark(bench.data_seed + 1000);
    const auto t0 = Clock::now();
    Rng rng(7 + attempt);
    // Start away from the truth.
    const auto start = bench.model.with_thetas(std::vector<double>(4, 1.0));
    const auto t = run_collapsed(start, bench.data, Prior{}, iters(1000, 7 + attempt), rng);
    const double secs = seconds_since(t0);
    std::string cis;
    const std::size_t covered = t.failure ? 0 : coverage(t, cis);
    detail = fmt("attempt %d: coverage %zu/4 (>= 3), %.1f s (<= 300 s);", attempt + 1, covered,
                 secs) + cis;
    if (covered >= 3 && secs <= 300.0) return {true, detail};
  }
  return {false, detail};
}

// 8
Outcome ess_ordering(const Benchmark& bench) {
  const auto start = bench.model.with_thetas(std::vector<double>(4, 1.0));
  Rng r1(81), r2(82);
  const auto c = run_collapsed(start, bench.data, Prior{}, iters(1000, 81), r1);
  const auto d = run_discrete_latent(start, bench.data, Prior{}, iters(1000, 82), r2);
  if (c.failure || d.failure) return {false, "sampler failure"};
  const auto sc = summarize(c);
  const auto sd = summarize(d);
  std::size_t wins = 0;
  std::string ratios;
  for (std::size_t k = 0; k < 4; ++k) {
    const double r = sc.parameters[k].ess / sd.parameters[k].ess;
    wins += r >= 2.0;
    ratios += fmt(" %.0f/%.0f", sc.parameters[k].ess, sd.parameters[k].ess);
  }
  return {wins >= 3, fmt("%zu/4 parameters with ESS ratio >= 2 (need 3); collapsed/discrete:",
                         wins) + ratios};
}

// 9
Outcome prior_recovery() {
  const auto m = chain_model(5, kTruth);
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 9;
  for (auto kind : {SamplerKind::Collapsed, SamplerKind::DiscreteLatent, SamplerKind::ContinuousLatent}) {
    seed += 10;
    Rng rng(seed);
    const auto t = run_sampler(kind, m, DataMatrix(0, 5), Prior{}, iters(100'000, seed), rng);
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto col = t.column(k);
      worst_mean = std::max(worst_mean, std::abs(testing::mean(col) - 1.0));
      worst_var = std::max(worst_var, std::abs(testing::variance(col) - 0.5));
    }
    const bool pass = t.rows() >= 10'000 && worst_mean <= 0.02 && worst_var <= 0.03;
    ok = ok && pass;
    detail += fmt(" %s: %zu draws, max |mean-1| %.4f, max |var-0.5| %.4f;", to_string(kind),
                  t.rows(), worst_mean, worst_var);
  }
  return {ok, "tolerances 0.02 / 0.03;" + detail};
}

// 10
Outcome continuous_sanity() {
  const double theta = 2.0;
  const auto m = chain_model(2, std::vector<double>{theta});
  Rng g(10);
  const auto data = sample_dataset(m, 2000, g);
  const auto start = m.with_theta(0, 1.0);
  Rng rng(11);
  const auto t0 = Clock::now();
  const auto t = run_continuous_latent(start, data, Prior{}, iters(20'000, 11), rng);
  if (t.failure) return {false, "sampler failure: " + *t.failure};
  const double mean = testing::mean(t.column(0));
  const double rel = std::abs(mean - theta) / theta;
  return {rel <= 0.10, fmt("posterior mean %.4f vs generating %.1f, rel err %.3f (<= 0.10), "
                           "acceptance %.2f, %.1f s",
                           mean, theta, rel, t.latent_acceptance.at(0), seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  auto want = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  Benchmark bench = make_benchmark(2015);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"cdf-derivative consistency", cdf_derivative},
      {"copula property", copula_property},
      {"generative consistency", generative_consistency},
      {"conditional pdf vs finite differences", conditional_pdf_check},
      {"linear scaling", linear_scaling},
      {"posterior recovery", [&] { return posterior_recovery(bench); }},
      {"ESS ordering", [&] { return ess_ordering(bench); }},
      {"prior recovery", prior_recovery},
      {"continuous-latent sanity", continuous_sanity},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int n = static_cast<int>(k + 1);
    if (!want(n)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
