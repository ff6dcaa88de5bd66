#include <doctest.h>

#include <cmath>
#include <vector>

#include "cdfield/error.hpp"
#include "cdfield/latent.hpp"
#include "cdfield/likelihood.hpp"
#include "support.hpp"

using namespace cdfield;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Argument;
}

// Independent form of the conditional CDF.
double reference_conditional_cdf(const CdnModel& m, std::size_t i, double u,
                                 const std::vector<double>& h) {
  double log_p = 0.0;
  for (std::size_t j : m.z_domain(i)) {
    log_p -= h[j] * (std::pow(u, -m.factor(j).theta() * m.exponent(i, j)) - 1.0);
  }
  return std::exp(log_p);
}

}  // namespace

TEST_CASE("conditional cdf, single and two parents") {
  const auto single = chain_model(2, std::vector<double>{1.0});
  // U1 has one parent with exponent 1.
  CHECK(conditional_cdf(single, 0, 0.5, std::vector<double>{1.0}) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  const auto chain = chain_model(3, std::vector<double>{1.0, 1.0});
  const std::vector<double> h{1.0, 1.0};
  CHECK(conditional_cdf(chain, 1, 0.5, h) == doctest::Approx(std::exp(-0.82843)).epsilon(1e-5));
  CHECK(conditional_cdf(chain, 1, 0.5, h) ==
        doctest::Approx(std::exp(-2.0 * (std::sqrt(2.0) - 1.0))).epsilon(1e-14));
  CHECK(conditional_cdf(chain, 1, 1.0, h) == 1.0);
  CHECK(conditional_cdf(chain, 1, 0.0, h) == 0.0);
}

TEST_CASE("conditional pdf closed form") {
  const auto single = chain_model(2, std::vector<double>{1.0});
  CHECK(conditional_pdf(single, 0, 0.5, std::vector<double>{1.0}) ==
        doctest::Approx(4.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(conditional_pdf(single, 0, 0.5, std::vector<double>{1.0}) ==
        doctest::Approx(1.47152).epsilon(1e-5));
}

TEST_CASE("conditional cdf matches the reference on random models") {
  Rng rng(12);
  std::uniform_real_distribution<double> hd(0.05, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = testing::random_model(rng);
    std::vector<double> h(m.num_factors());
    for (auto& x : h) x = hd(rng);
    const auto u = testing::random_interior(rng, m.num_variables());
    for (std::size_t i = 0; i < m.num_variables(); ++i) {
      CHECK(conditional_cdf(m, i, u[i], h) ==
            doctest::Approx(reference_conditional_cdf(m, i, u[i], h)).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional pdf is the derivative of the conditional cdf") {
  Rng rng(13);
  std::uniform_real_distribution<double> hd(0.1, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto m = testing::random_model(rng);
    std::vector<double> h(m.num_factors());
    for (auto& x : h) x = hd(rng);
    const std::size_t i = rng() % m.num_variables();
    const double u = testing::random_interior(rng, 1, 0.1, 0.9)[0];
    auto f = [&](const std::vector<double>& x) { return conditional_cdf(m, i, x[0], h); };
    const double fd = testing::richardson_mixed_difference(f, {u}, 1e-5 * u);
    CHECK(testing::relative_error(conditional_pdf(m, i, u, h), fd) < 1e-6);
  }
}

TEST_CASE("conditional pdf integrates to one") {
  const auto chain = chain_model(3, std::vector<double>{1.5, 0.5});
  const std::vector<double> h{0.7, 1.8};
  // Substitute u = t^4 to tame the endpoint: integrand 4 t^3 pdf(t^4).
  const int n = 20000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const double u = std::pow(t, 4.0);
    if (u <= 0.0) continue;
    sum += 4.0 * t * t * t * conditional_pdf(chain, 1, u, h);
  }
  CHECK(sum / n == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("inversion") {
  const auto single = chain_model(2, std::vector<double>{2.0});
  CHECK(invert_conditional_cdf(single, 0, std::exp(-1.0), std::vector<double>{1.0}) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
  CHECK(invert_conditional_cdf(single, 0, std::exp(-1.0), std::vector<double>{1.0}) ==
        doctest::Approx(0.70711).epsilon(1e-5));

  Rng rng(14);
  std::uniform_real_distribution<double> hd(0.05, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto m = testing::random_model(rng);
    std::vector<double> h(m.num_factors());
    for (auto& x : h) x = hd(rng);
    const std::size_t i = rng() % m.num_variables();
    const double x = testing::random_interior(rng, 1, 0.01, 0.99)[0];
    const double u = invert_conditional_cdf(m, i, x, h);
    CHECK(std::abs(conditional_cdf(m, i, u, h) - x) <= 1e-12);
    if (m.z_domain(i).size() == 1) {
      const std::size_t j = m.z_domain(i)[0];
      const double ta = m.factor(j).theta() * m.exponent(i, j);
      const double closed = std::pow(1.0 - std::log(x) / h[j], -1.0 / ta);
      CHECK(u == doctest::Approx(closed).epsilon(1e-10));
    }
  }
}

TEST_CASE("gamma latents have the right mean") {
  for (double theta : {1.0, 2.0}) {
    const auto m = chain_model(2, std::vector<double>{theta});
    Rng rng(15);
    const auto h = sample_latents(m, 1'000'000, rng);
    double s = 0.0;
    for (std::size_t d = 0; d < h.rows(); ++d) s += h(d, 0);
    CHECK(std::abs(s / h.rows() - 1.0 / theta) <= 0.01);
  }
}

TEST_CASE("simulated bivariate clayton has uniform margins and the right joint cdf") {
  const auto m = chain_model(2, std::vector<double>{1.0});
  Rng rng(16);
  const std::size_t n = 200'000;
  const auto data = sample_dataset(m, n, rng);
  std::vector<double> a(n), b(n);
  std::size_t both = 0;
  for (std::size_t d = 0; d < n; ++d) {
    a[d] = data(d, 0);
    b[d] = data(d, 1);
    if (a[d] <= 0.5 && b[d] <= 0.5) ++both;
  }
  CHECK(std::abs(static_cast<double>(both) / n - 1.0 / 3.0) < 0.005);
  CHECK(testing::ks_uniform(a) < 0.005);
  CHECK(testing::ks_uniform(b) < 0.005);
}

TEST_CASE("simulated chain matches the model cdf on a grid") {
  const auto m = chain_model(3, std::vector<double>{1.5, 0.7});
  Rng rng(17);
  const std::size_t n = 1'000'000;
  const auto data = sample_dataset(m, n, rng);
  const double grid[] = {0.25, 0.5, 0.75};
  for (double a : grid) {
    for (double b : grid) {
      for (double c : grid) {
        std::size_t hit = 0;
        for (std::size_t d = 0; d < n; ++d) {
          if (data(d, 0) <= a && data(d, 1) <= b && data(d, 2) <= c) ++hit;
        }
        CHECK(std::abs(static_cast<double>(hit) / n - model_cdf(m, std::vector<double>{a, b, c})) <
              0.005);
      }
    }
  }
}

TEST_CASE("sampling is deterministic and stays inside the open cube") {
  const auto m = chain_model(4, std::vector<double>{50.0, 0.01, 3.0});
  Rng r1(3), r2(3);
  const auto a = sample_dataset(m, 2000, r1);
  const auto b = sample_dataset(m, 2000, r2);
  CHECK(a.values() == b.values());
  for (double x : a.values()) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("augmented likelihood term by term") {
  const auto m = chain_model(3, std::vector<double>{1.0, 2.0});
  DataMatrix u(2, 3, {0.2, 0.5, 0.7, 0.6, 0.4, 0.3});
  DataMatrix h(2, 2, {0.8, 1.4, 0.3, 2.2});
  double want = 0.0;
  for (std::size_t d = 0; d < 2; ++d) {
    want += log_gamma_pdf(h(d, 0), 1.0) + log_gamma_pdf(h(d, 1), 0.5);
    for (std::size_t i = 0; i < 3; ++i) want += log_conditional_pdf(m, i, u(d, i), h.row(d));
  }
  CHECK(augmented_loglik_continuous(m, u, h) == doctest::Approx(want).epsilon(1e-14));
  CHECK(augmented_loglik_continuous(m, DataMatrix(0, 3), DataMatrix(0, 2)) == 0.0);

  // Single factor, single row, written out by hand.
  const auto single = chain_model(2, std::vector<double>{1.0});
  DataMatrix u1(1, 2, {0.5, 0.25});
  DataMatrix h1(1, 1, {1.0});
  const double hand = -1.0 + (-1.0 + std::log(4.0)) + (-3.0 + std::log(16.0));
  CHECK(augmented_loglik_continuous(single, u1, h1) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("integrating the latent out recovers the copula") {
  const auto m = chain_model(2, std::vector<double>{1.3});
  Rng rng(18);
  const std::size_t n = 100'000;
  const auto h = sample_latents(m, n, rng);
  const std::vector<double> u{0.3, 0.65};
  std::vector<double> pdf(n), cdf(n);
  for (std::size_t d = 0; d < n; ++d) {
    pdf[d] = conditional_pdf(m, 0, u[0], h.row(d)) * conditional_pdf(m, 1, u[1], h.row(d));
    cdf[d] = conditional_cdf(m, 0, u[0], h.row(d)) * conditional_cdf(m, 1, u[1], h.row(d));
  }
  const double se_pdf = std::sqrt(testing::variance(pdf) / n);
  const double se_cdf = std::sqrt(testing::variance(cdf) / n);
  CHECK(std::abs(testing::mean(pdf) - density_ve(m, u, min_fill_order(m))) <= 2.0 * se_pdf);
  CHECK(std::abs(testing::mean(cdf) - model_cdf(m, u)) <= 2.0 * se_cdf);
}

TEST_CASE("inversion near the upper boundary") {
  const auto chain = chain_model(3, std::vector<double>{1.0, 3.0});
  const std::vector<double> h{0.5, 2.0};
  double last = 0.0;
  for (double x : {0.9, 0.99, 0.999999, 1.0 - 1e-12}) {
    const double u = invert_conditional_cdf(chain, 1, x, h);
    CHECK(u > last);
    CHECK(u < 1.0);
    last = u;
  }
  CHECK(last > 0.999999);
}

TEST_CASE("latent errors") {
  const auto mixed = build_model(3, std::vector<FactorSpec>{{Family::Independence, 0.0, {0, 1}},
                                                            {Family::Clayton, 2.0, {1, 2}}});
  const std::vector<double> h{1.0, 1.0};
  CHECK(kind_of([&] { conditional_cdf(mixed, 0, 0.5, h); }) == ErrorKind::UnsupportedFamily);
  CHECK_NOTHROW(conditional_cdf(mixed, 2, 0.5, h));
  Rng rng(1);
  CHECK(kind_of([&] { sample_dataset(mixed, 3, rng); }) == ErrorKind::UnsupportedFamily);

  const auto m = chain_model(2, std::vector<double>{1.0});
  CHECK(kind_of([&] { conditional_cdf(m, 0, 0.5, std::vector<double>{0.0}); }) ==
        ErrorKind::Parameter);
  CHECK(kind_of([&] { conditional_cdf(m, 0, 1.5, std::vector<double>{1.0}); }) ==
        ErrorKind::Domain);
  CHECK(kind_of([&] { conditional_pdf(m, 0, 1.0, std::vector<double>{1.0}); }) ==
        ErrorKind::Domain);
  CHECK(kind_of([&] { conditional_cdf(m, 0, 0.5, std::vector<double>{1.0, 1.0}); }) ==
        ErrorKind::Argument);
}
