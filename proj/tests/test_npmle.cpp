#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmleb/npmle.hpp"
#include "gmleb/rng.hpp"
#include "gmleb/selfcheck.hpp"
#include "oracle_helpers.hpp"

using namespace gmleb;
using Catch::Approx;

namespace {

std::vector<double> uniform_weights(std::size_t m) {
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

std::vector<double> noisy_sample(std::size_t n, std::uint64_t seed, double spread = 2.0) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-spread, spread) + rng.normal();
  return x;
}

}  // namespace

TEST_CASE("paper-style grid covers the data with 0 adjoined", "[npmle]") {
  SECTION("single positive observation") {
    const Grid g = build_grid_paper({3.0});
    const double eps = 3.0 / 999.0;
    CHECK(g.points.size() == 1000);
    CHECK(g.spacing == Approx(eps).epsilon(1e-14));
    CHECK(g.points.front() == Approx(0.0).margin(1e-14));
    CHECK(g.points.back() == Approx(3.0).epsilon(1e-14));
    CHECK(g.points[g.zero_index] == 0.0);
  }

  SECTION("straddling zero") {
    const Grid g = build_grid_paper({-1.0, 1.0});
    CHECK(g.spacing == Approx(2.0 / 999.0).epsilon(1e-14));
    CHECK(g.points[g.zero_index] == 0.0);
    CHECK(g.points.size() >= 999);
    CHECK(g.points.size() <= 1000);
    CHECK(g.points.front() >= -1.0);
    CHECK(g.points.front() - g.spacing < -1.0);
    CHECK(g.points.back() <= 1.0);
    CHECK(g.points.back() + g.spacing > 1.0);
  }

  SECTION("degenerate zero-range data") {
    const Grid g = build_grid_paper({0.0});
    CHECK(g.degenerate);
    CHECK(g.points == std::vector<double>{0.0});
  }

  SECTION("bracketing inequalities on random data") {
    Rng rng(201);
    for (int k = 0; k < 50; ++k) {
      const auto x = noisy_sample(1 + static_cast<std::size_t>(rng.uniform01() * 40), 300 + k);
      const Grid g = build_grid_paper(x);
      double lo = 0.0, hi = 0.0;
      for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi == lo) continue;
      CHECK(g.points.size() >= 999);
      CHECK(g.points.size() <= 1000);
      CHECK(g.points.front() >= lo - 1e-12);
      CHECK(g.points.front() - g.spacing < lo + 1e-12);
      CHECK(g.points.back() <= hi + 1e-12);
      CHECK(g.points.back() + g.spacing > hi - 1e-12);
      CHECK(g.points[g.zero_index] == 0.0);
      for (std::size_t j = 1; j < g.points.size(); ++j) {
        CHECK(g.points[j] - g.points[j - 1] == Approx(g.spacing).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("certified grid picks the smallest admissible point count", "[npmle]") {
  SECTION("range 10 with n = 1000") {
    std::vector<double> x{0.0, 10.0};
    x.resize(1000, 5.0);
    const Grid g = build_grid_certified(x);
    // Smallest m with eps^2 (r^2/4 + 1/8) <= 1/n.
    const std::size_t m = g.points.size();
    CHECK(m == 1587);
    const double n = 1000.0, r = 10.0;
    auto cond = [&](std::size_t mm) {
      const double eps = r / static_cast<double>(mm - 1);
      return eps * eps * (r * r / 4.0 + 0.125) <= 1.0 / n;
    };
    CHECK(cond(m));
    CHECK_FALSE(cond(m - 1));
  }

  SECTION("degenerate data") {
    const Grid g = build_grid_certified({4.2, 4.2});
    CHECK(g.degenerate);
    CHECK(g.points == std::vector<double>{4.2});
  }

  SECTION("defining condition on random data") {
    Rng rng(202);
    for (int k = 0; k < 30; ++k) {
      const auto x = noisy_sample(2 + static_cast<std::size_t>(rng.uniform01() * 200), 400 + k);
      const Grid g = build_grid_certified(x);
      const double r = g.points.back() - g.points.front();
      if (r == 0.0) continue;
      const double n = static_cast<double>(x.size());
      CHECK(g.spacing * g.spacing * (r * r / 4.0 + 0.125) <= 1.0 / n + 1e-12);
    }
  }
}

TEST_CASE("log likelihood sums stable log densities", "[npmle]") {
  const auto delta0 = DiscreteMixture::point_mass(0.0);
  CHECK(log_likelihood(delta0, {0.0}) == Approx(log_normal_pdf(0.0)).epsilon(1e-12));
  CHECK(log_likelihood(delta0, {0.0, 0.0}) == Approx(2.0 * log_normal_pdf(0.0)).epsilon(1e-12));

  const DiscreteMixture half({0.0, 2.0}, {0.5, 0.5});
  CHECK(log_likelihood(half, {1.0}) == Approx(log_normal_pdf(1.0)).epsilon(1e-12));
}

TEST_CASE("EM step: fixed point, closed form, zero preservation", "[npmle]") {
  SECTION("single support point stays put") {
    KernelMatrix k({0.3, -0.7}, {0.1});
    const auto w = em_step({1.0}, k);
    CHECK(w == std::vector<double>{1.0});
  }

  SECTION("single observation gives phi-proportional weights") {
    KernelMatrix k({0.0}, {-1.0, 0.0, 1.0});
    const auto w = em_step(uniform_weights(3), k);
    const double denom = 2.0 * normal_pdf(1.0) + normal_pdf(0.0);
    CHECK(w[0] == Approx(normal_pdf(1.0) / denom).epsilon(1e-12));
    CHECK(w[1] == Approx(normal_pdf(0.0) / denom).epsilon(1e-12));
    CHECK(w[2] == Approx(w[0]).epsilon(1e-14));
    CHECK(w[0] == Approx(0.27407).margin(5e-6));
    CHECK(w[1] == Approx(0.45186).margin(5e-6));
  }

  SECTION("zero weights are absorbing") {
    KernelMatrix k({0.1, 0.4}, {-1.0, 0.0, 1.0});
    const auto w = em_step({0.5, 0.0, 0.5}, k);
    CHECK(w[1] == 0.0);
    CHECK(w[0] + w[2] == Approx(1.0).margin(1e-14));
  }

  SECTION("a data point far outside the grid is rejected") {
    KernelMatrix k({100.0}, {-1.0, 0.0, 1.0});
    CHECK_THROWS_AS(em_step(uniform_weights(3), k), std::runtime_error);
  }
}

TEST_CASE("fit_npmle on degenerate and tiny inputs", "[npmle]") {
  SECTION("single zero observation") {
    const auto fit = fit_npmle({0.0}, {0.0}, {1.0}, FixedIterations{100});
    CHECK(fit.mixture.size() == 1);
    CHECK(fit.mixture.support()[0] == 0.0);
    CHECK(fit.final_loglik() == Approx(log_normal_pdf(0.0)).epsilon(1e-12));
  }

  SECTION("all-equal data short-circuits to the exact point mass") {
    const std::vector<double> x(50, 2.5);
    const Grid g = build_grid_paper(x);
    const auto fit = fit_npmle(x, g.points, uniform_weights(g.points.size()), FixedIterations{100});
    CHECK(fit.mixture.size() == 1);
    CHECK(fit.mixture.support()[0] == 2.5);
    CHECK(fit.iterations == 0);
  }

  SECTION("zero iterations returns the initialization") {
    const std::vector<double> x{-0.5, 1.0};
    const std::vector<double> grid{-1.0, 0.0, 1.0};
    const auto init = std::vector<double>{0.2, 0.5, 0.3};
    const auto fit = fit_npmle(x, grid, init, FixedIterations{0});
    CHECK(fit.iterations == 0);
    CHECK(fit.loglik_trace.size() == 1);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(fit.mixture.weights()[j] == Approx(init[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("100 EM iterations approach the long-run optimum", "[npmle][slow]") {
  // The weight iteration converges sublinearly, so the residual gap to a
  // 20x longer run flattens to the 1e-3 * n scale rather than vanishing.
  const auto x = noisy_sample(200, 205, 0.0);  // centered sample
  const Grid g = build_grid_paper(x);
  const auto init = uniform_weights(g.points.size());
  const auto fit100 = fit_npmle(x, g.points, init, FixedIterations{100});
  const auto fit2000 = fit_npmle(x, g.points, init, FixedIterations{2000});
  const double n = static_cast<double>(x.size());
  CHECK(fit2000.final_loglik() >= fit100.final_loglik() - 1e-12);
  CHECK(fit2000.final_loglik() - fit100.final_loglik() <= 0.01 * n);
  // By iteration 100 the per-step gain has collapsed by orders of magnitude.
  const auto& tr = fit100.loglik_trace;
  CHECK(tr[100] - tr[99] <= 1e-3 * (tr[1] - tr[0]));
}

TEST_CASE("EM ascent holds across random datasets", "[npmle][property]") {
  const auto result = checks::em_ascent(30);
  INFO(result.detail);
  CHECK(result.pass);
}

TEST_CASE("certified stopping produces a valid certificate", "[npmle]") {
  const auto x = noisy_sample(100, 207);
  const Grid g = build_grid_certified(x);
  const double q = default_approximation_factor(x.size());
  const auto fit = fit_npmle(x, g.points, uniform_weights(g.points.size()),
                             CertifiedStop{q, 100000});
  REQUIRE(fit.certificate.has_value());
  CHECK(fit.certificate->satisfied);
  CHECK(fit.certificate->max_log_weight_ratio <= fit.certificate->threshold);

  SECTION("density floor holds at every observation") {
    const auto flags = density_floor_check(fit, x, q);
    for (bool ok : flags) CHECK(ok);
  }

  SECTION("regularized and plain rules coincide at the data") {
    const double rho_n = q / (std::exp(1.0) * static_cast<double>(x.size()) * sqrt_two_pi);
    for (double v : x) {
      CHECK(regularized_posterior_mean(fit.mixture, v, RegularizationLevel(rho_n)) ==
            posterior_mean(fit.mixture, v));
    }
  }

  SECTION("likelihood is within factor q of a 10x longer run") {
    const auto longer = fit_npmle(x, g.points, uniform_weights(g.points.size()),
                                  FixedIterations{fit.iterations * 10});
    CHECK(fit.final_loglik() >= longer.final_loglik() + std::log(q) - 1e-9);
  }
}

TEST_CASE("certified stopping reports failure at the iteration cap", "[npmle]") {
  const auto x = noisy_sample(100, 208);
  const Grid g = build_grid_certified(x);
  const auto fit = fit_npmle(x, g.points, uniform_weights(g.points.size()),
                             CertifiedStop{default_approximation_factor(x.size()), 2});
  REQUIRE(fit.certificate.has_value());
  CHECK_FALSE(fit.certificate->satisfied);
  CHECK(fit.iterations == 2);
}

TEST_CASE("certified stopping requires strictly positive initial weights", "[npmle]") {
  std::vector<double> init{0.5, 0.0, 0.5};
  CHECK_THROWS_AS(fit_npmle({0.1, -0.2}, {-1.0, 0.0, 1.0}, init,
                            CertifiedStop{default_approximation_factor(2)}),
                  std::invalid_argument);
  CHECK_NOTHROW(fit_npmle({0.1, -0.2}, {-1.0, 0.0, 1.0}, init, FixedIterations{3}));
}
