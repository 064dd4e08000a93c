#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "gmleb/estimators.hpp"
#include "gmleb/mixture.hpp"
#include "gmleb/normal.hpp"
#include "gmleb/npmle.hpp"
#include "gmleb/rng.hpp"

namespace gmleb {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

//! Random mixture with 1-6 atoms spread over [-spread, spread].
inline DiscreteMixture random_mixture(Rng& rng, double spread = 5.0) {
  const std::size_t atoms = 1 + static_cast<std::size_t>(rng.uniform01() * 6.0);
  std::vector<double> support;
  while (support.size() < atoms) {
    const double u = rng.uniform(-spread, spread);
    bool clash = false;
    for (double s : support) {
      if (std::fabs(s - u) < 1e-6) clash = true;
    }
    if (!clash) support.push_back(u);
  }
  std::sort(support.begin(), support.end());
  std::vector<double> weights(support.size());
  double sum = 0.0;
  for (double& w : weights) {
    w = -std::log(1.0 - rng.uniform01());
    sum += w;
  }
  for (double& w : weights) w /= sum;
  return DiscreteMixture(std::move(support), std::move(weights));
}

}  // namespace detail

//! Worst violation of the score/curvature chain
//!   (f'/f)^2 <= f''/f + 1 <= -log(2 pi f^2)
//! together with the cross-check that f'/f agrees with the posterior-mean
//! score. Returns the most negative slack (>= 0 means all hold); the
//! derivative triple is injectable so a broken evaluator is detectable.
inline double score_curvature_slack(const DiscreteMixture& g, double x,
                                    const DensityDerivs& d) {
  const auto moments = detail::posterior_moments(g, x);
  const double score_direct = d.df / d.f;
  const double score_stable = moments.mean - x;
  const double consistency = 1e-6 - std::fabs(score_direct - score_stable);
  const double curvature = d.ddf / d.f + 1.0;
  const double first = curvature - score_stable * score_stable;
  const double second = -std::log(2.0 * pi * d.f * d.f) - curvature;
  return std::min({consistency, first, second});
}

inline double score_curvature_slack(const DiscreteMixture& g, double x) {
  return score_curvature_slack(g, x, mixture_density_derivs(g, x));
}

namespace checks {

//! |x - t(x;rho)| <= L(rho) and finite-difference slope within [0, L^2(rho)]
//! for a sweep of regularization levels and random (G, x) pairs.
inline CheckResult regularized_rule_bounds(std::size_t pairs = 1000, std::uint64_t seed = 11) {
  Rng rng(seed);
  CheckResult out{"regularized-rule bounds", true, ""};
  const double rhos[] = {1e-2, 1e-4, 1e-8};
  double worst_gap = 1e300;
  for (double rho_val : rhos) {
    const double cap = inv_normal_pdf(rho_val);
    const double slope_cap = cap * cap;
    RegularizationLevel rho(rho_val);
    for (std::size_t k = 0; k < pairs; ++k) {
      DiscreteMixture g = detail::random_mixture(rng);
      const double x = rng.uniform(-12.0, 12.0);
      const double t = regularized_posterior_mean(g, x, rho);
      worst_gap = std::min(worst_gap, cap - std::fabs(x - t));
      const double h = 1e-4;
      const double slope = (regularized_posterior_mean(g, x + h, rho) -
                            regularized_posterior_mean(g, x - h, rho)) /
                           (2.0 * h);
      worst_gap = std::min(worst_gap, slope + 1e-6);
      worst_gap = std::min(worst_gap, slope_cap + 1e-6 - slope);
    }
  }
  out.pass = worst_gap >= 0.0;
  std::ostringstream ss;
  ss << "worst slack " << worst_gap;
  out.detail = ss.str();
  return out;
}

//! Score/curvature inequality at random (G, x) pairs.
inline CheckResult score_curvature(std::size_t pairs = 1000, std::uint64_t seed = 12) {
  Rng rng(seed);
  CheckResult out{"score-curvature inequality", true, ""};
  double worst = 1e300;
  for (std::size_t k = 0; k < pairs; ++k) {
    DiscreteMixture g = detail::random_mixture(rng);
    const double x = rng.uniform(-8.0, 8.0);
    worst = std::min(worst, score_curvature_slack(g, x));
  }
  out.pass = worst >= -1e-8;
  std::ostringstream ss;
  ss << "worst slack " << worst;
  out.detail = ss.str();
  return out;
}

//! Log-likelihood never decreases along the EM trace.
inline CheckResult em_ascent(std::size_t datasets = 30, std::uint64_t seed = 13) {
  Rng rng(seed);
  CheckResult out{"EM ascent", true, ""};
  double worst = 1e300;
  const std::size_t sizes[] = {1, 10, 200};
  for (std::size_t k = 0; k < datasets; ++k) {
    const std::size_t n = sizes[k % 3];
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-4.0, 4.0) + rng.normal();
    Grid grid = build_grid_paper(x);
    std::vector<double> init(grid.points.size(), 1.0 / static_cast<double>(grid.points.size()));
    NpmleFit fit = fit_npmle(x, grid.points, init, FixedIterations{25});
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
      const double before = fit.loglik_trace[i - 1];
      const double slack = fit.loglik_trace[i] - before + 1e-9 * std::fabs(before);
      worst = std::min(worst, slack);
    }
  }
  out.pass = worst >= 0.0;
  std::ostringstream ss;
  ss << "worst ascent slack " << worst;
  out.detail = ss.str();
  return out;
}

//! Quadrature Hellinger distance against the closed form for two unit
//! normals d = sqrt(2 (1 - exp(-mu^2/8))).
inline CheckResult hellinger_closed_form() {
  CheckResult out{"Hellinger quadrature vs closed form", true, ""};
  double worst = 0.0;
  for (double mu : {0.5, 1.0, 2.0, 4.0}) {
    const double got = hellinger(DiscreteMixture::point_mass(0.0), DiscreteMixture::point_mass(mu));
    const double want = std::sqrt(2.0 * (1.0 - std::exp(-mu * mu / 8.0)));
    worst = std::max(worst, std::fabs(got - want));
  }
  out.pass = worst <= 1e-6;
  std::ostringstream ss;
  ss << "max |error| " << worst;
  out.detail = ss.str();
  return out;
}

//! Compound risk of a fixed separable rule equals the single-mean risk under
//! the empirical prior of the same truth (Monte Carlo, 3 combined SEs).
inline CheckResult compound_vs_mixture_prior(std::size_t reps = 20000, std::uint64_t seed = 14) {
  CheckResult out{"compound risk matches empirical-prior risk", true, ""};
  const std::size_t n = 100;
  Rng truth_rng(seed);
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = (i % 5 == 0) ? truth_rng.uniform(2.0, 5.0) : 0.0;

  const double lambda = std::sqrt(2.0 * std::log(static_cast<double>(n)));
  auto rule = [&](double v) { return detail::soft(v, lambda); };

  Rng rng(seed + 1);
  double sum_c = 0.0, sumsq_c = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = rule(theta[i] + rng.normal()) - theta[i];
      loss += d * d;
    }
    loss /= static_cast<double>(n);
    sum_c += loss;
    sumsq_c += loss * loss;
  }
  const double reps_d = static_cast<double>(reps);
  const double mean_c = sum_c / reps_d;
  const double se_c = std::sqrt((sumsq_c / reps_d - mean_c * mean_c) / reps_d);

  const std::size_t draws = reps * 10;
  double sum_b = 0.0, sumsq_b = 0.0;
  for (std::size_t r = 0; r < draws; ++r) {
    const double xi = theta[static_cast<std::size_t>(rng.uniform01() * n) % n];
    const double d = rule(xi + rng.normal()) - xi;
    const double loss = d * d;
    sum_b += loss;
    sumsq_b += loss * loss;
  }
  const double draws_d = static_cast<double>(draws);
  const double mean_b = sum_b / draws_d;
  const double se_b = std::sqrt((sumsq_b / draws_d - mean_b * mean_b) / draws_d);

  const double gap = std::fabs(mean_c - mean_b);
  const double budget = 3.0 * std::sqrt(se_c * se_c + se_b * se_b);
  out.pass = gap <= budget;
  std::ostringstream ss;
  ss << "gap " << gap << " vs budget " << budget;
  out.detail = ss.str();
  return out;
}

}  // namespace checks

inline std::vector<CheckResult> run_self_checks() {
  return {
      checks::regularized_rule_bounds(),
      checks::score_curvature(),
      checks::em_ascent(),
      checks::hellinger_closed_form(),
      checks::compound_vs_mixture_prior(),
  };
}

}  // namespace gmleb
