#pragma once

// Independent reference implementations used only by the test suite. These
// deliberately avoid the library's stable evaluation paths (log-sum-exp,
// rational quantile approximations) so they can serve as oracles for them.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "gmleb/mixture.hpp"
#include "gmleb/normal.hpp"
#include "gmleb/rng.hpp"

namespace oracle {

//! Direct ratio-of-sums posterior mean (no log-space stabilization).
inline double naive_posterior_mean(const gmleb::DiscreteMixture& g, double x) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double k = g.weights()[j] * gmleb::normal_pdf(x - g.support()[j]);
    num += g.support()[j] * k;
    den += k;
  }
  return num / den;
}

//! Posterior mean of a symmetric two-atom prior (1/2 at -a, 1/2 at +a):
//! a * tanh(a x).
inline double two_atom_posterior_mean(double a, double x) { return a * std::tanh(a * x); }

//! Hellinger distance between N(0,1) and N(mu,1): sqrt(2 (1 - e^{-mu^2/8})).
inline double hellinger_normal_shift(double mu) {
  return std::sqrt(2.0 * (1.0 - std::exp(-mu * mu / 8.0)));
}

//! Monte Carlo estimate (mean, standard error) of the Bayes risk of the
//! posterior-mean rule under prior G: xi ~ G, Y ~ N(xi, 1).
inline std::pair<double, double> mc_bayes_risk(const gmleb::DiscreteMixture& g,
                                               std::size_t draws, std::uint64_t seed) {
  gmleb::Rng rng(seed);
  // Inverse-CDF sampling from the atom weights.
  std::vector<double> cum(g.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    acc += g.weights()[j];
    cum[j] = acc;
  }
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double u = rng.uniform01();
    std::size_t j = 0;
    while (j + 1 < g.size() && cum[j] < u) ++j;
    const double xi = g.support()[j];
    const double y = xi + rng.normal();
    const double err = gmleb::posterior_mean(g, y) - xi;
    const double loss = err * err;
    sum += loss;
    sumsq += loss * loss;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  return {mean, se};
}

//! Upper-alpha normal quantile by bisection on the CDF.
inline double normal_upper_quantile_bisect(double alpha) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (1.0 - gmleb::normal_cdf(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

//! SURE objective for soft thresholding, written directly from its formula.
inline double sure_objective(const std::vector<double>& x, double t) {
  double v = static_cast<double>(x.size());
  for (double xi : x) {
    if (std::fabs(xi) <= t) v -= 2.0;
    v += std::min(xi * xi, t * t);
  }
  return v;
}

//! Midpoint-rule quadrature of int_0^b e^{t^2/2} cos(z t) dt with many panels.
inline double zero_score_integral(double z, double b, std::size_t panels = 1000000) {
  const double h = b / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * h;
    acc += std::exp(0.5 * t * t) * std::cos(z * t);
  }
  return acc * h;
}

}  // namespace oracle
