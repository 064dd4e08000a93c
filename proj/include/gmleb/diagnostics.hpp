#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gmleb/mixture.hpp"
#include "gmleb/normal.hpp"

namespace gmleb {

struct LossReport {
  double total_sq_error = 0.0;
  double avg_loss = 0.0;
  std::optional<double> regret;
  std::optional<double> sqrt_regret;
};

//! Compound squared-error loss of an estimate against the truth.
inline LossReport average_loss(const std::vector<double>& estimate,
                               const std::vector<double>& truth) {
  if (estimate.size() != truth.size() || estimate.empty()) {
    throw std::invalid_argument("average_loss: length mismatch");
  }
  LossReport r;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - truth[i];
    r.total_sq_error += d * d;
  }
  r.avg_loss = r.total_sq_error / static_cast<double>(estimate.size());
  return r;
}

//! p-th weak moment (sup_x x^p * tail mass beyond x)^(1/p); p may be +inf,
//! in which case this is the largest |atom| carrying positive weight.
//!
//! For an atomic distribution the supremum is approached as x increases to
//! an atom's absolute value, so the closed tail {|u| >= a} is the mass that
//! counts at candidate a.
inline double weak_moment(const DiscreteMixture& g, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("weak_moment: p must be positive");
  double best_abs = 0.0;
  if (std::isinf(p)) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.weights()[j] > 0.0) best_abs = std::max(best_abs, std::fabs(g.support()[j]));
    }
    return best_abs;
  }
  double best_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double a = std::fabs(g.support()[j]);
    if (a <= 0.0) continue;
    double tail = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (std::fabs(g.support()[k]) >= a) tail += g.weights()[k];
    }
    if (tail <= 0.0) continue;
    best_log = std::max(best_log, std::log(a) + std::log(tail) / p);
  }
  return std::isinf(best_log) ? 0.0 : std::exp(best_log);
}

//! Convergence-rate functional
//!   eps(n, G, p) = max[sqrt(2 log n), (n^{1/p} sqrt(log n) mu_p^w)^{p/(2+2p)}]
//!                  * sqrt(log n / n),
//! with the separate max form at p = +inf. Logarithms saturate at 1.
inline double rate_epsilon(std::size_t n, const DiscreteMixture& g, double p) {
  if (n < 2) throw std::invalid_argument("rate_epsilon: n must be >= 2");
  if (!(p > 0.0)) throw std::invalid_argument("rate_epsilon: p must be positive");
  const double ln = log_at_least_e(static_cast<double>(n));
  if (!(ln >= 2.0 / p)) {
    throw std::invalid_argument("rate_epsilon: requires log n >= 2/p");
  }
  const double mu = weak_moment(g, p);
  const double tail_factor = std::sqrt(ln / static_cast<double>(n));
  if (std::isinf(p)) {
    const double inner = std::max(2.0 * ln, std::sqrt(ln) * mu);
    return std::sqrt(inner) * tail_factor;
  }
  double second = 0.0;
  if (mu > 0.0) {
    const double log_arg = std::log(static_cast<double>(n)) / p + 0.5 * std::log(ln) + std::log(mu);
    second = std::exp(log_arg * p / (2.0 + 2.0 * p));
  }
  return std::max(std::sqrt(2.0 * ln), second) * tail_factor;
}

struct Regret {
  double regret;
  double sqrt_regret;
};

//! Excess risk over the benchmark, on the plain and square-root scales.
inline Regret regret(double risk, double oracle_risk) {
  if (risk < 0.0 || oracle_risk < 0.0) {
    throw std::invalid_argument("regret: risks must be nonnegative");
  }
  return {risk - oracle_risk, std::sqrt(risk) - std::sqrt(oracle_risk)};
}

//! Fill a loss report's regret fields against a benchmark risk on the same
//! (average-loss) scale.
inline LossReport regret(LossReport report, double oracle_risk) {
  const Regret r = regret(report.avg_loss, oracle_risk);
  report.regret = r.regret;
  report.sqrt_regret = r.sqrt_regret;
  return report;
}

}  // namespace gmleb
