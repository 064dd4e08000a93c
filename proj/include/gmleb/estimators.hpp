#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmleb/mixture.hpp"
#include "gmleb/normal.hpp"
#include "gmleb/npmle.hpp"
#include "gmleb/quadrature.hpp"

namespace gmleb {

enum class EstimatorKind {
  gmleb,
  s_gmleb,
  oracle,
  james_stein,
  sure,
  fdr,
  universal_soft,
  universal_hard,
  identity,
};

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::gmleb: return "gmleb";
    case EstimatorKind::s_gmleb: return "s_gmleb";
    case EstimatorKind::oracle: return "oracle";
    case EstimatorKind::james_stein: return "james_stein";
    case EstimatorKind::sure: return "sure";
    case EstimatorKind::fdr: return "fdr";
    case EstimatorKind::universal_soft: return "universal_soft";
    case EstimatorKind::universal_hard: return "universal_hard";
    case EstimatorKind::identity: return "identity";
  }
  return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "gmleb") return EstimatorKind::gmleb;
  if (s == "s_gmleb") return EstimatorKind::s_gmleb;
  if (s == "oracle") return EstimatorKind::oracle;
  if (s == "james_stein") return EstimatorKind::james_stein;
  if (s == "sure") return EstimatorKind::sure;
  if (s == "fdr") return EstimatorKind::fdr;
  if (s == "universal_soft") return EstimatorKind::universal_soft;
  if (s == "universal_hard") return EstimatorKind::universal_hard;
  if (s == "identity") return EstimatorKind::identity;
  throw std::invalid_argument("unknown estimator kind: " + s);
}

enum class GridMode { paper, certified };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::identity;
  double fdr_q = 0.1;            //!< FDR level, used by kind == fdr only
  double kappa = 0.5;            //!< zero-proportion bandwidth constant (s_gmleb)
  GridMode grid_mode = GridMode::paper;
  StopRule stop = FixedIterations{100};

  static EstimatorSpec of(EstimatorKind k) {
    EstimatorSpec s;
    s.kind = k;
    return s;
  }

  static EstimatorSpec fdr_at(double q) {
    if (!(q > 0.0) || q > 0.5) {
      throw std::invalid_argument("fdr level q must lie in (0, 1/2]");
    }
    EstimatorSpec s;
    s.kind = EstimatorKind::fdr;
    s.fdr_q = q;
    return s;
  }

  //! Label carrying the level for FDR, plain kind name otherwise.
  std::string label() const {
    if (kind == EstimatorKind::fdr) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "fdr(%g)", fdr_q);
      return buf;
    }
    return to_string(kind);
  }
};

struct EstimateResult {
  std::vector<double> estimates;
  std::optional<DiscreteMixture> mixture;  //!< fitted/empirical prior (EB kinds)
  std::optional<double> threshold;         //!< chosen threshold (threshold kinds)
  std::optional<double> shrink_factor;     //!< James-Stein shrinkage factor
};

namespace detail {

inline Grid make_grid(const std::vector<double>& x, GridMode mode) {
  return mode == GridMode::paper ? build_grid_paper(x) : build_grid_certified(x);
}

inline EstimateResult posterior_mean_all(const DiscreteMixture& g, const std::vector<double>& x) {
  EstimateResult out;
  out.estimates.reserve(x.size());
  for (double v : x) out.estimates.push_back(posterior_mean(g, v));
  out.mixture = g;
  return out;
}

//! Index of the grid point closest to zero.
inline std::size_t nearest_zero_index(const std::vector<double>& grid) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (std::fabs(grid[j]) < std::fabs(grid[best])) best = j;
  }
  return best;
}

//! Quadrature table for the Fourier deconvolution score
//!   psi(z; h) = h * int_0^{1/h} e^{t^2/2} cos(zt) dt
//! (uniform[-1,1] spectral window). The nodes and e^{t^2/2}-weighted Simpson
//! coefficients depend only on h, so one table serves a whole data scan.
class ZeroScoreTable {
 public:
  explicit ZeroScoreTable(double h, std::size_t panels = 4096) : nodes_(panels + 1), coef_(panels + 1) {
    const double b = 1.0 / h;
    const double step = b / static_cast<double>(panels);
    for (std::size_t k = 0; k <= panels; ++k) {
      const double t = step * static_cast<double>(k);
      double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      nodes_[k] = t;
      coef_[k] = w * std::exp(0.5 * t * t) * step / 3.0 * h;
    }
  }

  double operator()(double z) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) acc += coef_[k] * std::cos(z * nodes_[k]);
    return acc;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> coef_;
};

inline double zero_score(double z, double h) { return ZeroScoreTable(h)(z); }

//! Unclamped Fourier estimate of the proportion of zero means.
inline double zero_proportion_raw(const std::vector<double>& x, double kappa) {
  if (x.size() < 2) throw std::invalid_argument("zero proportion needs n >= 2");
  const double h = 1.0 / std::sqrt(kappa * std::log(static_cast<double>(x.size())));
  const ZeroScoreTable psi(h);
  double acc = 0.0;
  for (double v : x) acc += psi(v);
  return acc / static_cast<double>(x.size());
}

}  // namespace detail

//! Fourier estimate of the proportion of zeros among the means, clamped to
//! [0, 1]; bandwidth h_n = (kappa log n)^{-1/2}.
inline double estimate_zero_proportion(const std::vector<double>& x, double kappa = 0.5) {
  return std::clamp(detail::zero_proportion_raw(x, kappa), 0.0, 1.0);
}

//! Empirical-Bayes estimate: fit the grid NPMLE by EM and apply its
//! posterior-mean rule to every coordinate. Uniform EM initialization.
inline EstimateResult gmleb(const std::vector<double>& x,
                            const EstimatorSpec& spec = EstimatorSpec::of(EstimatorKind::gmleb)) {
  if (x.empty()) throw std::invalid_argument("gmleb: empty data");
  Grid grid = detail::make_grid(x, spec.grid_mode);
  std::vector<double> init(grid.points.size(), 1.0 / static_cast<double>(grid.points.size()));
  NpmleFit fit = fit_npmle(x, grid.points, init, spec.stop);
  return detail::posterior_mean_all(fit.mixture, x);
}

//! Sparsity-aware variant: EM starts with the estimated zero proportion on
//! the grid point at 0 and the rest spread uniformly.
inline EstimateResult s_gmleb(const std::vector<double>& x,
                              const EstimatorSpec& spec = EstimatorSpec::of(EstimatorKind::s_gmleb)) {
  if (x.size() < 2) throw std::invalid_argument("s_gmleb: needs n >= 2");
  // Cap the starting mass at zero strictly below 1: a zero initial weight is
  // absorbing under the multiplicative update, so every atom must keep some.
  const double omega0 = std::min(estimate_zero_proportion(x, spec.kappa), 1.0 - 1e-3);
  Grid grid = detail::make_grid(x, spec.grid_mode);
  const std::size_t m = grid.points.size();
  std::vector<double> init(m, m > 1 ? (1.0 - omega0) / static_cast<double>(m - 1) : 1.0);
  if (m > 1) init[detail::nearest_zero_index(grid.points)] = omega0;
  NpmleFit fit = fit_npmle(x, grid.points, init, spec.stop);
  return detail::posterior_mean_all(fit.mixture, x);
}

//! Benchmark separable rule: posterior mean under the empirical distribution
//! of the true means.
inline EstimateResult oracle_rule(const std::vector<double>& theta, const std::vector<double>& x) {
  if (theta.size() != x.size()) throw std::invalid_argument("oracle_rule: length mismatch");
  return detail::posterior_mean_all(DiscreteMixture::empirical(theta), x);
}

//! Positive-part James-Stein shrinkage toward the grand mean.
inline EstimateResult james_stein(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("james_stein: needs n >= 4");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double factor = ss > 0.0 ? std::max(0.0, 1.0 - static_cast<double>(n - 3) / ss) : 0.0;
  EstimateResult out;
  out.estimates.reserve(n);
  for (double v : x) out.estimates.push_back(mean + factor * (v - mean));
  out.shrink_factor = factor;
  return out;
}

namespace detail {

inline double soft(double x, double t) {
  const double a = std::fabs(x) - t;
  return a > 0.0 ? (x > 0.0 ? a : -a) : 0.0;
}

//! Stein's unbiased risk estimate for soft thresholding at t.
inline double sure_objective(const std::vector<double>& x, double t) {
  double acc = static_cast<double>(x.size());
  const double t2 = t * t;
  for (double v : x) {
    const double v2 = v * v;
    if (std::fabs(v) <= t) acc -= 2.0;
    acc += std::min(v2, t2);
  }
  return acc;
}

}  // namespace detail

//! Soft thresholding with the threshold chosen by minimizing SURE over the
//! data-driven candidate set {0} u {|X_i| <= sqrt(2 log n)} u {sqrt(2 log n)};
//! ties break toward the smaller threshold.
inline EstimateResult sure_soft(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("sure_soft: empty data");
  const double cap = std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
  std::vector<double> candidates{0.0, cap};
  for (double v : x) {
    const double a = std::fabs(v);
    if (a <= cap) candidates.push_back(a);
  }
  std::sort(candidates.begin(), candidates.end());
  double best_t = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const double val = detail::sure_objective(x, t);
    if (val < best_val) {
      best_val = val;
      best_t = t;
    }
  }
  EstimateResult out;
  out.estimates.reserve(x.size());
  for (double v : x) out.estimates.push_back(detail::soft(v, best_t));
  out.threshold = best_t;
  return out;
}

//! Step-down false-discovery-rate hard threshold: keep the k largest
//! |X| where k is the last rank passing |X|_(k) >= z(q k / (2n)).
inline EstimateResult fdr_threshold(const std::vector<double>& x, double q) {
  if (!(q > 0.0) || q > 0.5) throw std::invalid_argument("fdr_threshold: q must lie in (0, 1/2]");
  if (x.empty()) throw std::invalid_argument("fdr_threshold: empty data");
  const std::size_t n = x.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::fabs(x[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());
  std::size_t k_hat = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double cut = normal_upper_quantile(q * static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    if (mag[k - 1] >= cut) k_hat = k;
  }
  EstimateResult out;
  out.estimates.assign(n, 0.0);
  if (k_hat == 0) {
    out.threshold = std::numeric_limits<double>::infinity();
    return out;
  }
  const double t = mag[k_hat - 1];
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(x[i]) >= t) out.estimates[i] = x[i];
  }
  out.threshold = t;
  return out;
}

//! Thresholding at the universal level sqrt(2 log n); hard keeps strictly
//! above the threshold.
inline EstimateResult universal(const std::vector<double>& x, bool soft_mode) {
  if (x.empty()) throw std::invalid_argument("universal: empty data");
  const double lambda = std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
  EstimateResult out;
  out.estimates.reserve(x.size());
  for (double v : x) {
    out.estimates.push_back(soft_mode ? detail::soft(v, lambda)
                                      : (std::fabs(v) > lambda ? v : 0.0));
  }
  out.threshold = lambda;
  return out;
}

inline EstimateResult identity_estimator(const std::vector<double>& x) {
  EstimateResult out;
  out.estimates = x;
  return out;
}

//! Dispatch on the estimator specification. `theta` is required for the
//! oracle kind and ignored otherwise.
inline EstimateResult apply_estimator(const EstimatorSpec& spec, const std::vector<double>& x,
                                      const std::vector<double>* theta = nullptr) {
  switch (spec.kind) {
    case EstimatorKind::gmleb: return gmleb(x, spec);
    case EstimatorKind::s_gmleb: return s_gmleb(x, spec);
    case EstimatorKind::oracle:
      if (theta == nullptr) throw std::invalid_argument("oracle estimator requires the truth vector");
      return oracle_rule(*theta, x);
    case EstimatorKind::james_stein: return james_stein(x);
    case EstimatorKind::sure: return sure_soft(x);
    case EstimatorKind::fdr: return fdr_threshold(x, spec.fdr_q);
    case EstimatorKind::universal_soft: return universal(x, true);
    case EstimatorKind::universal_hard: return universal(x, false);
    case EstimatorKind::identity: return identity_estimator(x);
  }
  throw std::logic_error("apply_estimator: unhandled kind");
}

}  // namespace gmleb
