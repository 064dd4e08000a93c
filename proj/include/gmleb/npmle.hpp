#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gmleb/mixture.hpp"
#include "gmleb/normal.hpp"

namespace gmleb {

//! Default likelihood-approximation factor q_n = (e sqrt(2 pi) / n^2) ^ 1.
inline double default_approximation_factor(std::size_t n) {
  const double q = std::exp(1.0) * sqrt_two_pi / (static_cast<double>(n) * static_cast<double>(n));
  return q < 1.0 ? q : 1.0;
}

struct Grid {
  std::vector<double> points;
  double spacing = 0.0;   //!< 0 for a degenerate single-point grid
  bool degenerate = false;
  std::size_t zero_index = 0;  //!< index of the atom at 0 (paper-style grids only)
};

//! Equispaced grid of 999-1000 points covering the range of the data with 0
//! adjoined; every point is an exact integer multiple of the spacing, so 0
//! itself is always a grid point.
inline Grid build_grid_paper(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("build_grid_paper: empty data");
  double lo = 0.0, hi = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("build_grid_paper: non-finite data");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    return Grid{{0.0}, 0.0, true, 0};
  }
  const double eps = (hi - lo) / 999.0;
  // Index bounds with a small tolerance so exact multiples of eps stay put.
  const auto j_lo = static_cast<long>(std::ceil(lo / eps - 1e-9));
  const auto j_hi = static_cast<long>(std::floor(hi / eps + 1e-9));
  Grid grid;
  grid.spacing = eps;
  grid.points.reserve(static_cast<std::size_t>(j_hi - j_lo + 1));
  for (long j = j_lo; j <= j_hi; ++j) {
    grid.points.push_back(static_cast<double>(j) * eps);
  }
  grid.zero_index = static_cast<std::size_t>(-j_lo);
  return grid;
}

//! Equispaced grid over [min X, max X] with the smallest point count m such
//! that spacing^2 * (range^2/4 + 1/8) <= 1/n.
inline Grid build_grid_certified(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("build_grid_certified: empty data");
  double lo = x[0], hi = x[0];
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("build_grid_certified: non-finite data");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    return Grid{{lo}, 0.0, true, 0};
  }
  const double r = hi - lo;
  const auto n = static_cast<double>(x.size());
  const auto intervals =
      static_cast<std::size_t>(std::ceil(r * std::sqrt(n * (r * r / 4.0 + 0.125)) - 1e-12));
  const std::size_t m = std::max<std::size_t>(intervals, 1) + 1;
  Grid grid;
  grid.spacing = r / static_cast<double>(m - 1);
  grid.points.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    grid.points.push_back(lo + grid.spacing * static_cast<double>(j));
  }
  grid.points.back() = hi;
  return grid;
}

//! Sum of log mixture densities over the data.
inline double log_likelihood(const DiscreteMixture& g, const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += log_mixture_density(g, v);
  return acc;
}

//! n x m matrix of phi(X_i - u_j), row-major. Computed once per fit and
//! reused by every EM iteration.
class KernelMatrix {
 public:
  KernelMatrix(const std::vector<double>& x, const std::vector<double>& grid)
      : n_(x.size()), m_(grid.size()), data_(n_ * m_) {
    for (std::size_t i = 0; i < n_; ++i) {
      double* row = data_.data() + i * m_;
      for (std::size_t j = 0; j < m_; ++j) {
        row[j] = normal_pdf(x[i] - grid[j]);
      }
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }
  const double* row(std::size_t i) const { return data_.data() + i * m_; }

 private:
  std::size_t n_, m_;
  std::vector<double> data_;
};

namespace detail {

//! One multiplicative EM update. The per-observation mixture densities fall
//! out of the update, so the log-likelihood of the *incoming* weights is
//! reported through `incoming_loglik` for free.
inline std::vector<double> em_step_scored(const std::vector<double>& weights,
                                          const KernelMatrix& k, double& incoming_loglik) {
  const std::size_t n = k.rows();
  const std::size_t m = k.cols();
  if (weights.size() != m) throw std::invalid_argument("em_step: weight/grid size mismatch");
  std::vector<double> acc(m, 0.0);
  double loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = k.row(i);
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) denom += weights[j] * row[j];
    if (!(denom > 0.0)) {
      throw std::runtime_error("em_step: zero mixture density at an observation (grid does not cover data)");
    }
    loglik += std::log(denom);
    const double inv = 1.0 / denom;
    for (std::size_t j = 0; j < m; ++j) acc[j] += row[j] * inv;
  }
  incoming_loglik = loglik;
  std::vector<double> out(m);
  const double scale = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = weights[j] * acc[j] * scale;
    sum += out[j];
  }
  // Exact-arithmetic sum is 1; renormalize away the rounding drift.
  for (std::size_t j = 0; j < m; ++j) out[j] /= sum;
  return out;
}

}  // namespace detail

//! One multiplicative EM update of the mixture weights. Returns the updated
//! weights; zero weights stay zero.
inline std::vector<double> em_step(const std::vector<double>& weights, const KernelMatrix& k) {
  double unused = 0.0;
  return detail::em_step_scored(weights, k, unused);
}

struct FixedIterations {
  std::size_t count = 100;
};

struct CertifiedStop {
  double q_n;                       //!< likelihood approximation factor
  std::size_t max_iterations = 100000;
};

using StopRule = std::variant<FixedIterations, CertifiedStop>;

struct Certificate {
  double max_log_weight_ratio = 0.0;
  double threshold = 0.0;
  bool satisfied = false;
};

struct NpmleFit {
  DiscreteMixture mixture;
  std::vector<double> loglik_trace;  //!< per EM iteration, initial state included
  std::size_t iterations = 0;
  std::optional<Certificate> certificate;

  double final_loglik() const { return loglik_trace.back(); }
};

namespace detail {

inline bool all_equal(const std::vector<double>& x) {
  for (double v : x) {
    if (v != x.front()) return false;
  }
  return true;
}

//! max_j log(w_j / w_j_prev); pairs of zeros count as ratio 1 (zeros are
//! absorbing under the multiplicative update).
inline double max_log_weight_ratio(const std::vector<double>& now,
                                   const std::vector<double>& prev) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < now.size(); ++j) {
    double r = 0.0;
    if (prev[j] > 0.0) {
      r = std::log(now[j] / prev[j]);
    }
    if (r > mx) mx = r;
  }
  return mx;
}

}  // namespace detail

//! EM solve for the grid-restricted maximum likelihood mixing distribution.
//!
//! `fixed` mode runs exactly `count` iterations; `certified` mode iterates
//! until the weight-ratio stopping criterion
//!   max_j log(w_j^{(k)} / w_j^{(k-1)}) <= (1/n) log(1 / (e q_n))
//! certifies a likelihood within factor q_n of the grid-restricted supremum,
//! or gives up at the iteration cap with certificate.satisfied = false.
inline NpmleFit fit_npmle(const std::vector<double>& x, const std::vector<double>& grid,
                          std::vector<double> weights, const StopRule& stop) {
  if (x.empty()) throw std::invalid_argument("fit_npmle: empty data");
  if (grid.empty() || grid.size() != weights.size()) {
    throw std::invalid_argument("fit_npmle: grid/weights size mismatch");
  }
  const bool certified = std::holds_alternative<CertifiedStop>(stop);
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("fit_npmle: negative initial weight");
    if (certified && !(w > 0.0)) {
      throw std::invalid_argument("fit_npmle: certified stopping needs strictly positive initial weights");
    }
    wsum += w;
  }
  for (double& w : weights) w /= wsum;

  // All observations equal: the exact solution over all distributions is a
  // point mass at the common value, so return it without iterating.
  if (detail::all_equal(x)) {
    DiscreteMixture g = DiscreteMixture::point_mass(x.front());
    NpmleFit fit{g, {log_likelihood(g, x)}, 0, std::nullopt};
    if (certified) {
      const auto& c = std::get<CertifiedStop>(stop);
      fit.certificate = Certificate{0.0,
                                    std::log(1.0 / (std::exp(1.0) * c.q_n)) / static_cast<double>(x.size()),
                                    true};
    }
    return fit;
  }

  KernelMatrix kernel(x, grid);
  const std::size_t n = x.size();
  const std::size_t m = grid.size();

  auto loglik_of = [&](const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = kernel.row(i);
      double f = 0.0;
      for (std::size_t j = 0; j < m; ++j) f += w[j] * row[j];
      acc += std::log(f);
    }
    return acc;
  };

  NpmleFit fit{DiscreteMixture::point_mass(0.0), {}, 0, std::nullopt};

  std::size_t limit;
  double threshold = 0.0;
  if (certified) {
    const auto& c = std::get<CertifiedStop>(stop);
    if (!(c.q_n > 0.0) || c.q_n > 1.0) {
      throw std::invalid_argument("fit_npmle: q_n must lie in (0, 1]");
    }
    threshold = std::log(1.0 / (std::exp(1.0) * c.q_n)) / static_cast<double>(n);
    limit = c.max_iterations;
  } else {
    limit = std::get<FixedIterations>(stop).count;
  }

  // Each update reports the log-likelihood of the weights it consumed, so the
  // trace costs one extra pass for the final state only.
  double last_ratio = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  while (iter < limit) {
    double incoming = 0.0;
    std::vector<double> next = detail::em_step_scored(weights, kernel, incoming);
    fit.loglik_trace.push_back(incoming);
    ++iter;
    if (certified) {
      last_ratio = detail::max_log_weight_ratio(next, weights);
      weights = std::move(next);
      if (last_ratio <= threshold) break;
    } else {
      weights = std::move(next);
    }
  }
  fit.loglik_trace.push_back(loglik_of(weights));

  fit.iterations = iter;
  if (certified) {
    fit.certificate = Certificate{last_ratio, threshold, last_ratio <= threshold};
  }
  fit.mixture = DiscreteMixture(grid, weights);
  return fit;
}

//! Per-observation check of the density floor f_G(X_j) >= (q_n/(e n)) phi(0)
//! that a certified fit guarantees.
inline std::vector<bool> density_floor_check(const NpmleFit& fit, const std::vector<double>& x,
                                             double q_n) {
  const double floor =
      q_n / (std::exp(1.0) * static_cast<double>(x.size())) * normal_pdf(0.0);
  std::vector<bool> ok;
  ok.reserve(x.size());
  for (double v : x) {
    ok.push_back(std::exp(log_mixture_density(fit.mixture, v)) >= floor);
  }
  return ok;
}

}  // namespace gmleb
