#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gmleb/normal.hpp"
#include "gmleb/quadrature.hpp"

namespace gmleb {

//! A finitely supported distribution on the real line: strictly increasing
//! support points and nonnegative weights summing to one.
//!
//! Serves both as a fitted mixing distribution and as the empirical
//! distribution of a known mean vector.
class DiscreteMixture {
 public:
  DiscreteMixture(std::vector<double> support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    validate();
    normalize();
  }

  static DiscreteMixture point_mass(double u) { return DiscreteMixture({u}, {1.0}); }

  //! Empirical distribution of a value vector: atoms at the distinct values,
  //! weights proportional to multiplicities.
  static DiscreteMixture empirical(const std::vector<double>& values) {
    if (values.empty()) {
      throw std::invalid_argument("DiscreteMixture::empirical: empty input");
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> support;
    std::vector<double> weights;
    const double unit = 1.0 / static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (support.empty() || sorted[i] != support.back()) {
        support.push_back(sorted[i]);
        weights.push_back(unit);
      } else {
        weights.back() += unit;
      }
    }
    return DiscreteMixture(std::move(support), std::move(weights));
  }

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }
  double min_support() const { return support_.front(); }
  double max_support() const { return support_.back(); }

  DiscreteMixture shifted(double c) const {
    std::vector<double> s = support_;
    for (double& u : s) u += c;
    return DiscreteMixture(std::move(s), weights_);
  }

 private:
  void validate() const {
    if (support_.empty() || support_.size() != weights_.size()) {
      throw std::invalid_argument("DiscreteMixture: support/weights must be nonempty and equal length");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < support_.size(); ++j) {
      if (!std::isfinite(support_[j]) || !std::isfinite(weights_[j])) {
        throw std::invalid_argument("DiscreteMixture: entries must be finite");
      }
      if (weights_[j] < 0.0) {
        throw std::invalid_argument("DiscreteMixture: weights must be nonnegative");
      }
      if (j > 0 && !(support_[j] > support_[j - 1])) {
        throw std::invalid_argument("DiscreteMixture: support must be strictly increasing");
      }
      sum += weights_[j];
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("DiscreteMixture: weights must sum to 1 within 1e-12");
    }
  }

  void normalize() {
    double sum = 0.0;
    for (double w : weights_) sum += w;
    for (double& w : weights_) w /= sum;
  }

  std::vector<double> support_;
  std::vector<double> weights_;
};

//! Density floor for the regularized posterior-mean rule. rho = 0 recovers
//! the plain rule, rho = +inf the identity map.
struct RegularizationLevel {
  double rho = 0.0;

  RegularizationLevel() = default;
  explicit RegularizationLevel(double r) : rho(r) {
    if (std::isnan(rho) || rho < 0.0) {
      throw std::invalid_argument("RegularizationLevel: rho must be >= 0");
    }
  }
};

//! Mixture density f_G(x) = sum_j w_j phi(x - u_j).
inline double mixture_density(const DiscreteMixture& g, double x) {
  double f = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    f += g.weights()[j] * normal_pdf(x - g.support()[j]);
  }
  return f;
}

//! log f_G(x) by log-sum-exp; immune to underflow for |x - u_j| up to ~1e8.
inline double log_mixture_density(const DiscreteMixture& g, double x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g.weights()[j] <= 0.0) continue;
    const double d = x - g.support()[j];
    const double e = std::log(g.weights()[j]) - 0.5 * d * d;
    if (e > mx) mx = e;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g.weights()[j] <= 0.0) continue;
    const double d = x - g.support()[j];
    acc += std::exp(std::log(g.weights()[j]) - 0.5 * d * d - mx);
  }
  return mx + std::log(acc) - 0.5 * log_two_pi;
}

struct DensityDerivs {
  double f;    //!< f_G(x)
  double df;   //!< f'_G(x)
  double ddf;  //!< f''_G(x)
};

//! f_G and its first two derivatives in closed form.
inline DensityDerivs mixture_density_derivs(const DiscreteMixture& g, double x) {
  DensityDerivs out{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double d = x - g.support()[j];
    const double k = g.weights()[j] * normal_pdf(d);
    out.f += k;
    out.df += -d * k;
    out.ddf += (d * d - 1.0) * k;
  }
  return out;
}

namespace detail {

//! Posterior weights of the atoms given x, via log-sum-exp.
//! Returns E[u | x] and, optionally, E[(u - x)^2 | x].
struct PosteriorMoments {
  double mean;
  double second_central;  // E[(u - x)^2 | x]
};

inline PosteriorMoments posterior_moments(const DiscreteMixture& g, double x) {
  const auto& u = g.support();
  const auto& w = g.weights();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (w[j] <= 0.0) continue;
    const double d = x - u[j];
    const double e = std::log(w[j]) - 0.5 * d * d;
    if (e > mx) mx = e;
  }
  double norm = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (w[j] <= 0.0) continue;
    const double d = x - u[j];
    const double p = std::exp(std::log(w[j]) - 0.5 * d * d - mx);
    norm += p;
    m1 += p * u[j];
    m2 += p * d * d;
  }
  return {m1 / norm, m2 / norm};
}

}  // namespace detail

//! Posterior mean E[u | x] under prior G and unit-variance normal noise.
//! Always lies in [min support, max support].
inline double posterior_mean(const DiscreteMixture& g, double x) {
  return detail::posterior_moments(g, x).mean;
}

//! Regularized posterior-mean rule x + f'_G(x) / (f_G(x) v rho).
//!
//! Evaluated as x + (E[u|x] - x) * min(1, f_G(x)/rho) with the ratio formed
//! in log space, so the value is an exact convex combination of the plain
//! rule and the identity.
inline double regularized_posterior_mean(const DiscreteMixture& g, double x,
                                         RegularizationLevel rho) {
  const double t = posterior_mean(g, x);
  if (rho.rho == 0.0) return t;
  if (std::isinf(rho.rho)) return x;
  const double log_ratio = log_mixture_density(g, x) - std::log(rho.rho);
  if (log_ratio >= 0.0) return t;  // density clears the floor: plain rule, bit for bit
  return x + (t - x) * std::exp(log_ratio);
}

//! Minimum Bayes risk R*(G) = 1 - int (f'_G/f_G)^2 f_G, by composite Simpson
//! with step 0.01 over [min support - 8, max support + 8].
inline double bayes_risk(const DiscreteMixture& g) {
  const double a = g.min_support() - 8.0;
  const double b = g.max_support() + 8.0;
  auto integrand = [&](double x) {
    const double score = posterior_mean(g, x) - x;  // f'/f
    const double v = score * score * std::exp(log_mixture_density(g, x));
    return v > 0.0 ? v : 0.0;
  };
  return 1.0 - simpson_with_step(integrand, a, b, 0.01);
}

//! Hellinger distance between the mixture densities of G and H, by Simpson
//! quadrature over the union of supports padded by 8.
inline double hellinger(const DiscreteMixture& g, const DiscreteMixture& h) {
  const double a = std::min(g.min_support(), h.min_support()) - 8.0;
  const double b = std::max(g.max_support(), h.max_support()) + 8.0;
  auto integrand = [&](double x) {
    const double lg = log_mixture_density(g, x);
    const double lh = log_mixture_density(h, x);
    const double fg = std::exp(lg);
    const double fh = std::exp(lh);
    const double cross = std::exp(0.5 * (lg + lh));
    const double v = fg + fh - 2.0 * cross;
    return v > 0.0 ? v : 0.0;
  };
  const double d2 = simpson_with_step(integrand, a, b, 0.01);
  return std::sqrt(d2 > 0.0 ? d2 : 0.0);
}

//! Two-column CSV serialization, `support,weight` with a header row.
inline void write_mixture_csv(const DiscreteMixture& g, std::ostream& os) {
  os << "support,weight\n";
  os.precision(17);
  for (std::size_t j = 0; j < g.size(); ++j) {
    os << g.support()[j] << ',' << g.weights()[j] << '\n';
  }
}

inline void write_mixture_csv(const DiscreteMixture& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_mixture_csv(g, os);
}

inline DiscreteMixture read_mixture_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "support,weight") {
    throw std::runtime_error("mixture CSV: missing `support,weight` header");
  }
  std::vector<double> support, weights;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) {
      throw std::runtime_error("mixture CSV: malformed row at line " + std::to_string(lineno));
    }
    try {
      support.push_back(std::stod(a));
      weights.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw std::runtime_error("mixture CSV: non-numeric value at line " + std::to_string(lineno));
    }
  }
  return DiscreteMixture(std::move(support), std::move(weights));
}

inline DiscreteMixture read_mixture_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_mixture_csv(is);
}

}  // namespace gmleb
