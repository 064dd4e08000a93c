#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmleb {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt_two_pi = 2.50662827463100050242;
inline constexpr double log_two_pi = 1.83787706640934548356;

//! Standard normal density phi(x).
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / sqrt_two_pi;
}

inline double log_normal_pdf(double x) {
  return -0.5 * x * x - 0.5 * log_two_pi;
}

//! Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

//! Inverse of y = phi(x) for x >= 0: sqrt(-log(2 pi y^2)).
//! The square-root argument is clamped at 0 so that y marginally above
//! phi(0) (rounding noise) maps to 0 instead of NaN.
inline double inv_normal_pdf(double y) {
  constexpr double phi0 = 1.0 / sqrt_two_pi;
  if (!(y > 0.0) || y > phi0 + 1e-9) {
    throw std::domain_error("inv_normal_pdf: argument must lie in (0, phi(0)]");
  }
  const double arg = -2.0 * std::log(y) - log_two_pi;
  return std::sqrt(arg > 0.0 ? arg : 0.0);
}

//! Inverse standard normal CDF, Wichura's PPND16 (algorithm AS 241).
//! Accurate to ~1e-16 over (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

//! Upper-alpha quantile of the standard normal: P(Z >= z) = alpha.
inline double normal_upper_quantile(double alpha) {
  return -normal_quantile(alpha);
}

//! log(x v e): logarithms in rate formulas never drop below 1.
inline double log_at_least_e(double x) {
  return x > 2.718281828459045 ? std::log(x) : 1.0;
}

}  // namespace gmleb
