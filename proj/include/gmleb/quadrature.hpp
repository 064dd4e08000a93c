#pragma once

#include <cstddef>
#include <stdexcept>

namespace gmleb {

//! Composite Simpson rule with a fixed even panel count.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t panels) {
  if (panels == 0 || panels % 2 != 0) {
    throw std::invalid_argument("simpson: panel count must be even and positive");
  }
  const double h = (b - a) / static_cast<double>(panels);
  double acc = f(a) + f(b);
  for (std::size_t k = 1; k < panels; ++k) {
    const double x = a + h * static_cast<double>(k);
    acc += (k % 2 == 1 ? 4.0 : 2.0) * f(x);
  }
  return acc * h / 3.0;
}

//! Simpson rule with a target step size; the panel count is rounded up
//! to the nearest even integer so the effective step is <= `step`.
template <typename F>
double simpson_with_step(F&& f, double a, double b, double step) {
  if (!(b > a)) return 0.0;
  auto panels = static_cast<std::size_t>((b - a) / step) + 1;
  if (panels % 2 != 0) ++panels;
  return simpson(f, a, b, panels);
}

}  // namespace gmleb
