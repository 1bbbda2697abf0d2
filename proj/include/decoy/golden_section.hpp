#pragma once

#include <cmath>
#include <cstddef>

namespace decoy {

struct GoldenSectionResult {
  double x = 0.0;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Maximizes a unimodal f on [lo, hi] until the bracket is narrower than tol.
/// One new evaluation per iteration; the returned point is the best probe seen.
template <class F>
GoldenSectionResult golden_section_maximize(F&& f, double lo, double hi, double tol,
                                            std::size_t max_iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);

  std::size_t it = 0;
  for (; it < max_iterations && (b - a) > tol; ++it) {
    // Ties go left so the search is biased towards the smaller argument.
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }

  if (fc >= fd) return {c, fc, it};
  return {d, fd, it};
}

}  // namespace decoy
