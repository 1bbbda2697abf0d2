#pragma once

// Test-only reference computations. Nothing here calls into the library.

#include <cmath>
#include <functional>

namespace oracle {

inline double pmf(int n, double mu) {
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mu) - mu - std::lgamma(n + 1.0));
}

/// Sum_{n >= 2} P_n(mu), truncated at n = 50.
inline double multi_photon_series(double mu) {
  double s = 0.0;
  for (int n = 2; n <= 50; ++n) s += pmf(n, mu);
  return s;
}

/// Sum_{n >= 2} [P_n(mu') - P_n(mu) P_2(mu') / P_2(mu)], truncated at n = 50.
inline double residual_series(double mu, double mu_prime) {
  const double scale = pmf(2, mu_prime) / pmf(2, mu);
  double s = 0.0;
  for (int n = 2; n <= 50; ++n) s += pmf(n, mu_prime) - pmf(n, mu) * scale;
  return s;
}

inline double entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -(x * std::log(x) + (1.0 - x) * std::log(1.0 - x)) / std::log(2.0);
}

/// Signal-class key rate per unit eta, written out term by term.
inline double signal_rate_over_eta(double mu_s, double s1_over_eta, double mu_ref, double qber) {
  const double f = std::exp(mu_ref) / s1_over_eta;
  const double tagged = 1.0 - s1_over_eta * std::exp(-mu_s);
  return mu_s * (1.0 - entropy(qber) - entropy(f * qber) - tagged * (1.0 - entropy(f * qber)));
}

/// Ideal-protocol rate per unit eta maximized by brute-force scan of mu.
inline double tamkr_over_eta(double qber, double step = 1e-5) {
  double best = 0.0;
  for (double mu = step; mu <= 2.0; mu += step) {
    const double h = entropy(qber);
    best = std::max(best, mu * (1.0 - 2.0 * h - (1.0 - std::exp(-mu)) * (1.0 - h)));
  }
  return best;
}

/// Root of the finite-size constraint at equality,
///   (1 - rc)(S_mu - e^-mu s0 - mu e^-mu s1) = K [S_mu' - mu' e^-mu' (1 - r1) s1 - e^-mu' s0],
/// with r1 and rc functions of s1, located by bisection on [lo, hi].
inline double finite_s1_by_bisection(double mu, double mu_prime, double s0, double s_mu, double s_mu_prime,
                                     double n, double xi, double lo, double hi) {
  const double c = 1.0 - std::exp(-mu) - mu * std::exp(-mu);
  const double k = mu * mu * std::exp(-mu) / (mu_prime * mu_prime * std::exp(-mu_prime));
  const auto residual = [&](double s1) {
    const double sc = (s_mu - std::exp(-mu) * s0 - mu * std::exp(-mu) * s1) / c;
    const double r1 = xi * std::exp(mu / 2.0) / std::sqrt(mu * s1 * n);
    const double rc = xi / std::sqrt(c * sc * n);
    return (1.0 - rc) * c * sc - k * (s_mu_prime - mu_prime * std::exp(-mu_prime) * (1.0 - r1) * s1 -
                                      std::exp(-mu_prime) * s0);
  };
  double flo = residual(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// The same constraint with no fluctuation terms, solved in closed form.
inline double asymptotic_s1(double mu, double mu_prime, double s0, double s_mu, double s_mu_prime) {
  const double k = mu * mu * std::exp(-mu) / (mu_prime * mu_prime * std::exp(-mu_prime));
  const double a = s_mu - std::exp(-mu) * s0;
  const double b = s_mu_prime - std::exp(-mu_prime) * s0;
  return (k * b - a) / (k * mu_prime * std::exp(-mu_prime) - mu * std::exp(-mu));
}

/// Finite-size root bracketed below the asymptotic value.
inline double finite_s1(double mu, double mu_prime, double s0, double s_mu, double s_mu_prime, double n,
                        double xi) {
  const double top = asymptotic_s1(mu, mu_prime, s0, s_mu, s_mu_prime);
  return finite_s1_by_bisection(mu, mu_prime, s0, s_mu, s_mu_prime, n, xi, 0.5 * top, top);
}

}  // namespace oracle
