#include "decoy/core_stats.hpp"

#include <cmath>
#include <string>

#include "decoy/error.hpp"

namespace decoy {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::OrderingViolation: return "ordering-violation";
    case ErrorKind::DivisionByZero: return "division-by-zero";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::DegenerateCoefficient: return "degenerate-coefficient";
    case ErrorKind::InconsistentRates: return "inconsistent-rates";
    case ErrorKind::OptimizationFailure: return "optimization-failure";
    case ErrorKind::EmptyFeasibleSet: return "empty-feasible-set";
    case ErrorKind::Truncation: return "truncation";
    case ErrorKind::InvalidConfig: return "invalid-config";
  }
  return "unknown";
}

Intensity::Intensity(double mu) : mu_(mu) {
  if (!std::isfinite(mu) || mu < 0.0) {
    throw Error(ErrorKind::Domain, "intensity must be finite and non-negative, got " + std::to_string(mu));
  }
}

double poisson_pmf(unsigned n, Intensity mu) {
  const double m = mu.value();
  if (m == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n <= 20) {
    double term = std::exp(-m);
    for (unsigned k = 1; k <= n; ++k) term *= m / static_cast<double>(k);
    return term;
  }
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(m) - m - std::lgamma(nd + 1.0));
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::Domain, "binary entropy argument outside [0, 1]: " + std::to_string(x));
  }
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double multi_photon_mass(Intensity mu) {
  const double m = mu.value();
  return -std::expm1(-m) - m * std::exp(-m);
}

bool check_intensity_order(Intensity mu, Intensity mu_prime) noexcept {
  const double a = mu.value();
  const double b = mu_prime.value();
  return b > a && b * std::exp(-b) > a * std::exp(-a);
}

double residual_mass(Intensity mu, Intensity mu_prime) {
  if (mu.value() == mu_prime.value() && mu.value() > 0.0) return 0.0;
  if (!check_intensity_order(mu, mu_prime) || mu.value() == 0.0) {
    throw Error(ErrorKind::OrderingViolation,
                "intensity pair (" + std::to_string(mu.value()) + ", " + std::to_string(mu_prime.value()) +
                    ") violates mu' > mu, mu' e^-mu' > mu e^-mu");
  }
  const double a = mu.value();
  const double b = mu_prime.value();
  const double p2_ratio = (b * b * std::exp(-b)) / (a * a * std::exp(-a));
  const double d = multi_photon_mass(mu_prime) - multi_photon_mass(mu) * p2_ratio;
  // Only rounding can push an ordered pair below zero.
  return d < 0.0 ? 0.0 : d;
}

DecompositionCoefficients decompose(Intensity mu) {
  const double m = mu.value();
  return {std::exp(-m), m * std::exp(-m), multi_photon_mass(mu), 0.0};
}

DecompositionCoefficients decompose(Intensity mu, Intensity mu_prime) {
  auto out = decompose(mu);
  out.d = residual_mass(mu, mu_prime);
  return out;
}

}  // namespace decoy
