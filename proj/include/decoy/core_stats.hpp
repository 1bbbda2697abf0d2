#pragma once

// Photon-number statistics of phase-randomized coherent states, the binary
// entropy, and the convex-decomposition coefficients used by the bounds.

namespace decoy {

/// Mean photon number of a dephased coherent pulse. Always finite and >= 0.
class Intensity {
 public:
  constexpr Intensity() noexcept = default;
  explicit Intensity(double mu);

  constexpr double value() const noexcept { return mu_; }
  constexpr operator double() const noexcept { return mu_; }

 private:
  double mu_ = 0.0;
};

/// Mass of the vacuum, single-photon and multi-photon parts of rho_mu, plus the
/// residual d of rho_mu' once the rho_c component has been carved out of it.
struct DecompositionCoefficients {
  double p0 = 0.0;
  double p1 = 0.0;
  double c = 0.0;
  double d = 0.0;
};

/// mu^n e^-mu / n!. Direct product for n <= 20, log-space beyond.
double poisson_pmf(unsigned n, Intensity mu);

/// H(x) in bits; H(0) = H(1) = 0. Throws ErrorKind::Domain outside [0, 1].
double binary_entropy(double x);

/// c(mu) = 1 - e^-mu - mu e^-mu, the probability of two or more photons.
double multi_photon_mass(Intensity mu);

/// d = c(mu') - c(mu) P2(mu')/P2(mu). Throws ErrorKind::OrderingViolation
/// unless the pair is ordered; an identical pair is accepted and yields 0.
double residual_mass(Intensity mu, Intensity mu_prime);

/// mu' > mu and mu' e^-mu' > mu e^-mu, both strict.
bool check_intensity_order(Intensity mu, Intensity mu_prime) noexcept;

DecompositionCoefficients decompose(Intensity mu);
DecompositionCoefficients decompose(Intensity mu, Intensity mu_prime);

}  // namespace decoy
