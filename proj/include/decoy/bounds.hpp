#pragma once

#include <cstdint>
#include <optional>

#include "decoy/core_stats.hpp"
#include "decoy/protocol.hpp"

namespace decoy {

struct ClassCount {
  std::uint64_t clicks = 0;
  std::uint64_t pulses = 0;

  double rate() const noexcept {
    return pulses == 0 ? 0.0 : static_cast<double>(clicks) / static_cast<double>(pulses);
  }
};

struct ClassCounts {
  ClassCount vacuum;
  ClassCount mu;
  ClassCount mu_prime;
  ClassCount signal;
};

/// Per-class counting rates as Alice sees them after Bob announces clicks.
struct ObservedRates {
  double s0 = 0.0;
  double s_mu = 0.0;
  double s_mu_prime = 0.0;
  std::optional<double> s_mu_s;
  std::optional<ClassCounts> counts;

  /// Rates computed as clicks/pulses for every class.
  static ObservedRates from_counts(const ClassCounts& counts);

  /// Idealized no-Eve rates S_x = eta x with the given dark-count rate.
  static ObservedRates paper_mode(Intensity mu, Intensity mu_prime, Intensity mu_s,
                                  double eta, double s0);

  void validate() const;
};

struct VerificationResult {
  double delta_upper = 0.0;
  double s1_lower = 0.0;
  double s_c = 0.0;
  double r1 = 0.0;
  double rc = 0.0;
  double r0 = 0.0;
  std::uint32_t iterations = 0;
  bool converged = false;
  /// Set when s1 or Delta had to be pulled back into its physical range.
  bool clamped = false;
};

struct SolverOptions {
  double tolerance = 1e-12;
  std::uint32_t max_iterations = 1000;
  /// Starting point for s1; defaults to the asymptotic bound.
  std::optional<double> initial_s1;
};

/// Upper bound on the tagged fraction from the vacuum and the two decoy
/// classes, clamped to [0, 1].
double delta_upper_asymptotic(Intensity mu, Intensity mu_prime, const ObservedRates& obs);

/// Lower bound on s1 given a tagged-fraction bound. Clamped at 0.
double s1_lower_asymptotic(Intensity mu, double delta, const ObservedRates& obs);

/// The s1 value Alice and Bob should verify with no eavesdropper, eta << 1.
double expected_s1_no_eve(Intensity mu, double delta, double eta, double s0);

/// xi / sqrt(rate * n_effective).
double relative_fluctuation(double rate, double n_effective, const FluctuationConfig& cfg);

/// Finite-statistics verification: the fixed point of the coupled constraints
/// between the Y_mu and Y_mu' classes with r1, r_c evaluated at the current
/// s1, s_c. The constraint is taken at equality, which is the worst case
/// because s1 carries a negative net coefficient; a sign change is an error.
///
/// Errors: OrderingViolation, InconsistentRates (no signal above the vacuum
/// floor or s_c < 0), DegenerateCoefficient, NonConvergence.
VerificationResult verify_s1_finite(const ProtocolParams& params, const ObservedRates& obs,
                                    const SolverOptions& options = {});

}  // namespace decoy
