#pragma once

#include <cstdint>

#include "decoy/core_stats.hpp"

namespace decoy {

/// How the vacuum-rate fluctuation r0 is treated by the finite-size verifier.
enum class VacuumFluctuation {
  Zero,       // r0 = 0
  Estimated,  // r0 = xi / sqrt(s0 * n_vacuum)
};

struct FluctuationConfig {
  /// Confidence multiplier. A single deviation beyond xi/sqrt(s N) happens
  /// with probability below exp(-xi^2 / 4); xi = 10 gives e^-25.
  double xi = 10.0;
  VacuumFluctuation r0_mode = VacuumFluctuation::Zero;

  void validate() const;
};

/// The four pulse classes: vacuum Y0, decoys Y_mu and Y_mu', main signal Y_s.
struct ProtocolParams {
  Intensity mu{0.1};
  Intensity mu_prime{0.27};
  Intensity mu_s{0.55};
  std::uint64_t n_mu = 10'000'000'000ULL;
  std::uint64_t n_mu_prime = 10'000'000'000ULL;
  std::uint64_t n_vacuum = 2'000'000'000ULL;
  std::uint64_t n_signal = 10'000'000'000ULL;
  FluctuationConfig fluctuation{};

  /// Pulse count entering r1 and r_c: the smaller of the two decoy classes.
  std::uint64_t n_fluctuation() const noexcept {
    return n_mu < n_mu_prime ? n_mu : n_mu_prime;
  }

  /// Throws ErrorKind::OrderingViolation or ErrorKind::Domain.
  void validate() const;
};

}  // namespace decoy
