#include "decoy/protocol.hpp"

#include <cmath>
#include <string>

#include "decoy/error.hpp"

namespace decoy {

void FluctuationConfig::validate() const {
  if (!std::isfinite(xi) || xi < 0.0) {
    throw Error(ErrorKind::Domain, "confidence multiplier xi must be finite and >= 0");
  }
}

void ProtocolParams::validate() const {
  if (!check_intensity_order(mu, mu_prime)) {
    throw Error(ErrorKind::OrderingViolation,
                "mu = " + std::to_string(mu.value()) + ", mu' = " + std::to_string(mu_prime.value()) +
                    " violate mu' > mu, mu' e^-mu' > mu e^-mu");
  }
  if (mu.value() <= 0.0) throw Error(ErrorKind::Domain, "mu must be positive");
  if (n_mu == 0 || n_mu_prime == 0 || n_vacuum == 0 || n_signal == 0) {
    throw Error(ErrorKind::Domain, "every pulse class needs a positive pulse count");
  }
  fluctuation.validate();
}

}  // namespace decoy
