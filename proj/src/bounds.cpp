#include "decoy/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decoy/error.hpp"

namespace decoy {
namespace {

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void require_rate(const char* name, double x) {
  if (!is_probability(x)) {
    throw Error(ErrorKind::Domain, std::string(name) + " must lie in [0, 1], got " + std::to_string(x));
  }
}

void require_matches(const char* name, double rate, const ClassCount& count) {
  if (count.pulses != 0 && rate != count.rate()) {
    throw Error(ErrorKind::Domain, std::string(name) + " does not equal clicks/pulses of its class");
  }
}

}  // namespace

ObservedRates ObservedRates::from_counts(const ClassCounts& counts) {
  ObservedRates obs;
  obs.s0 = counts.vacuum.rate();
  obs.s_mu = counts.mu.rate();
  obs.s_mu_prime = counts.mu_prime.rate();
  if (counts.signal.pulses > 0) obs.s_mu_s = counts.signal.rate();
  obs.counts = counts;
  return obs;
}

ObservedRates ObservedRates::paper_mode(Intensity mu, Intensity mu_prime, Intensity mu_s, double eta,
                                        double s0) {
  ObservedRates obs;
  obs.s0 = s0;
  obs.s_mu = eta * mu.value();
  obs.s_mu_prime = eta * mu_prime.value();
  obs.s_mu_s = eta * mu_s.value();
  return obs;
}

void ObservedRates::validate() const {
  require_rate("s0", s0);
  require_rate("S_mu", s_mu);
  require_rate("S_mu'", s_mu_prime);
  if (s_mu_s) require_rate("S_mu_s", *s_mu_s);
  if (counts) {
    const auto& c = *counts;
    for (const ClassCount* cc : {&c.vacuum, &c.mu, &c.mu_prime, &c.signal}) {
      if (cc->clicks > cc->pulses) throw Error(ErrorKind::Domain, "class has more clicks than pulses");
    }
    require_matches("s0", s0, c.vacuum);
    require_matches("S_mu", s_mu, c.mu);
    require_matches("S_mu'", s_mu_prime, c.mu_prime);
    if (s_mu_s) require_matches("S_mu_s", *s_mu_s, c.signal);
  }
}

double delta_upper_asymptotic(Intensity mu, Intensity mu_prime, const ObservedRates& obs) {
  if (!check_intensity_order(mu, mu_prime)) {
    throw Error(ErrorKind::OrderingViolation, "decoy intensities violate the ordering condition");
  }
  if (obs.s_mu <= 0.0) throw Error(ErrorKind::DivisionByZero, "S_mu is zero");

  const double a = mu.value();
  const double b = mu_prime.value();
  const double ratio = (a * std::exp(-a) * obs.s_mu_prime) / (b * std::exp(-b) * obs.s_mu);
  const double decoy_term = a / (b - a) * (ratio - 1.0);
  const double vacuum_term = a * std::exp(-a) * obs.s0 / (b * obs.s_mu);
  return std::clamp(decoy_term + vacuum_term, 0.0, 1.0);
}

double s1_lower_asymptotic(Intensity mu, double delta, const ObservedRates& obs) {
  const double a = mu.value();
  if (a == 0.0) throw Error(ErrorKind::DivisionByZero, "mu is zero");
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorKind::Domain, "delta outside [0, 1]");
  if (obs.s_mu <= 0.0) throw Error(ErrorKind::DivisionByZero, "S_mu is zero");

  const double s1 = (1.0 - delta - std::exp(-a) * obs.s0 / obs.s_mu) / a * std::exp(a) * obs.s_mu;
  return std::max(s1, 0.0);
}

double expected_s1_no_eve(Intensity mu, double delta, double eta, double s0) {
  const double a = mu.value();
  if (a == 0.0) throw Error(ErrorKind::DivisionByZero, "mu is zero");
  const double keep = (1.0 - delta) * std::exp(a);
  return keep * eta + (keep - 1.0) * s0 / a;
}

double relative_fluctuation(double rate, double n_effective, const FluctuationConfig& cfg) {
  const double support = rate * n_effective;
  if (!(rate > 0.0) || !(n_effective > 0.0) || !(support > 0.0)) {
    throw Error(ErrorKind::DegenerateInput,
                "fluctuation needs rate * n > 0 (rate = " + std::to_string(rate) +
                    ", n = " + std::to_string(n_effective) + ")");
  }
  return cfg.xi / std::sqrt(support);
}

VerificationResult verify_s1_finite(const ProtocolParams& params, const ObservedRates& obs,
                                    const SolverOptions& options) {
  params.validate();
  obs.validate();

  const double a = params.mu.value();
  const double b = params.mu_prime.value();
  const double ea = std::exp(-a);
  const double eb = std::exp(-b);
  const double c = multi_photon_mass(params.mu);
  const double k = (a * a * ea) / (b * b * eb);
  const double n = static_cast<double>(params.n_fluctuation());
  const auto& cfg = params.fluctuation;
  const bool fluctuating = cfg.xi > 0.0;

  const double signal_mu = obs.s_mu - ea * obs.s0;
  if (!(signal_mu > 0.0)) {
    throw Error(ErrorKind::InconsistentRates, "S_mu does not exceed the vacuum contribution e^-mu s0");
  }

  double r0 = 0.0;
  if (cfg.r0_mode == VacuumFluctuation::Estimated && fluctuating && obs.s0 > 0.0) {
    r0 = relative_fluctuation(obs.s0, static_cast<double>(params.n_vacuum), cfg);
  }
  // Worst case for the bound: the vacuum part of S_mu' at the low end of its range.
  const double signal_mu_prime = obs.s_mu_prime - eb * (1.0 - r0) * obs.s0;

  const auto multi_rate = [&](double s1) { return (signal_mu - a * ea * s1) / c; };

  VerificationResult out;
  out.r0 = r0;

  const auto collapse = [&](std::uint32_t iterations) {
    // The constraints admit s1 = 0: nothing can be certified single-photon.
    out.s1_lower = 0.0;
    out.s_c = multi_rate(0.0);
    out.delta_upper = std::clamp(c * out.s_c / obs.s_mu, 0.0, 1.0);
    out.r1 = 0.0;
    out.rc = fluctuating ? relative_fluctuation(out.s_c, c * n, cfg) : 0.0;
    out.iterations = iterations;
    out.converged = true;
    out.clamped = true;
    return out;
  };

  double s1 = options.initial_s1
                  ? *options.initial_s1
                  : s1_lower_asymptotic(params.mu, delta_upper_asymptotic(params.mu, params.mu_prime, obs), obs);
  if (!(s1 > 0.0)) return collapse(0);

  double r1 = 0.0;
  double rc = 0.0;
  std::uint32_t it = 0;
  bool converged = false;
  while (it < options.max_iterations) {
    ++it;
    const double s_c = multi_rate(s1);
    if (s_c < 0.0) {
      throw Error(ErrorKind::InconsistentRates,
                  "observed rates imply a negative multi-photon counting rate");
    }
    r1 = fluctuating ? relative_fluctuation(s1, a * ea * n, cfg) : 0.0;
    rc = fluctuating ? relative_fluctuation(s_c, c * n, cfg) : 0.0;

    const double net = k * b * eb * (1.0 - r1) - (1.0 - rc) * a * ea;
    if (!(net < 0.0)) {
      throw Error(ErrorKind::DegenerateCoefficient,
                  "s1 coefficient turned non-negative at iteration " + std::to_string(it));
    }
    const double next = (k * signal_mu_prime - (1.0 - rc) * signal_mu) / net;
    if (!(next > 0.0)) return collapse(it);

    const double change = std::abs(next - s1) / next;
    s1 = next;
    if (change < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NonConvergence,
                "fixed point not reached after " + std::to_string(options.max_iterations) + " iterations");
  }

  const double s_c = multi_rate(s1);
  if (s_c < 0.0) {
    throw Error(ErrorKind::InconsistentRates, "observed rates imply a negative multi-photon counting rate");
  }
  out.s1_lower = s1;
  out.s_c = s_c;
  out.r1 = fluctuating ? relative_fluctuation(s1, a * ea * n, cfg) : 0.0;
  out.rc = fluctuating && s_c > 0.0 ? relative_fluctuation(s_c, c * n, cfg) : 0.0;
  out.iterations = it;
  out.converged = true;

  const double delta = c * s_c / obs.s_mu;
  out.delta_upper = std::clamp(delta, 0.0, 1.0);
  out.clamped = out.delta_upper != delta;
  return out;
}

}  // namespace decoy
