#include "decoy/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decoy/error.hpp"
#include "decoy/golden_section.hpp"

namespace decoy {

namespace {
constexpr double kTamkrMuMax = 2.0;
constexpr double kTamkrTolerance = 1e-4;
}  // namespace

void ChannelModel::validate() const {
  if (!(std::isfinite(eta) && eta > 0.0 && eta <= 1.0)) {
    throw Error(ErrorKind::Domain, "eta must lie in (0, 1]");
  }
  if (!(std::isfinite(s0) && s0 >= 0.0 && s0 < 1.0)) {
    throw Error(ErrorKind::Domain, "s0 must lie in [0, 1)");
  }
  if (!(std::isfinite(qber) && qber >= 0.0 && qber < 0.5)) {
    throw Error(ErrorKind::Domain, "qber must lie in [0, 0.5)");
  }
}

double gllp_rate(double delta, double t) {
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorKind::Domain, "tagged fraction must lie in [0, 1)");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::Domain, "error rate must lie in [0, 1]");
  const double untagged_error = t / (1.0 - delta);
  if (untagged_error > 1.0) {
    throw Error(ErrorKind::Domain, "t / (1 - delta) exceeds 1");
  }
  return 1.0 - delta - binary_entropy(t) - (1.0 - delta) * binary_entropy(untagged_error);
}

double qber_upper(double t_measured, double margin) {
  return std::min((1.0 + margin) * t_measured, 0.5);
}

double ideal_rate(Intensity mu, double eta, double t1) {
  const double m = mu.value();
  const double h = binary_entropy(t1);
  return eta * m * (1.0 - 2.0 * h + std::expm1(-m) * (1.0 - h));
}

TamkrResult tamkr(double eta, double t1) {
  if (!(t1 >= 0.0 && t1 < 0.5)) throw Error(ErrorKind::Domain, "t1 must lie in [0, 0.5)");
  if (!(eta > 0.0)) throw Error(ErrorKind::Domain, "eta must be positive");

  const auto best = golden_section_maximize(
      [&](double m) { return ideal_rate(Intensity{m}, eta, t1); }, 0.0, kTamkrMuMax, kTamkrTolerance);
  if (best.x <= 2.0 * kTamkrTolerance || best.x >= kTamkrMuMax - 2.0 * kTamkrTolerance || !(best.value > 0.0)) {
    throw Error(ErrorKind::OptimizationFailure,
                "ideal rate has no interior maximum on (0, 2] for t1 = " + std::to_string(t1));
  }
  return {best.value, Intensity{best.x}};
}

double phase_error_factor(Intensity mu_ref, double eta, double s1) {
  if (s1 == 0.0) throw Error(ErrorKind::DivisionByZero, "s1 is zero");
  return std::exp(mu_ref.value()) * eta / s1;
}

TaggedFraction delta_s(Intensity mu_s, double s1, double eta) {
  const double raw = 1.0 - (s1 / eta) * std::exp(-mu_s.value());
  const double value = std::clamp(raw, 0.0, 1.0);
  return {value, value != raw};
}

KeyRateReport signal_key_rate(Intensity mu_s, const ChannelModel& channel, double s1, Intensity mu_ref,
                              FConvention convention, double observed_s_mu_s) {
  return signal_key_rate(mu_s, channel, s1, mu_ref, convention, observed_s_mu_s,
                         tamkr(channel.eta, channel.qber));
}

KeyRateReport signal_key_rate(Intensity mu_s, const ChannelModel& channel, double s1, Intensity mu_ref,
                              FConvention convention, double observed_s_mu_s, const TamkrResult& baseline) {
  KeyRateReport rep;
  rep.mu_s = mu_s;
  rep.r_tamkr = baseline.rate;
  rep.mu_tamkr = baseline.mu;
  rep.f_literal = phase_error_factor(mu_ref, channel.eta, s1);
  rep.f_physical = phase_error_factor(mu_s, channel.eta, s1);
  rep.f = convention == FConvention::Literal ? rep.f_literal : rep.f_physical;

  const auto tagged = delta_s(mu_s, s1, channel.eta);
  rep.delta_s = tagged.value;
  rep.delta_s_clamped = tagged.clamped;
  rep.e_phase = rep.f * channel.qber;
  rep.s_mu_s = observed_s_mu_s >= 0.0 ? observed_s_mu_s : channel.eta * mu_s.value();

  if (rep.e_phase > 0.5) {
    rep.phase_error_out_of_range = true;
    rep.rate_zero = true;
    rep.r_signal = 0.0;
  } else {
    const double h_phase = binary_entropy(rep.e_phase);
    rep.bracket = 1.0 - binary_entropy(channel.qber) - h_phase - rep.delta_s * (1.0 - h_phase);
    rep.rate_zero = !(rep.bracket > 0.0);
    rep.r_signal = rep.rate_zero ? 0.0 : rep.s_mu_s * rep.bracket;
  }
  rep.ratio = rep.r_signal / rep.r_tamkr;
  return rep;
}

}  // namespace decoy
