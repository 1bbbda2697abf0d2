#pragma once

#include "decoy/core_stats.hpp"

namespace decoy {

struct ChannelModel {
  double eta = 1e-3;  // overall transmittance
  double s0 = 1e-6;   // dark-count rate
  double qber = 0.03; // ideal-protocol error rate E

  void validate() const;
};

/// Which intensity enters the exponent of the phase-error inflation f.
enum class FConvention {
  Literal,   // e^{mu} eta / s1 with mu the verification intensity
  Physical,  // e^{mu_s} eta / s1 = 1 / (1 - Delta_s)
};

struct TamkrResult {
  double rate = 0.0;
  Intensity mu;
};

struct TaggedFraction {
  double value = 0.0;
  bool clamped = false;
};

struct KeyRateReport {
  double r_signal = 0.0;
  double r_tamkr = 0.0;
  Intensity mu_tamkr;
  double ratio = 0.0;
  Intensity mu_s;
  double delta_s = 0.0;
  double f = 1.0;
  double f_literal = 1.0;
  double f_physical = 1.0;
  double e_phase = 0.0;
  double s_mu_s = 0.0;
  /// 1 - H(E) - H(fE) - Delta_s (1 - H(fE)) before flooring; 0 when fE > 0.5.
  double bracket = 0.0;
  bool rate_zero = false;
  bool delta_s_clamped = false;
  bool phase_error_out_of_range = false;
};

/// 1 - Delta - H(t) - (1 - Delta) H(t / (1 - Delta)). May be negative.
double gllp_rate(double delta, double t);

/// (1 + margin) t, capped at 0.5.
double qber_upper(double t_measured, double margin);

/// Rate of the ideal protocol whose single-photon yield and error are known
/// exactly: eta mu [1 - 2H(t1) - (1 - e^-mu)(1 - H(t1))].
double ideal_rate(Intensity mu, double eta, double t1);

/// Maximum of ideal_rate over mu in (0, 2]. Throws OptimizationFailure if the
/// maximum sits on the edge of the bracket.
TamkrResult tamkr(double eta, double t1);

double phase_error_factor(Intensity mu_ref, double eta, double s1);

/// 1 - (s1 / eta) e^{-mu_s}, clamped into [0, 1].
TaggedFraction delta_s(Intensity mu_s, double s1, double eta);

/// Key rate of the main signal class. S_mu_s defaults to eta mu_s; pass the
/// observed value to override. A negative bracket or fE > 0.5 yields
/// r_signal = 0 with the corresponding flag set.
KeyRateReport signal_key_rate(Intensity mu_s, const ChannelModel& channel, double s1,
                              Intensity mu_ref, FConvention convention = FConvention::Literal,
                              double observed_s_mu_s = -1.0);

/// signal_key_rate with a precomputed TAMKR baseline, for inner loops.
KeyRateReport signal_key_rate(Intensity mu_s, const ChannelModel& channel, double s1,
                              Intensity mu_ref, FConvention convention, double observed_s_mu_s,
                              const TamkrResult& baseline);

}  // namespace decoy
