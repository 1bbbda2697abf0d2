#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decoy/bounds.hpp"
#include "decoy/keyrate.hpp"
#include "decoy/protocol.hpp"

namespace decoy {

struct PnsAttack {
  double block_single = 1.0;
  double multi_keep = 1.0;
  double forward_transmittance = 1.0;
};

struct AttackStrategy {
  enum class Kind { None, Pns };
  Kind kind = Kind::None;
  PnsAttack pns{};

  static AttackStrategy none() { return {}; }
  static AttackStrategy photon_number_splitting(PnsAttack p) { return {Kind::Pns, p}; }

  void validate() const;
};

enum class SimulationMode { MonteCarlo, Analytic };

/// Paper: observed decoy rates are S_x = eta x exactly (analytic only).
/// Physical: rates follow from the threshold-detector yield model.
enum class RateModel { Paper, Physical };

struct SimulationConfig {
  std::uint64_t seed = 0;
  ProtocolParams params{};
  ChannelModel channel{};
  AttackStrategy attack{};
  SimulationMode mode = SimulationMode::Analytic;
  RateModel rate_model = RateModel::Physical;
  unsigned n_max = 30;

  void validate() const;
};

struct SimulationOutcome {
  ObservedRates observed;
  std::vector<double> true_yields;  // Y_n, n = 0..n_max
  double true_s1 = 0.0;
  std::optional<ClassCounts> per_class_counts;
};

/// Click probability of an n-photon pulse.
double yield_model(unsigned n, const ChannelModel& channel, const AttackStrategy& attack);

/// Monte-carlo mode: multinomial photon-number strata per class, then one
/// binomial click draw per stratum. Analytic mode: exact expectations.
/// Throws ErrorKind::Truncation if an intensity has tail mass beyond n_max
/// of 1e-12 or more.
SimulationOutcome simulate_run(const SimulationConfig& cfg);

struct EndToEndResult {
  std::optional<VerificationResult> verification;  // empty if the verifier rejected the rates
  SimulationOutcome outcome;
  double expected_s1 = 0.0;
  bool abort = false;
  /// Non-empty when the verifier raised; the message of that error.
  std::string verifier_error;
};

/// Simulate, verify, and abort when s1_lower < (1 - threshold) expected.
EndToEndResult end_to_end_verify(const SimulationConfig& cfg, double abort_threshold = 0.1);

/// The s1 Alice and Bob should verify with no eavesdropper under paper-mode
/// decoy rates; the abort decision compares against this.
double expected_s1_for(const ProtocolParams& params, const ChannelModel& channel);

struct WeakDecoyReport {
  std::uint64_t n_pulses = 0;
  double mu_v = 0.0;
  double signal_rate_per_pulse = 0.0;
  double expected_dark = 0.0;
  double expected_signal = 0.0;
  double expected_total = 0.0;
  /// sqrt of the expected total, the spread of any single realization.
  double expected_stddev = 0.0;
  /// sqrt(expected_dark): the noise floor of the dark counts alone.
  double dark_noise_floor = 0.0;
  /// Largest count explainable by dark counts alone at confidence exp(-xi^2/4).
  double dark_only_threshold = 0.0;
  std::uint64_t trials = 0;
  double mean_count = 0.0;
  double sample_stddev = 0.0;
  std::vector<std::uint64_t> counts;
  double fraction_dark_explainable = 0.0;
};

/// A very weak decoy (mu_v eta per-pulse signal) against the dark-count floor.
/// With mode Analytic only the expectations are filled in.
WeakDecoyReport weak_decoy_counterexample(std::uint64_t n_pulses, Intensity mu_v,
                                          const ChannelModel& channel, std::uint64_t trials,
                                          std::uint64_t seed, SimulationMode mode,
                                          const FluctuationConfig& fluctuation = {},
                                          unsigned threads = 1);

/// Independent generator stream for one trial of a seeded batch.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

}  // namespace decoy
