#pragma once

#include <string>
#include <vector>

#include "decoy/bounds.hpp"
#include "decoy/keyrate.hpp"
#include "decoy/protocol.hpp"

namespace decoy {

struct OptimizerOptions {
  double grid_step = 0.01;
  double mu_prime_max = 1.0;
  double refine_tolerance = 1e-4;
  unsigned threads = 1;
};

struct MuPrimeChoice {
  Intensity mu_prime;
  VerificationResult verification;
};

struct MuSChoice {
  Intensity mu_s;
  KeyRateReport report;
};

/// Stage one: the mu' in (mu, mu_prime_max] that maximizes the finite-size s1
/// bound under no-Eve paper-mode rates. Coarse grid, then golden section in
/// the neighbouring cells. Ties resolve to the smaller mu'.
MuPrimeChoice optimize_mu_prime(Intensity mu, const ChannelModel& channel,
                                const ProtocolParams& params, const OptimizerOptions& options = {});

/// Stage two: the mu_s in (0, 1] that maximizes the signal key rate given the
/// verified s1 / eta.
MuSChoice optimize_mu_s(double s1_over_eta, Intensity mu_ref, const ChannelModel& channel,
                        FConvention convention = FConvention::Literal, double tolerance = 1e-4);

/// One table column: channel, decoy intensities, and the reference values
/// printed for it.
struct TableConfig {
  double eta = 0.0;
  double s0 = 0.0;
  Intensity mu;
  Intensity mu_prime;
  double printed_s1_over_eta = 0.0;
  double printed_mu_s = 0.0;
  double printed_ratio = 0.0;
  /// mu' printed in the verification table when it differs from mu_prime.
  double printed_mu_prime_alt = 0.0;
};

/// The four reference columns. Column 3 uses mu' = 0.45.
std::vector<TableConfig> reference_table_configs();

struct Table1Row {
  double eta = 0.0;
  double s0 = 0.0;
  Intensity mu;
  Intensity mu_prime;
  double s1_over_eta = 0.0;
  VerificationResult verification;
};

struct Table2Row {
  double eta = 0.0;
  double s0 = 0.0;
  Intensity mu;
  Intensity mu_prime;
  double s1_over_eta = 0.0;
  Intensity mu_s;
  double ratio = 0.0;
  KeyRateReport report;
};

/// Paper-mode rates, default pulse counts, the given fluctuation settings.
std::vector<Table1Row> reproduce_table1(const std::vector<TableConfig>& configs,
                                        const FluctuationConfig& fluctuation = {});

std::vector<Table2Row> reproduce_table2(const std::vector<TableConfig>& configs, double qber = 0.03,
                                        const FluctuationConfig& fluctuation = {},
                                        FConvention convention = FConvention::Literal);

/// Signal-rate ratio evaluated directly at the printed (s1/eta, mu_s) of a
/// column; this is what the printed ratio should equal if it followed the
/// signal-rate formula.
double ratio_at_printed_point(const TableConfig& config, double qber = 0.03);

}  // namespace decoy
