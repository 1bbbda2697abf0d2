#include "decoy/optimizer.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "decoy/error.hpp"
#include "decoy/golden_section.hpp"
#include "decoy/parallel.hpp"

namespace decoy {
namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

// Smallest admissible gap between mu and mu' in the refinement bracket.
constexpr double kMinGap = 1e-6;

std::optional<VerificationResult> try_verify(Intensity mu, double mu_prime, const ChannelModel& channel,
                                             const ProtocolParams& base) {
  const Intensity candidate{mu_prime};
  if (!check_intensity_order(mu, candidate)) return std::nullopt;
  ProtocolParams params = base;
  params.mu = mu;
  params.mu_prime = candidate;
  const auto obs = ObservedRates::paper_mode(mu, candidate, params.mu_s, channel.eta, channel.s0);
  try {
    return verify_s1_finite(params, obs);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

MuPrimeChoice optimize_mu_prime(Intensity mu, const ChannelModel& channel, const ProtocolParams& params,
                                const OptimizerOptions& options) {
  channel.validate();
  if (!(mu.value() > 0.0)) throw Error(ErrorKind::Domain, "mu must be positive");

  std::vector<double> grid;
  for (int k = 1;; ++k) {
    const double x = mu.value() + k * options.grid_step;
    if (x > options.mu_prime_max + 1e-12) break;
    grid.push_back(x);
  }

  std::vector<std::optional<VerificationResult>> results(grid.size());
  parallel_for(grid.size(), options.threads,
               [&](std::size_t i) { results[i] = try_verify(mu, grid[i], channel, params); });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!results[i]) continue;
    if (!best || results[i]->s1_lower > results[*best]->s1_lower) best = i;
  }
  if (!best) {
    throw Error(ErrorKind::EmptyFeasibleSet, "no mu' on the search grid yields a verifiable bound");
  }

  const std::size_t i = *best;
  const double lo = i == 0 ? mu.value() + kMinGap : grid[i - 1];
  const double hi = i + 1 == grid.size() ? grid[i] : grid[i + 1];
  const auto refined = golden_section_maximize(
      [&](double x) {
        const auto r = try_verify(mu, x, channel, params);
        return r ? r->s1_lower : kInfeasible;
      },
      lo, hi, options.refine_tolerance);

  if (refined.value > results[i]->s1_lower) {
    if (auto r = try_verify(mu, refined.x, channel, params)) return {Intensity{refined.x}, *r};
  }
  return {Intensity{grid[i]}, *results[i]};
}

MuSChoice optimize_mu_s(double s1_over_eta, Intensity mu_ref, const ChannelModel& channel,
                        FConvention convention, double tolerance) {
  channel.validate();
  if (!(s1_over_eta > 0.0 && s1_over_eta <= 1.0)) {
    throw Error(ErrorKind::Domain, "s1/eta must lie in (0, 1]");
  }
  const auto baseline = tamkr(channel.eta, channel.qber);
  const double s1 = s1_over_eta * channel.eta;

  // The floored rate is flat wherever the bracket is negative; search on the
  // raw value so the objective stays unimodal.
  const auto objective = [&](double m) {
    const auto rep = signal_key_rate(Intensity{m}, channel, s1, mu_ref, convention, -1.0, baseline);
    return rep.phase_error_out_of_range ? -1.0 : rep.s_mu_s * rep.bracket;
  };
  const auto best = golden_section_maximize(objective, 0.0, 1.0, tolerance);
  const Intensity mu_s{best.x};
  return {mu_s, signal_key_rate(mu_s, channel, s1, mu_ref, convention, -1.0, baseline)};
}

std::vector<TableConfig> reference_table_configs() {
  return {
      {1e-3, 1e-6, Intensity{0.1}, Intensity{0.27}, 0.958, 0.550, 0.880, 0.0},
      {1e-3, 2e-7, Intensity{0.1}, Intensity{0.26}, 0.969, 0.555, 0.920, 0.0},
      {1e-4, 1e-6, Intensity{0.22}, Intensity{0.45}, 0.821, 0.478, 0.573, 0.48},
      {1e-4, 2e-7, Intensity{0.1}, Intensity{0.35}, 0.922, 0.535, 0.808, 0.0},
  };
}

std::vector<Table1Row> reproduce_table1(const std::vector<TableConfig>& configs,
                                        const FluctuationConfig& fluctuation) {
  std::vector<Table1Row> rows;
  rows.reserve(configs.size());
  for (const auto& cfg : configs) {
    ProtocolParams params;
    params.mu = cfg.mu;
    params.mu_prime = cfg.mu_prime;
    params.fluctuation = fluctuation;
    const auto obs = ObservedRates::paper_mode(cfg.mu, cfg.mu_prime, params.mu_s, cfg.eta, cfg.s0);
    const auto result = verify_s1_finite(params, obs);
    rows.push_back({cfg.eta, cfg.s0, cfg.mu, cfg.mu_prime, result.s1_lower / cfg.eta, result});
  }
  return rows;
}

std::vector<Table2Row> reproduce_table2(const std::vector<TableConfig>& configs, double qber,
                                        const FluctuationConfig& fluctuation, FConvention convention) {
  const auto table1 = reproduce_table1(configs, fluctuation);
  std::vector<Table2Row> rows;
  rows.reserve(configs.size());
  for (const auto& t1 : table1) {
    const ChannelModel channel{t1.eta, t1.s0, qber};
    const auto choice = optimize_mu_s(t1.s1_over_eta, t1.mu, channel, convention);
    rows.push_back({t1.eta, t1.s0, t1.mu, t1.mu_prime, t1.s1_over_eta, choice.mu_s, choice.report.ratio,
                    choice.report});
  }
  return rows;
}

double ratio_at_printed_point(const TableConfig& config, double qber) {
  const ChannelModel channel{config.eta, config.s0, qber};
  return signal_key_rate(Intensity{config.printed_mu_s}, channel, config.printed_s1_over_eta * config.eta,
                         config.mu)
      .ratio;
}

}  // namespace decoy
