#include "decoy/simulator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "decoy/error.hpp"
#include "decoy/parallel.hpp"

namespace decoy {
namespace {

constexpr double kTailBound = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

double or_dark(double y, double s0) { return y + s0 - y * s0; }

double poisson_tail(Intensity mu, unsigned n_max) {
  double tail = 0.0;
  for (unsigned n = n_max + 1; n < n_max + 400; ++n) {
    const double p = poisson_pmf(n, mu);
    tail += p;
    if (p < 1e-300 || p < tail * 1e-17) break;
  }
  return tail;
}

void check_tail(Intensity mu, unsigned n_max) {
  const double tail = poisson_tail(mu, n_max);
  if (tail >= kTailBound) {
    throw Error(ErrorKind::Truncation, "photon-number tail beyond n_max = " + std::to_string(n_max) +
                                           " is " + std::to_string(tail) + " for mu = " +
                                           std::to_string(mu.value()));
  }
}

/// Poisson strata 0..n_max renormalized to unit mass.
std::vector<double> strata(Intensity mu, unsigned n_max) {
  std::vector<double> p(n_max + 1);
  double total = 0.0;
  for (unsigned n = 0; n <= n_max; ++n) total += (p[n] = poisson_pmf(n, mu));
  for (double& x : p) x /= total;
  return p;
}

double expected_rate(const std::vector<double>& p, const std::vector<double>& yields) {
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += p[n] * yields[n];
  return s;
}

/// Multinomial split of the pulses over photon numbers by sequential
/// conditional binomials, then one binomial click draw per stratum.
template <class Rng>
std::uint64_t sample_clicks(std::uint64_t pulses, const std::vector<double>& p,
                            const std::vector<double>& yields, Rng& rng) {
  std::uint64_t remaining = pulses;
  double mass_left = 1.0;
  std::uint64_t clicks = 0;
  for (std::size_t n = 0; n < p.size() && remaining > 0; ++n) {
    std::uint64_t in_stratum = remaining;
    if (n + 1 < p.size()) {
      const double q = mass_left > 0.0 ? std::min(1.0, p[n] / mass_left) : 1.0;
      in_stratum = std::binomial_distribution<std::uint64_t>(remaining, q)(rng);
    }
    remaining -= in_stratum;
    mass_left -= p[n];
    if (in_stratum > 0 && yields[n] > 0.0) {
      clicks += std::binomial_distribution<std::uint64_t>(in_stratum, std::min(1.0, yields[n]))(rng);
    }
  }
  return clicks;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
}

void AttackStrategy::validate() const {
  if (kind == Kind::None) return;
  if (!is_fraction(pns.block_single) || !is_fraction(pns.multi_keep) || !is_fraction(pns.forward_transmittance)) {
    throw Error(ErrorKind::Domain, "PNS attack parameters must lie in [0, 1]");
  }
}

void SimulationConfig::validate() const {
  params.validate();
  channel.validate();
  attack.validate();
  if (n_max < 2) throw Error(ErrorKind::Domain, "n_max must be at least 2");
  if (mode == SimulationMode::MonteCarlo && rate_model == RateModel::Paper) {
    throw Error(ErrorKind::Domain, "the paper rate model is analytic only");
  }
}

double yield_model(unsigned n, const ChannelModel& channel, const AttackStrategy& attack) {
  if (n == 0) return channel.s0;
  double photon_click = 0.0;
  if (attack.kind == AttackStrategy::Kind::None) {
    photon_click = -std::expm1(static_cast<double>(n) * std::log1p(-channel.eta));
  } else if (n == 1) {
    photon_click = (1.0 - attack.pns.block_single) * channel.eta;
  } else {
    // Eve keeps one photon and forwards the remaining n - 1.
    const double forwarded =
        -std::expm1(static_cast<double>(n - 1) * std::log1p(-attack.pns.forward_transmittance));
    photon_click = attack.pns.multi_keep * (attack.pns.forward_transmittance >= 1.0 ? 1.0 : forwarded);
  }
  return or_dark(photon_click, channel.s0);
}

SimulationOutcome simulate_run(const SimulationConfig& cfg) {
  cfg.validate();
  const auto& pp = cfg.params;
  for (Intensity mu : {pp.mu, pp.mu_prime, pp.mu_s}) check_tail(mu, cfg.n_max);

  SimulationOutcome out;
  out.true_yields.resize(cfg.n_max + 1);
  for (unsigned n = 0; n <= cfg.n_max; ++n) out.true_yields[n] = yield_model(n, cfg.channel, cfg.attack);
  out.true_s1 = out.true_yields[1];

  if (cfg.rate_model == RateModel::Paper) {
    out.observed = ObservedRates::paper_mode(pp.mu, pp.mu_prime, pp.mu_s, cfg.channel.eta, cfg.channel.s0);
    return out;
  }

  const auto p_mu = strata(pp.mu, cfg.n_max);
  const auto p_mu_prime = strata(pp.mu_prime, cfg.n_max);
  const auto p_mu_s = strata(pp.mu_s, cfg.n_max);
  const auto p_vacuum = strata(Intensity{0.0}, cfg.n_max);

  if (cfg.mode == SimulationMode::Analytic) {
    out.observed.s0 = expected_rate(p_vacuum, out.true_yields);
    out.observed.s_mu = expected_rate(p_mu, out.true_yields);
    out.observed.s_mu_prime = expected_rate(p_mu_prime, out.true_yields);
    out.observed.s_mu_s = expected_rate(p_mu_s, out.true_yields);
    return out;
  }

  std::mt19937_64 rng(splitmix64(cfg.seed));
  ClassCounts counts;
  counts.vacuum = {sample_clicks(pp.n_vacuum, p_vacuum, out.true_yields, rng), pp.n_vacuum};
  counts.mu = {sample_clicks(pp.n_mu, p_mu, out.true_yields, rng), pp.n_mu};
  counts.mu_prime = {sample_clicks(pp.n_mu_prime, p_mu_prime, out.true_yields, rng), pp.n_mu_prime};
  counts.signal = {sample_clicks(pp.n_signal, p_mu_s, out.true_yields, rng), pp.n_signal};
  out.observed = ObservedRates::from_counts(counts);
  out.per_class_counts = counts;
  return out;
}

double expected_s1_for(const ProtocolParams& params, const ChannelModel& channel) {
  const auto obs =
      ObservedRates::paper_mode(params.mu, params.mu_prime, params.mu_s, channel.eta, channel.s0);
  const double delta = delta_upper_asymptotic(params.mu, params.mu_prime, obs);
  return expected_s1_no_eve(params.mu, delta, channel.eta, channel.s0);
}

EndToEndResult end_to_end_verify(const SimulationConfig& cfg, double abort_threshold) {
  if (!(abort_threshold >= 0.0 && abort_threshold <= 1.0)) {
    throw Error(ErrorKind::Domain, "abort threshold must lie in [0, 1]");
  }
  EndToEndResult res;
  res.outcome = simulate_run(cfg);
  res.expected_s1 = expected_s1_for(cfg.params, cfg.channel);
  try {
    res.verification = verify_s1_finite(cfg.params, res.outcome.observed);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InconsistentRates) throw;
    res.verifier_error = e.what();
    res.abort = true;
    return res;
  }
  res.abort = res.verification->s1_lower < (1.0 - abort_threshold) * res.expected_s1;
  return res;
}

WeakDecoyReport weak_decoy_counterexample(std::uint64_t n_pulses, Intensity mu_v, const ChannelModel& channel,
                                          std::uint64_t trials, std::uint64_t seed, SimulationMode mode,
                                          const FluctuationConfig& fluctuation, unsigned threads) {
  channel.validate();
  fluctuation.validate();
  if (n_pulses == 0) throw Error(ErrorKind::Domain, "n_pulses must be positive");
  constexpr unsigned kNMax = 30;
  check_tail(mu_v, kNMax);

  WeakDecoyReport rep;
  const double n = static_cast<double>(n_pulses);
  rep.n_pulses = n_pulses;
  rep.mu_v = mu_v.value();
  rep.signal_rate_per_pulse = -std::expm1(-mu_v.value() * channel.eta);
  const double p_total = or_dark(rep.signal_rate_per_pulse, channel.s0);
  rep.expected_dark = n * channel.s0;
  rep.expected_signal = n * rep.signal_rate_per_pulse;
  rep.expected_total = n * p_total;
  rep.expected_stddev = std::sqrt(n * p_total * (1.0 - p_total));
  rep.dark_noise_floor = std::sqrt(n * channel.s0 * (1.0 - channel.s0));
  rep.dark_only_threshold =
      rep.expected_dark * (1.0 + (channel.s0 > 0.0 ? relative_fluctuation(channel.s0, n, fluctuation) : 0.0));
  rep.trials = trials;

  if (mode == SimulationMode::Analytic || trials == 0) {
    rep.mean_count = rep.expected_total;
    rep.sample_stddev = rep.expected_stddev;
    const double z = rep.expected_stddev > 0.0
                         ? (rep.dark_only_threshold - rep.expected_total) / rep.expected_stddev
                         : (rep.dark_only_threshold >= rep.expected_total ? INFINITY : -INFINITY);
    rep.fraction_dark_explainable = 0.5 * std::erfc(-z / std::sqrt(2.0));
    return rep;
  }

  const auto p = strata(mu_v, kNMax);
  std::vector<double> yields(kNMax + 1);
  for (unsigned k = 0; k <= kNMax; ++k) yields[k] = yield_model(k, channel, AttackStrategy::none());

  rep.counts.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    std::mt19937_64 rng(trial_seed(seed, t));
    rep.counts[t] = sample_clicks(n_pulses, p, yields, rng);
  });

  double sum = 0.0;
  std::uint64_t explainable = 0;
  for (auto c : rep.counts) {
    sum += static_cast<double>(c);
    if (static_cast<double>(c) <= rep.dark_only_threshold) ++explainable;
  }
  rep.mean_count = sum / static_cast<double>(trials);
  double ss = 0.0;
  for (auto c : rep.counts) ss += (static_cast<double>(c) - rep.mean_count) * (static_cast<double>(c) - rep.mean_count);
  rep.sample_stddev = trials > 1 ? std::sqrt(ss / static_cast<double>(trials - 1)) : 0.0;
  rep.fraction_dark_explainable = static_cast<double>(explainable) / static_cast<double>(trials);
  return rep;
}

}  // namespace decoy
