#include "decoy/cli/report.hpp"

#include <charconv>
#include <ostream>
#include <system_error>

namespace decoy::cli {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json to_json(const ObservedRates& obs) {
  json j = {{"s0", obs.s0}, {"s_mu", obs.s_mu}, {"s_mu_prime", obs.s_mu_prime}};
  if (obs.s_mu_s) j["s_mu_s"] = *obs.s_mu_s;
  if (obs.counts) {
    const auto cls = [](const ClassCount& c) { return json{{"clicks", c.clicks}, {"pulses", c.pulses}}; };
    j["counts"] = {{"vacuum", cls(obs.counts->vacuum)},
                   {"mu", cls(obs.counts->mu)},
                   {"mu_prime", cls(obs.counts->mu_prime)}};
    if (obs.counts->signal.pulses > 0) j["counts"]["signal"] = cls(obs.counts->signal);
  }
  return j;
}

ObservedRates observed_from_json(const json& j) {
  ObservedRates obs;
  obs.s0 = j.at("s0").get<double>();
  obs.s_mu = j.at("s_mu").get<double>();
  obs.s_mu_prime = j.at("s_mu_prime").get<double>();
  if (j.contains("s_mu_s")) obs.s_mu_s = j.at("s_mu_s").get<double>();
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    const auto cls = [](const json& x) {
      return ClassCount{x.at("clicks").get<std::uint64_t>(), x.at("pulses").get<std::uint64_t>()};
    };
    ClassCounts counts{cls(c.at("vacuum")), cls(c.at("mu")), cls(c.at("mu_prime")), {}};
    if (c.contains("signal")) counts.signal = cls(c.at("signal"));
    obs.counts = counts;
  }
  return obs;
}

json to_json(const VerificationResult& r) {
  return {{"delta_upper", r.delta_upper}, {"s1_lower", r.s1_lower},   {"s_c", r.s_c},
          {"r1", r.r1},                   {"rc", r.rc},               {"r0", r.r0},
          {"iterations", r.iterations},   {"converged", r.converged}, {"clamped", r.clamped}};
}

VerificationResult verification_from_json(const json& j) {
  VerificationResult r;
  r.delta_upper = j.at("delta_upper").get<double>();
  r.s1_lower = j.at("s1_lower").get<double>();
  r.s_c = j.at("s_c").get<double>();
  r.r1 = j.at("r1").get<double>();
  r.rc = j.at("rc").get<double>();
  r.r0 = j.at("r0").get<double>();
  r.iterations = j.at("iterations").get<std::uint32_t>();
  r.converged = j.at("converged").get<bool>();
  r.clamped = j.at("clamped").get<bool>();
  return r;
}

json to_json(const KeyRateReport& r) {
  return {{"r_signal", r.r_signal},
          {"r_tamkr", r.r_tamkr},
          {"mu_tamkr", r.mu_tamkr.value()},
          {"ratio", r.ratio},
          {"mu_s", r.mu_s.value()},
          {"delta_s", r.delta_s},
          {"f", r.f},
          {"f_literal", r.f_literal},
          {"f_physical", r.f_physical},
          {"e_phase", r.e_phase},
          {"s_mu_s", r.s_mu_s},
          {"bracket", r.bracket},
          {"rate_zero", r.rate_zero},
          {"delta_s_clamped", r.delta_s_clamped},
          {"phase_error_out_of_range", r.phase_error_out_of_range}};
}

KeyRateReport keyrate_from_json(const json& j) {
  KeyRateReport r;
  r.r_signal = j.at("r_signal").get<double>();
  r.r_tamkr = j.at("r_tamkr").get<double>();
  r.mu_tamkr = Intensity{j.at("mu_tamkr").get<double>()};
  r.ratio = j.at("ratio").get<double>();
  r.mu_s = Intensity{j.at("mu_s").get<double>()};
  r.delta_s = j.at("delta_s").get<double>();
  r.f = j.at("f").get<double>();
  r.f_literal = j.at("f_literal").get<double>();
  r.f_physical = j.at("f_physical").get<double>();
  r.e_phase = j.at("e_phase").get<double>();
  r.s_mu_s = j.at("s_mu_s").get<double>();
  r.bracket = j.at("bracket").get<double>();
  r.rate_zero = j.at("rate_zero").get<bool>();
  r.delta_s_clamped = j.at("delta_s_clamped").get<bool>();
  r.phase_error_out_of_range = j.at("phase_error_out_of_range").get<bool>();
  return r;
}

json to_json(const WeakDecoyReport& r) {
  return {{"n_pulses", r.n_pulses},
          {"mu_v", r.mu_v},
          {"signal_rate_per_pulse", r.signal_rate_per_pulse},
          {"expected_dark", r.expected_dark},
          {"expected_signal", r.expected_signal},
          {"expected_total", r.expected_total},
          {"expected_stddev", r.expected_stddev},
          {"dark_noise_floor", r.dark_noise_floor},
          {"dark_only_threshold", r.dark_only_threshold},
          {"trials", r.trials},
          {"mean_count", r.mean_count},
          {"sample_stddev", r.sample_stddev},
          {"fraction_dark_explainable", r.fraction_dark_explainable},
          {"signal_within_noise", r.expected_signal <= r.expected_stddev},
          {"counts", r.counts}};
}

json to_json(const Table1Row& row) {
  return {{"eta", row.eta},
          {"s0", row.s0},
          {"mu", row.mu.value()},
          {"mu_prime", row.mu_prime.value()},
          {"s1_over_eta", row.s1_over_eta},
          {"verification", to_json(row.verification)}};
}

json to_json(const Table2Row& row) {
  return {{"eta", row.eta},
          {"s0", row.s0},
          {"mu", row.mu.value()},
          {"mu_prime", row.mu_prime.value()},
          {"s1_over_eta", row.s1_over_eta},
          {"mu_s", row.mu_s.value()},
          {"ratio", row.ratio},
          {"report", to_json(row.report)}};
}

void write_table1_csv(std::ostream& out, const std::vector<Table1Row>& rows) {
  out << "eta,s0,mu,mu_prime,s1_over_eta\n";
  for (const auto& r : rows) {
    out << format_real(r.eta) << ',' << format_real(r.s0) << ',' << format_real(r.mu.value()) << ','
        << format_real(r.mu_prime.value()) << ',' << format_real(r.s1_over_eta) << '\n';
  }
}

void write_table2_csv(std::ostream& out, const std::vector<Table2Row>& rows) {
  out << "eta,s0,mu,mu_prime,s1_over_eta,mu_s,ratio\n";
  for (const auto& r : rows) {
    out << format_real(r.eta) << ',' << format_real(r.s0) << ',' << format_real(r.mu.value()) << ','
        << format_real(r.mu_prime.value()) << ',' << format_real(r.s1_over_eta) << ','
        << format_real(r.mu_s.value()) << ',' << format_real(r.ratio) << '\n';
  }
}

}  // namespace decoy::cli
