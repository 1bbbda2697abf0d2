#include "decoy/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <iterator>
#include <string_view>

#include "decoy/cli/report.hpp"
#include "decoy/error.hpp"

namespace decoy::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::InvalidConfig, path + ": " + msg);
}

std::string join(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) fail(join(path, key), "unknown key");
  }
}

double get_real(const json& obj, const std::string& path, std::string_view key, double fallback) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(join(path, key), "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(join(path, key), "must be finite");
  return v;
}

std::uint64_t get_count(const json& obj, const std::string& path, std::string_view key, std::uint64_t fallback) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (v >= 0.0 && v < 1.8e19 && std::floor(v) == v) return static_cast<std::uint64_t>(v);
  }
  fail(join(path, key), "expected a non-negative integer");
}

std::string get_string(const json& obj, const std::string& path, std::string_view key, std::string fallback) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(join(path, key), "expected a string");
  return it->get<std::string>();
}

Intensity get_intensity(const json& obj, const std::string& path, std::string_view key, Intensity fallback) {
  const double v = get_real(obj, path, key, fallback.value());
  if (v < 0.0) fail(join(path, key), "intensity must be non-negative");
  return Intensity{v};
}

ClassCount parse_class(const json& obj, const std::string& path) {
  reject_unknown(obj, path, {"clicks", "pulses"});
  ClassCount c{get_count(obj, path, "clicks", 0), get_count(obj, path, "pulses", 0)};
  if (c.pulses == 0) fail(join(path, "pulses"), "must be positive");
  if (c.clicks > c.pulses) fail(join(path, "clicks"), "exceeds pulses");
  return c;
}

ObservedRates parse_observed(const json& obj) {
  const std::string path = "observed";
  reject_unknown(obj, path, {"s0", "s_mu", "s_mu_prime", "s_mu_s", "counts"});
  ObservedRates obs;
  if (auto it = obj.find("counts"); it != obj.end()) {
    const std::string cpath = "observed.counts";
    reject_unknown(*it, cpath, {"vacuum", "mu", "mu_prime", "signal"});
    ClassCounts counts;
    for (auto [key, slot] : {std::pair<const char*, ClassCount*>{"vacuum", &counts.vacuum},
                             {"mu", &counts.mu},
                             {"mu_prime", &counts.mu_prime},
                             {"signal", &counts.signal}}) {
      if (!it->contains(key)) {
        if (std::string_view(key) == "signal") continue;
        fail(join(cpath, key), "missing");
      }
      *slot = parse_class(it->at(key), join(cpath, key));
    }
    obs = ObservedRates::from_counts(counts);
    // Explicit rates alongside counts must agree with them exactly.
    for (auto [key, value] : {std::pair<const char*, double>{"s0", obs.s0},
                              {"s_mu", obs.s_mu},
                              {"s_mu_prime", obs.s_mu_prime}}) {
      if (obj.contains(key) && get_real(obj, path, key, 0.0) != value) {
        fail(join(path, key), "does not equal clicks/pulses of its class");
      }
    }
    return obs;
  }
  for (const char* key : {"s0", "s_mu", "s_mu_prime"}) {
    if (!obj.contains(key)) fail(join(path, key), "missing");
  }
  obs.s0 = get_real(obj, path, "s0", 0.0);
  obs.s_mu = get_real(obj, path, "s_mu", 0.0);
  obs.s_mu_prime = get_real(obj, path, "s_mu_prime", 0.0);
  if (obj.contains("s_mu_s")) obs.s_mu_s = get_real(obj, path, "s_mu_s", 0.0);
  return obs;
}

AttackStrategy parse_attack(const json& obj) {
  const std::string path = "simulation.attack";
  reject_unknown(obj, path, {"kind", "block_single", "multi_keep", "forward_transmittance"});
  const auto kind = get_string(obj, path, "kind", "none");
  if (kind == "none") return AttackStrategy::none();
  if (kind != "pns") fail(join(path, "kind"), "expected \"none\" or \"pns\"");
  PnsAttack p;
  p.block_single = get_real(obj, path, "block_single", p.block_single);
  p.multi_keep = get_real(obj, path, "multi_keep", p.multi_keep);
  p.forward_transmittance = get_real(obj, path, "forward_transmittance", p.forward_transmittance);
  return AttackStrategy::photon_number_splitting(p);
}

void check(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) fail(path, msg);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Json: return "json";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Text: return "text";
  }
  return "json";
}

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "text") return OutputFormat::Text;
  fail("--format", "expected json, csv or text");
}

FConvention parse_f_convention(const std::string& s) {
  if (s == "literal") return FConvention::Literal;
  if (s == "physical") return FConvention::Physical;
  fail("f_convention", "expected literal or physical");
}

std::string to_string(FConvention c) { return c == FConvention::Literal ? "literal" : "physical"; }

RunConfig parse_config(const json& doc) {
  reject_unknown(doc, "", {"protocol", "channel", "fluctuation", "simulation", "observed", "f_convention"});
  RunConfig cfg;

  if (auto it = doc.find("protocol"); it != doc.end()) {
    const std::string path = "protocol";
    reject_unknown(*it, path, {"mu", "mu_prime", "mu_s", "n_mu", "n_mu_prime", "n_vacuum", "n_signal"});
    auto& p = cfg.protocol;
    p.mu = get_intensity(*it, path, "mu", p.mu);
    p.mu_prime = get_intensity(*it, path, "mu_prime", p.mu_prime);
    p.mu_s = get_intensity(*it, path, "mu_s", p.mu_s);
    p.n_mu = get_count(*it, path, "n_mu", p.n_mu);
    p.n_mu_prime = get_count(*it, path, "n_mu_prime", p.n_mu_prime);
    p.n_vacuum = get_count(*it, path, "n_vacuum", p.n_vacuum);
    p.n_signal = get_count(*it, path, "n_signal", p.n_signal);
  }

  if (auto it = doc.find("fluctuation"); it != doc.end()) {
    const std::string path = "fluctuation";
    reject_unknown(*it, path, {"xi", "r0_mode"});
    auto& f = cfg.protocol.fluctuation;
    f.xi = get_real(*it, path, "xi", f.xi);
    const auto mode = get_string(*it, path, "r0_mode", "zero");
    if (mode == "zero") {
      f.r0_mode = VacuumFluctuation::Zero;
    } else if (mode == "estimated") {
      f.r0_mode = VacuumFluctuation::Estimated;
    } else {
      fail("fluctuation.r0_mode", "expected zero or estimated");
    }
  }

  if (auto it = doc.find("channel"); it != doc.end()) {
    const std::string path = "channel";
    reject_unknown(*it, path, {"eta", "s0", "qber"});
    ChannelModel ch;
    ch.eta = get_real(*it, path, "eta", ch.eta);
    ch.s0 = get_real(*it, path, "s0", ch.s0);
    ch.qber = get_real(*it, path, "qber", ch.qber);
    cfg.channel = ch;
  }

  if (auto it = doc.find("observed"); it != doc.end()) cfg.observed = parse_observed(*it);

  if (auto it = doc.find("simulation"); it != doc.end()) {
    const std::string path = "simulation";
    reject_unknown(*it, path,
                   {"seed", "mode", "rate_model", "n_max", "trials", "abort_threshold", "scenario", "attack",
                    "weak_decoy"});
    auto& s = cfg.simulation;
    if (it->contains("seed")) s.seed = get_count(*it, path, "seed", 0);
    const auto mode = get_string(*it, path, "mode", "monte-carlo");
    if (mode == "monte-carlo") {
      s.mode = SimulationMode::MonteCarlo;
    } else if (mode == "analytic") {
      s.mode = SimulationMode::Analytic;
    } else {
      fail("simulation.mode", "expected monte-carlo or analytic");
    }
    const auto model = get_string(*it, path, "rate_model", "physical");
    if (model == "physical") {
      s.rate_model = RateModel::Physical;
    } else if (model == "paper") {
      s.rate_model = RateModel::Paper;
    } else {
      fail("simulation.rate_model", "expected physical or paper");
    }
    s.n_max = static_cast<unsigned>(get_count(*it, path, "n_max", s.n_max));
    s.trials = get_count(*it, path, "trials", s.trials);
    s.abort_threshold = get_real(*it, path, "abort_threshold", s.abort_threshold);
    const auto scenario = get_string(*it, path, "scenario", "end-to-end");
    if (scenario == "end-to-end") {
      s.scenario = Scenario::EndToEnd;
    } else if (scenario == "weak-decoy") {
      s.scenario = Scenario::WeakDecoy;
    } else {
      fail("simulation.scenario", "expected end-to-end or weak-decoy");
    }
    if (auto a = it->find("attack"); a != it->end()) s.attack = parse_attack(*a);
    if (auto w = it->find("weak_decoy"); w != it->end()) {
      const std::string wpath = "simulation.weak_decoy";
      reject_unknown(*w, wpath, {"n_pulses", "mu_v", "trials"});
      s.weak_decoy.n_pulses = get_count(*w, wpath, "n_pulses", s.weak_decoy.n_pulses);
      s.weak_decoy.mu_v = get_real(*w, wpath, "mu_v", s.weak_decoy.mu_v);
      s.weak_decoy.trials = get_count(*w, wpath, "trials", s.weak_decoy.trials);
    }
  }

  if (auto it = doc.find("f_convention"); it != doc.end()) {
    if (!it->is_string()) fail("f_convention", "expected a string");
    cfg.f_convention = parse_f_convention(it->get<std::string>());
  }

  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  const auto& p = cfg.protocol;
  check(p.mu.value() > 0.0, "protocol.mu", "must be positive");
  check(check_intensity_order(p.mu, p.mu_prime), "protocol.mu_prime",
        "must satisfy mu' > mu and mu' e^-mu' > mu e^-mu");
  check(p.mu_s.value() > 0.0, "protocol.mu_s", "must be positive");
  check(p.n_mu > 0, "protocol.n_mu", "must be positive");
  check(p.n_mu_prime > 0, "protocol.n_mu_prime", "must be positive");
  check(p.n_vacuum > 0, "protocol.n_vacuum", "must be positive");
  check(p.n_signal > 0, "protocol.n_signal", "must be positive");
  check(p.fluctuation.xi >= 0.0, "fluctuation.xi", "must be non-negative");

  if (cfg.channel) {
    const auto& ch = *cfg.channel;
    check(ch.eta > 0.0 && ch.eta <= 1.0, "channel.eta", "must lie in (0, 1]");
    check(ch.s0 >= 0.0 && ch.s0 < 1.0, "channel.s0", "must lie in [0, 1)");
    check(ch.qber >= 0.0 && ch.qber < 0.5, "channel.qber", "must lie in [0, 0.5)");
  }

  if (cfg.observed) {
    const auto& o = *cfg.observed;
    check(in_unit(o.s0), "observed.s0", "must lie in [0, 1]");
    check(in_unit(o.s_mu), "observed.s_mu", "must lie in [0, 1]");
    check(in_unit(o.s_mu_prime), "observed.s_mu_prime", "must lie in [0, 1]");
    if (o.s_mu_s) check(in_unit(*o.s_mu_s), "observed.s_mu_s", "must lie in [0, 1]");
  }

  const auto& s = cfg.simulation;
  check(s.n_max >= 2 && s.n_max <= 400, "simulation.n_max", "must lie in [2, 400]");
  check(s.trials >= 1, "simulation.trials", "must be at least 1");
  check(in_unit(s.abort_threshold), "simulation.abort_threshold", "must lie in [0, 1]");
  if (s.attack.kind == AttackStrategy::Kind::Pns) {
    check(in_unit(s.attack.pns.block_single), "simulation.attack.block_single", "must lie in [0, 1]");
    check(in_unit(s.attack.pns.multi_keep), "simulation.attack.multi_keep", "must lie in [0, 1]");
    check(in_unit(s.attack.pns.forward_transmittance), "simulation.attack.forward_transmittance",
          "must lie in [0, 1]");
  }
  check(s.weak_decoy.n_pulses > 0, "simulation.weak_decoy.n_pulses", "must be positive");
  check(s.weak_decoy.mu_v >= 0.0, "simulation.weak_decoy.mu_v", "must be non-negative");
  check(s.weak_decoy.trials >= 1, "simulation.weak_decoy.trials", "must be at least 1");
  check(!(s.mode == SimulationMode::MonteCarlo && s.rate_model == RateModel::Paper), "simulation.rate_model",
        "paper rates are analytic only");
}

RunConfig load_config(const std::string& path) {
  json doc;
  try {
    if (path == "-") {
      doc = json::parse(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
      std::ifstream in(path);
      if (!in) fail("--config", "cannot open " + path);
      doc = json::parse(in);
    }
  } catch (const json::parse_error& e) {
    fail("--config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  const auto& p = cfg.protocol;
  json doc;
  doc["protocol"] = {{"mu", p.mu.value()},         {"mu_prime", p.mu_prime.value()},
                     {"mu_s", p.mu_s.value()},     {"n_mu", p.n_mu},
                     {"n_mu_prime", p.n_mu_prime}, {"n_vacuum", p.n_vacuum},
                     {"n_signal", p.n_signal}};
  doc["fluctuation"] = {{"xi", p.fluctuation.xi},
                        {"r0_mode", p.fluctuation.r0_mode == VacuumFluctuation::Zero ? "zero" : "estimated"}};
  if (cfg.channel) {
    doc["channel"] = {{"eta", cfg.channel->eta}, {"s0", cfg.channel->s0}, {"qber", cfg.channel->qber}};
  }
  if (cfg.observed) doc["observed"] = to_json(*cfg.observed);
  doc["f_convention"] = to_string(cfg.f_convention);
  return doc;
}

}  // namespace decoy::cli
