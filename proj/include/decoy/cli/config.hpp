#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "decoy/bounds.hpp"
#include "decoy/keyrate.hpp"
#include "decoy/protocol.hpp"
#include "decoy/simulator.hpp"

namespace decoy::cli {

enum class OutputFormat { Json, Csv, Text };
enum class Scenario { EndToEnd, WeakDecoy };

struct WeakDecoySection {
  std::uint64_t n_pulses = 10'000'000'000ULL;
  double mu_v = 1e-4;
  std::uint64_t trials = 1000;
};

struct SimulationSection {
  std::optional<std::uint64_t> seed;
  SimulationMode mode = SimulationMode::MonteCarlo;
  RateModel rate_model = RateModel::Physical;
  unsigned n_max = 30;
  std::uint64_t trials = 1;
  double abort_threshold = 0.1;
  Scenario scenario = Scenario::EndToEnd;
  AttackStrategy attack{};
  WeakDecoySection weak_decoy{};
};

/// One document for every command: `protocol`, `channel`, `fluctuation`,
/// `simulation`, plus the optional `observed` rates and `f_convention`.
struct RunConfig {
  ProtocolParams protocol{};
  std::optional<ChannelModel> channel;
  std::optional<ObservedRates> observed;
  SimulationSection simulation{};
  FConvention f_convention = FConvention::Literal;
};

/// Parses and validates. Failures throw ErrorKind::InvalidConfig with a
/// message that starts with the offending field path, e.g. "channel.eta: ...".
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Re-checks every section against its type's invariants.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& s);
FConvention parse_f_convention(const std::string& s);
std::string to_string(FConvention c);

}  // namespace decoy::cli
