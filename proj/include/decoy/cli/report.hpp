#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoy/bounds.hpp"
#include "decoy/keyrate.hpp"
#include "decoy/optimizer.hpp"
#include "decoy/simulator.hpp"

namespace decoy::cli {

using nlohmann::json;

/// Shortest text that parses back to the same double; '.' separator always.
std::string format_real(double x);

json to_json(const ObservedRates& obs);
json to_json(const VerificationResult& r);
json to_json(const KeyRateReport& r);
json to_json(const WeakDecoyReport& r);
json to_json(const Table1Row& row);
json to_json(const Table2Row& row);

ObservedRates observed_from_json(const json& j);
VerificationResult verification_from_json(const json& j);
KeyRateReport keyrate_from_json(const json& j);

void write_table1_csv(std::ostream& out, const std::vector<Table1Row>& rows);
void write_table2_csv(std::ostream& out, const std::vector<Table2Row>& rows);

}  // namespace decoy::cli
