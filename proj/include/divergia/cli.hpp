#pragma once

// Batch driver behind the divergia executable: one experiment per config,
// a JSON report with named assertions, and CSV plot data.

#include <cstdint>
#include <json.hpp>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace divergia::cli {

using nlohmann::json;

enum ExitCode : int { Pass = 0, AssertionFailure = 1, Usage = 2, ResourceGuard = 3 };

/// Bad command line or config; the message names the offending key.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Assertion {
    std::string name;
    std::string bound;
    std::string achieved;
    bool pass = false;
};

struct RunReport {
    std::string experiment;
    json config;   // fully resolved, defaults included
    json results;
    std::vector<Assertion> assertions;
    std::map<std::string, std::string> csv;  // file name -> contents
    std::optional<json> plan;                // construction experiments
    double seconds = 0;

    bool passed() const;
    /// Everything except timing is a deterministic function of the config.
    json payload() const;
    json to_json() const;
};

const std::vector<std::string>& experiments();

/// Run one experiment. `seed` overrides config["seed"].
RunReport run(const std::string& experiment, json config, std::optional<std::uint64_t> seed = std::nullopt);

/// Rebuild a serialized plan from its inputs and compare every field.
RunReport replay(const json& plan);

/// Write <experiment>.json, the CSV files and <experiment>_plan.json into dir,
/// each through a temporary file and a rename.
void write_outputs(const RunReport& r, const std::string& dir);

}  // namespace divergia::cli
