#pragma once

// JSON views of the exact objects. Rationals are always "p/q" strings.

#include <json.hpp>
#include <string>
#include <vector>

#include "divergia/constructions.hpp"
#include "divergia/dynsys.hpp"
#include "divergia/measure.hpp"
#include "divergia/power_value.hpp"
#include "divergia/real.hpp"

namespace divergia::serialize {

using nlohmann::json;

json to_json(const Rational& q);
json to_json(const std::vector<Rational>& v);
json to_json(const PowerValue& v);
json to_json(const Interval& x);
json to_json(const measure::StepFunction& f);
json to_json(const dynsys::SystemModel& s);
json to_json(const dynsys::MaximalReport& r);
json to_json(const constructions::ConstructionPlan& plan);

/// Accepts "p/q" strings, decimal strings and JSON integers.
Rational rational_from(const json& j);

/// CSV with a header row; cells are written verbatim.
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace divergia::serialize
