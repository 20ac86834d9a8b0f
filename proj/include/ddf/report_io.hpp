#pragma once

#include "ddf/probe.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ddf {

nlohmann::json probe_report_to_json(const ProbeReport& report);
ProbeReport probe_report_from_json(const nlohmann::json& j);

nlohmann::json comparison_to_json(const ComparisonReport& cmp);

// Effect matrix as CSV: header row carries the factor names, one row per
// neuron.
std::string effect_matrix_csv(const ProbeReport& report);

// Plain-text side-by-side summary table for a comparison.
std::string comparison_summary_text(const ComparisonReport& cmp);

// The published report schemas (the copies under docs/ mirror these).
const nlohmann::json& probe_report_schema();
const nlohmann::json& comparison_report_schema();

// Minimal structural validator covering the subset of JSON Schema the
// published schemas use: type, properties, required, items, enum,
// minItems. Returns human-readable violations; empty means valid.
std::vector<std::string> validate_against_schema(const nlohmann::json& doc,
                                                 const nlohmann::json& schema);

}  // namespace ddf
