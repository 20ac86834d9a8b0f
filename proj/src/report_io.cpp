#include "ddf/report_io.hpp"

#include "ddf/io.hpp"
#include "ddf/scene.hpp"

#include <sstream>
#include <stdexcept>

namespace ddf {

using nlohmann::json;

namespace {

json counts_to_json(const TaxonomyCounts& c) {
    return json{{"continuous", c.continuous}, {"discrete", c.discrete}, {"redundant", c.redundant}};
}

TaxonomyCounts counts_from_json(const json& j) {
    TaxonomyCounts c;
    c.continuous = j.at("continuous").get<std::int64_t>();
    c.discrete = j.at("discrete").get<std::int64_t>();
    c.redundant = j.at("redundant").get<std::int64_t>();
    return c;
}

NeuronClass label_from_string(const std::string& s) {
    if (s == "continuous") return NeuronClass::Continuous;
    if (s == "discrete") return NeuronClass::Discrete;
    if (s == "redundant") return NeuronClass::Redundant;
    throw std::invalid_argument("probe report: unknown neuron label '" + s + "'");
}

}  // namespace

json probe_report_to_json(const ProbeReport& report) {
    json neurons = json::array();
    for (const NeuronProfile& p : report.profiles) {
        json effects = json::array();
        for (Eigen::Index di = 0; di < p.effects.rows(); ++di) {
            json row = json::array();
            for (Eigen::Index f = 0; f < p.effects.cols(); ++f) row.push_back(p.effects(di, f));
            effects.push_back(std::move(row));
        }
        json max_abs = json::array();
        for (Eigen::Index f = 0; f < report.effect_matrix.cols(); ++f) {
            max_abs.push_back(report.effect_matrix(p.neuron, f));
        }
        neurons.push_back({{"neuron", p.neuron},
                           {"label", to_string(p.label)},
                           {"affected_factors", p.affected_factors},
                           {"effects", std::move(effects)},
                           {"max_abs_effects", std::move(max_abs)}});
    }
    return json{{"schema_version", report.schema_version},
                {"kind", "probe_report"},
                {"model_id", report.model_id},
                {"target", report.target},
                {"dataset_id", report.dataset_id},
                {"seed", report.seed},
                {"delta_schedule", report.schedule.deltas},
                {"epsilon", report.epsilon},
                {"jump_fraction", report.jump_fraction},
                {"factor_names", factor_names()},
                {"score", report.score},
                {"taxonomy_counts", counts_to_json(report.counts)},
                {"neurons", std::move(neurons)}};
}

ProbeReport probe_report_from_json(const json& j) {
    auto violations = validate_against_schema(j, probe_report_schema());
    if (!violations.empty()) {
        throw std::invalid_argument("probe report: schema violation: " + violations.front());
    }
    ProbeReport report;
    report.schema_version = j.at("schema_version").get<int>();
    report.model_id = j.at("model_id").get<std::string>();
    report.target = j.at("target").get<std::string>();
    report.dataset_id = j.at("dataset_id").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.schedule.deltas = j.at("delta_schedule").get<std::vector<double>>();
    report.epsilon = j.at("epsilon").get<double>();
    report.jump_fraction = j.at("jump_fraction").get<double>();
    report.score = j.at("score").get<double>();
    report.counts = counts_from_json(j.at("taxonomy_counts"));

    const json& neurons = j.at("neurons");
    report.effect_matrix =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(neurons.size()), kFactorCount);
    for (const json& jn : neurons) {
        NeuronProfile p;
        p.neuron = jn.at("neuron").get<std::int64_t>();
        p.label = label_from_string(jn.at("label").get<std::string>());
        p.affected_factors = jn.at("affected_factors").get<std::vector<int>>();
        const json& effects = jn.at("effects");
        p.effects = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(effects.size()), kFactorCount);
        for (std::size_t di = 0; di < effects.size(); ++di) {
            const auto row = effects[di].get<std::vector<double>>();
            if (row.size() != kFactorCount) {
                throw std::invalid_argument("probe report: effect row width mismatch");
            }
            for (std::size_t f = 0; f < row.size(); ++f) {
                p.effects(static_cast<Eigen::Index>(di), static_cast<Eigen::Index>(f)) = row[f];
            }
        }
        const auto max_abs = jn.at("max_abs_effects").get<std::vector<double>>();
        if (max_abs.size() != kFactorCount || p.neuron < 0 ||
            p.neuron >= report.effect_matrix.rows()) {
            throw std::invalid_argument("probe report: malformed neuron entry");
        }
        for (std::size_t f = 0; f < max_abs.size(); ++f) {
            report.effect_matrix(p.neuron, static_cast<Eigen::Index>(f)) = max_abs[f];
        }
        report.profiles.push_back(std::move(p));
    }
    return report;
}

json comparison_to_json(const ComparisonReport& cmp) {
    json per_factor = json::array();
    for (const FactorBest& b : cmp.per_factor) {
        per_factor.push_back({{"factor", b.factor},
                              {"neuron_a", b.neuron_a},
                              {"effect_a", b.effect_a},
                              {"neuron_b", b.neuron_b},
                              {"effect_b", b.effect_b}});
    }
    return json{{"schema_version", cmp.schema_version},
                {"kind", "comparison_report"},
                {"model_a", cmp.model_a},
                {"model_b", cmp.model_b},
                {"target_a", cmp.target_a},
                {"target_b", cmp.target_b},
                {"score_a", cmp.score_a},
                {"score_b", cmp.score_b},
                {"score_difference", cmp.score_difference},
                {"second_model_lower", cmp.second_model_lower},
                {"taxonomy_counts_a", counts_to_json(cmp.counts_a)},
                {"taxonomy_counts_b", counts_to_json(cmp.counts_b)},
                {"per_factor_best", std::move(per_factor)}};
}

std::string effect_matrix_csv(const ProbeReport& report) {
    std::ostringstream os;
    os << "neuron";
    for (const std::string& name : factor_names()) os << ',' << name;
    os << '\n';
    for (Eigen::Index i = 0; i < report.effect_matrix.rows(); ++i) {
        os << i;
        for (Eigen::Index f = 0; f < report.effect_matrix.cols(); ++f) {
            os << ',' << format_double(report.effect_matrix(i, f));
        }
        os << '\n';
    }
    return os.str();
}

std::string comparison_summary_text(const ComparisonReport& cmp) {
    std::ostringstream os;
    os << "model A: " << cmp.model_a.substr(0, 12) << "  target " << cmp.target_a << '\n';
    os << "model B: " << cmp.model_b.substr(0, 12) << "  target " << cmp.target_b << '\n';
    os << '\n';
    os << "disentanglement score (lower is better, 1.0 = one neuron one factor)\n";
    os << "  A: " << format_double(cmp.score_a) << '\n';
    os << "  B: " << format_double(cmp.score_b) << '\n';
    os << "  B - A: " << format_double(cmp.score_difference)
       << (cmp.second_model_lower ? "  (B lower)" : "  (B not lower)") << '\n';
    os << '\n';
    os << "taxonomy counts        A      B\n";
    auto row = [&](const char* name, std::int64_t a, std::int64_t b) {
        os << "  " << name;
        for (std::size_t i = std::string(name).size(); i < 18; ++i) os << ' ';
        os << a << "      " << b << '\n';
    };
    row("continuous", cmp.counts_a.continuous, cmp.counts_b.continuous);
    row("discrete", cmp.counts_a.discrete, cmp.counts_b.discrete);
    row("redundant", cmp.counts_a.redundant, cmp.counts_b.redundant);
    os << '\n';
    os << "per-factor best neuron (neuron: max |effect|)\n";
    for (const FactorBest& b : cmp.per_factor) {
        os << "  " << b.factor;
        for (std::size_t i = b.factor.size(); i < 16; ++i) os << ' ';
        os << "A " << b.neuron_a << ": " << format_double(b.effect_a) << "   B " << b.neuron_b
           << ": " << format_double(b.effect_b) << '\n';
    }
    return os.str();
}

namespace {

const char* kProbeReportSchema = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "probe report",
  "type": "object",
  "required": ["schema_version", "kind", "model_id", "target", "dataset_id", "seed",
               "delta_schedule", "epsilon", "jump_fraction", "factor_names", "score",
               "taxonomy_counts", "neurons"],
  "properties": {
    "schema_version": {"type": "integer"},
    "kind": {"enum": ["probe_report"]},
    "model_id": {"type": "string"},
    "target": {"enum": ["ddf_hidden", "representation"]},
    "dataset_id": {"type": "string"},
    "seed": {"type": "integer"},
    "delta_schedule": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    "epsilon": {"type": "number"},
    "jump_fraction": {"type": "number"},
    "factor_names": {"type": "array", "items": {"type": "string"}, "minItems": 1},
    "score": {"type": "number"},
    "taxonomy_counts": {
      "type": "object",
      "required": ["continuous", "discrete", "redundant"],
      "properties": {
        "continuous": {"type": "integer"},
        "discrete": {"type": "integer"},
        "redundant": {"type": "integer"}
      }
    },
    "neurons": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["neuron", "label", "affected_factors", "effects", "max_abs_effects"],
        "properties": {
          "neuron": {"type": "integer"},
          "label": {"enum": ["continuous", "discrete", "redundant"]},
          "affected_factors": {"type": "array", "items": {"type": "integer"}},
          "effects": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
          "max_abs_effects": {"type": "array", "items": {"type": "number"}}
        }
      }
    }
  }
})json";

const char* kComparisonReportSchema = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "comparison report",
  "type": "object",
  "required": ["schema_version", "kind", "model_a", "model_b", "target_a", "target_b",
               "score_a", "score_b", "score_difference", "second_model_lower",
               "taxonomy_counts_a", "taxonomy_counts_b", "per_factor_best"],
  "properties": {
    "schema_version": {"type": "integer"},
    "kind": {"enum": ["comparison_report"]},
    "model_a": {"type": "string"},
    "model_b": {"type": "string"},
    "target_a": {"type": "string"},
    "target_b": {"type": "string"},
    "score_a": {"type": "number"},
    "score_b": {"type": "number"},
    "score_difference": {"type": "number"},
    "second_model_lower": {"type": "boolean"},
    "taxonomy_counts_a": {
      "type": "object",
      "required": ["continuous", "discrete", "redundant"],
      "properties": {
        "continuous": {"type": "integer"},
        "discrete": {"type": "integer"},
        "redundant": {"type": "integer"}
      }
    },
    "taxonomy_counts_b": {
      "type": "object",
      "required": ["continuous", "discrete", "redundant"],
      "properties": {
        "continuous": {"type": "integer"},
        "discrete": {"type": "integer"},
        "redundant": {"type": "integer"}
      }
    },
    "per_factor_best": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["factor", "neuron_a", "effect_a", "neuron_b", "effect_b"],
        "properties": {
          "factor": {"type": "string"},
          "neuron_a": {"type": "integer"},
          "effect_a": {"type": "number"},
          "neuron_b": {"type": "integer"},
          "effect_b": {"type": "number"}
        }
      }
    }
  }
})json";

bool type_matches(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "integer") return value.is_number_integer();
    if (type == "number") return value.is_number();
    if (type == "boolean") return value.is_boolean();
    return false;
}

void validate_node(const json& doc, const json& schema, const std::string& path,
                   std::vector<std::string>& errors) {
    if (schema.contains("enum")) {
        bool found = false;
        for (const json& candidate : schema.at("enum")) found = found || candidate == doc;
        if (!found) errors.push_back(path + ": value not in enum");
        return;
    }
    if (schema.contains("type")) {
        const std::string type = schema.at("type").get<std::string>();
        if (!type_matches(doc, type)) {
            errors.push_back(path + ": expected " + type);
            return;
        }
    }
    if (schema.contains("required")) {
        for (const json& key : schema.at("required")) {
            if (!doc.contains(key.get<std::string>())) {
                errors.push_back(path + ": missing required key '" + key.get<std::string>() + "'");
            }
        }
    }
    if (schema.contains("properties") && doc.is_object()) {
        for (const auto& [key, sub] : schema.at("properties").items()) {
            if (doc.contains(key)) validate_node(doc.at(key), sub, path + "/" + key, errors);
        }
    }
    if (doc.is_array()) {
        if (schema.contains("minItems") &&
            doc.size() < schema.at("minItems").get<std::size_t>()) {
            errors.push_back(path + ": fewer than minItems elements");
        }
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < doc.size(); ++i) {
                validate_node(doc[i], schema.at("items"), path + "/" + std::to_string(i), errors);
            }
        }
    }
}

}  // namespace

const json& probe_report_schema() {
    static const json schema = json::parse(kProbeReportSchema);
    return schema;
}

const json& comparison_report_schema() {
    static const json schema = json::parse(kComparisonReportSchema);
    return schema;
}

std::vector<std::string> validate_against_schema(const json& doc, const json& schema) {
    std::vector<std::string> errors;
    validate_node(doc, schema, "", errors);
    return errors;
}

}  // namespace ddf
