#include "ddf/config.hpp"

#include "ddf/io.hpp"
#include "ddf/rng.hpp"
#include "ddf/sha256.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddf {

namespace {

using nlohmann::json;
using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void config_error(const std::string& origin, const std::string& field,
                               const std::string& message) {
    throw std::invalid_argument("config " + origin + ": field '" + field + "': " + message);
}

SectionMap parse_ini(const std::string& text, const std::string& origin) {
    SectionMap sections;
    std::string current;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config " + origin + ": line " +
                                            std::to_string(line_no) + ": unterminated section");
            }
            current = trim(line.substr(1, line.size() - 2));
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || current.empty()) {
            throw std::invalid_argument("config " + origin + ": line " + std::to_string(line_no) +
                                        ": expected 'key = value' inside a [section]");
        }
        sections[current][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return sections;
}

SectionMap flatten_json(const json& j, const std::string& origin) {
    if (!j.is_object()) throw std::invalid_argument("config " + origin + ": expected an object");
    SectionMap sections;
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object()) {
            throw std::invalid_argument("config " + origin + ": section '" + section +
                                        "' must be an object");
        }
        for (const auto& [key, value] : body.items()) {
            std::string text;
            if (value.is_string()) {
                text = value.get<std::string>();
            } else if (value.is_array()) {
                std::ostringstream os;
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (i > 0) os << ',';
                    os << value[i].dump();
                }
                text = os.str();
            } else {
                text = value.dump();
            }
            sections[section][key] = text;
        }
    }
    return sections;
}

class FieldReader {
public:
    FieldReader(const SectionMap& sections, std::string origin)
        : sections_(sections), origin_(std::move(origin)) {}

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string raw(const std::string& section, const std::string& key) const {
        return sections_.at(section).at(key);
    }

    template <typename T, typename Parse>
    void read(const std::string& section, const std::string& key, T& out, Parse parse,
              bool required = false) const {
        consumed_.insert(section + "." + key);
        if (!has(section, key)) {
            if (required) config_error(origin_, section + "." + key, "required but missing");
            return;
        }
        const std::string value = raw(section, key);
        try {
            out = parse(value);
        } catch (const std::exception& e) {
            config_error(origin_, section + "." + key,
                         "cannot parse '" + value + "' (" + e.what() + ")");
        }
    }

    void reject_unknown() const {
        for (const auto& [section, body] : sections_) {
            for (const auto& [key, _] : body) {
                if (!consumed_.count(section + "." + key)) {
                    config_error(origin_, section + "." + key, "unknown field");
                }
            }
        }
    }

private:
    const SectionMap& sections_;
    std::string origin_;
    mutable std::set<std::string> consumed_;
};

std::int64_t to_int(const std::string& s) {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

std::uint64_t to_uint(const std::string& s) {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("expected true/false");
}

std::vector<double> to_double_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(to_double(trim(part)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

}  // namespace

HostConfig ExperimentConfig::host_config() const {
    HostConfig h;
    h.image_hw = image_hw;
    h.d = d;
    h.hidden = hidden;
    h.with_ddf = with_ddf;
    h.n = n;
    h.bias_low = bias_low;
    h.bias_high = bias_high;
    h.seed = model_seed;
    return h;
}

ProbeOptions ExperimentConfig::probe_options() const {
    ProbeOptions p;
    p.num_scenes = probe_batch;
    p.schedule = schedule;
    p.epsilon = epsilon;
    p.jump_fraction = jump_fraction;
    p.seed = probe_seed;
    return p;
}

std::string ExperimentConfig::canonical_string() const {
    std::ostringstream os;
    os << "dataset.image_hw=" << image_hw << '\n';
    os << "model.d=" << d << '\n';
    os << "model.with_ddf=" << (with_ddf ? "true" : "false") << '\n';
    os << "model.n=" << n << '\n';
    os << "model.hidden=" << hidden << '\n';
    os << "model.bias_low=" << format_double(bias_low) << '\n';
    os << "model.bias_high=" << format_double(bias_high) << '\n';
    os << "model.seed=" << model_seed << '\n';
    os << "training.steps=" << steps << '\n';
    os << "training.batch=" << batch << '\n';
    os << "training.lr=" << format_double(lr) << '\n';
    os << "training.momentum=" << format_double(momentum) << '\n';
    os << "training.num_scenes=" << num_scenes << '\n';
    os << "training.checkpoint_every=" << checkpoint_every << '\n';
    os << "training.seed=" << training_seed << '\n';
    os << "probe.deltas=";
    for (std::size_t i = 0; i < schedule.deltas.size(); ++i) {
        if (i > 0) os << ',';
        os << format_double(schedule.deltas[i]);
    }
    os << '\n';
    os << "probe.epsilon=" << format_double(epsilon) << '\n';
    os << "probe.jump_fraction=" << format_double(jump_fraction) << '\n';
    os << "probe.batch=" << probe_batch << '\n';
    os << "probe.seed=" << probe_seed << '\n';
    os << "output.dir=" << output_dir << '\n';
    return os.str();
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical_string()); }

void ExperimentConfig::validate() const {
    if (image_hw < 16) throw std::invalid_argument("config: dataset.image_hw must be >= 16");
    if (d < 1 || n < 1 || hidden < 1) {
        throw std::invalid_argument("config: model widths must be >= 1");
    }
    if (!(bias_low < bias_high) || !(bias_high < 0.0)) {
        throw std::invalid_argument("config: model bias bounds must satisfy low < high < 0");
    }
    if (steps < 1 || batch < 1 || num_scenes < 1) {
        throw std::invalid_argument("config: training.steps/batch/num_scenes must be >= 1");
    }
    if (!(lr > 0.0)) throw std::invalid_argument("config: training.lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("config: training.momentum must lie in [0, 1)");
    }
    schedule.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("config: probe.epsilon must be > 0");
    if (!(jump_fraction > 0.5) || !(jump_fraction <= 1.0)) {
        throw std::invalid_argument("config: probe.jump_fraction must lie in (0.5, 1]");
    }
    if (probe_batch < 1) throw std::invalid_argument("config: probe.batch must be >= 1");
    if (output_dir.empty()) throw std::invalid_argument("config: output.dir must be non-empty");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    SectionMap sections;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config " + origin + ": invalid JSON: " + e.what());
        }
        sections = flatten_json(j, origin);
    } else {
        sections = parse_ini(text, origin);
    }

    FieldReader reader(sections, origin);
    ExperimentConfig c;
    reader.read("dataset", "image_hw", c.image_hw,
                [](const std::string& s) { return static_cast<int>(to_int(s)); });
    reader.read("model", "d", c.d, to_int);
    reader.read("model", "with_ddf", c.with_ddf, to_bool);
    reader.read("model", "n", c.n, to_int);
    reader.read("model", "hidden", c.hidden, to_int);
    reader.read("model", "bias_low", c.bias_low, to_double);
    reader.read("model", "bias_high", c.bias_high, to_double);
    reader.read("model", "seed", c.model_seed, to_uint, /*required=*/true);
    reader.read("training", "steps", c.steps, to_int);
    reader.read("training", "batch", c.batch, to_int);
    reader.read("training", "lr", c.lr, to_double);
    reader.read("training", "momentum", c.momentum, to_double);
    reader.read("training", "num_scenes", c.num_scenes, to_int);
    reader.read("training", "checkpoint_every", c.checkpoint_every, to_int);
    reader.read("training", "seed", c.training_seed, to_uint, /*required=*/true);
    std::vector<double> deltas;
    reader.read("probe", "deltas", deltas, to_double_list);
    if (!deltas.empty()) c.schedule.deltas = deltas;
    reader.read("probe", "epsilon", c.epsilon, to_double);
    reader.read("probe", "jump_fraction", c.jump_fraction, to_double);
    reader.read("probe", "batch", c.probe_batch, to_int);
    reader.read("probe", "seed", c.probe_seed, to_uint, /*required=*/true);
    reader.read("output", "dir", c.output_dir, [](const std::string& s) { return s; });
    reader.reject_unknown();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config_text(read_text_file(path), "'" + path + "'");
}

void override_seeds(ExperimentConfig& config, std::uint64_t master_seed) {
    config.model_seed = split_seed(master_seed, 1);
    config.training_seed = split_seed(master_seed, 2);
    config.probe_seed = split_seed(master_seed, 3);
}

}  // namespace ddf
