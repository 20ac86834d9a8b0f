#pragma once

#include "ddf/host.hpp"
#include "ddf/probe.hpp"

#include <cstdint>
#include <string>

namespace ddf {

// One config file drives every stage, so a baseline run and a DDF run can
// only ever differ by the filter itself. Accepted formats: INI sections
// (primary) or the equivalent nested JSON.
struct ExperimentConfig {
    // [dataset]
    int image_hw = 32;

    // [model]
    std::int64_t d = 32;
    bool with_ddf = false;
    std::int64_t n = 32;
    std::int64_t hidden = 256;
    double bias_low = -0.10;
    double bias_high = -0.01;
    std::uint64_t model_seed = 0;

    // [training]
    std::int64_t steps = 5000;
    std::int64_t batch = 8;
    double lr = 0.05;
    double momentum = 0.9;
    std::int64_t num_scenes = 512;
    std::int64_t checkpoint_every = 0;
    std::uint64_t training_seed = 0;

    // [probe]
    DeltaSchedule schedule = DeltaSchedule::standard();
    double epsilon = 0.1;
    double jump_fraction = 0.7;
    std::int64_t probe_batch = 16;
    std::uint64_t probe_seed = 0;

    // [output]
    std::string output_dir = "out";

    HostConfig host_config() const;
    ProbeOptions probe_options() const;

    // Every field in a fixed order; the config hash is the SHA-256 of this.
    std::string canonical_string() const;
    std::string hash() const;

    void validate() const;
};

// Parses INI or JSON depending on content; unknown sections or keys are
// a config error, as are missing seeds.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Replaces all three seeds with streams derived from one master seed.
void override_seeds(ExperimentConfig& config, std::uint64_t master_seed);

}  // namespace ddf
