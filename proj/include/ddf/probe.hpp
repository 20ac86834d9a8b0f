#pragma once

#include "ddf/host.hpp"
#include "ddf/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ddf {

// Offsets applied to one neuron at a time; must contain 0 and be strictly
// increasing.
struct DeltaSchedule {
    std::vector<double> deltas;

    static DeltaSchedule standard();  // -0.3 .. +0.3 in steps of 0.1
    void validate() const;
    std::size_t zero_index() const;
    std::size_t size() const { return deltas.size(); }
};

enum class NeuronClass { Continuous = 0, Discrete = 1, Redundant = 2 };
const char* to_string(NeuronClass c);

// One neuron's sweep result: signed, confidence-weighted factor
// displacements per delta, relative to the delta = 0 reconstruction.
struct NeuronProfile {
    std::int64_t neuron = 0;
    Eigen::MatrixXd effects;  // [n_deltas x kFactorCount]
    NeuronClass label = NeuronClass::Redundant;
    std::vector<int> affected_factors;
};

// A trained generative model bound to a batch of probe scenes. The probe
// only needs reconstructions, so synthetic subjects with hand-wired
// behavior can stand in for a real host during verification.
class ProbeSubject {
public:
    virtual ~ProbeSubject() = default;
    virtual std::int64_t neuron_count() const = 0;
    virtual std::int64_t scene_count() const = 0;
    virtual std::string target_name() const = 0;
    // Reconstruction [3 x H x W] for a scene with `neuron` offset by delta
    // at the probe target layer; neuron = -1 leaves the model untouched.
    // Must be pure and safe to call concurrently.
    virtual Tensor reconstruct(std::int64_t scene, std::int64_t neuron,
                               double delta) const = 0;
};

// Probes the DDF hidden layer when the model carries one, otherwise the
// representation layer itself (the baseline protocol).
class HostProbeSubject : public ProbeSubject {
public:
    HostProbeSubject(const HostModel& model, const std::vector<FactorScene>& scenes);

    std::int64_t neuron_count() const override;
    std::int64_t scene_count() const override;
    std::string target_name() const override;
    Tensor reconstruct(std::int64_t scene, std::int64_t neuron, double delta) const override;

private:
    const HostModel& model_;
    Eigen::MatrixXd representations_;  // [scenes x d]
};

struct TaxonomyCounts {
    std::int64_t continuous = 0;
    std::int64_t discrete = 0;
    std::int64_t redundant = 0;
};

struct ProbeOptions {
    std::int64_t num_scenes = 16;
    DeltaSchedule schedule = DeltaSchedule::standard();
    double epsilon = 0.1;
    double jump_fraction = 0.7;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct ProbeReport {
    int schema_version = 1;
    std::string model_id;
    std::string target;
    std::string dataset_id;
    std::uint64_t seed = 0;
    DeltaSchedule schedule;
    double epsilon = 0.1;
    double jump_fraction = 0.7;
    std::vector<NeuronProfile> profiles;
    Eigen::MatrixXd effect_matrix;  // [n_neurons x kFactorCount], max over deltas of |e|
    TaxonomyCounts counts;
    double score = 0.0;
};

struct FactorBest {
    std::string factor;
    std::int64_t neuron_a = -1;
    double effect_a = 0.0;
    std::int64_t neuron_b = -1;
    double effect_b = 0.0;
};

struct ComparisonReport {
    int schema_version = 1;
    std::string model_a;
    std::string model_b;
    std::string target_a;
    std::string target_b;
    double score_a = 0.0;
    double score_b = 0.0;
    double score_difference = 0.0;  // score_b - score_a
    bool second_model_lower = false;
    TaxonomyCounts counts_a;
    TaxonomyCounts counts_b;
    std::vector<FactorBest> per_factor;
};

// Sweeps one neuron over the schedule for every scene, averaging the
// confidence-weighted factor displacements against the delta = 0
// reconstruction of the same scene.
NeuronProfile sweep_neuron(const ProbeSubject& subject, std::int64_t neuron,
                           const DeltaSchedule& schedule);
NeuronProfile sweep_neuron(const HostModel& model, const std::vector<FactorScene>& scenes,
                           std::int64_t neuron, const DeltaSchedule& schedule);

// redundant: every |effect| below epsilon. Otherwise the dominant factor's
// curve over delta decides: discrete when one adjacent jump carries at
// least jump_fraction of the curve's total range, continuous otherwise.
NeuronClass classify_neuron(const NeuronProfile& profile, double epsilon,
                            double jump_fraction);

// The exact scene batch a probe run with these options will use.
std::vector<FactorScene> probe_scene_set(const ProbeOptions& options, int hw);

// Full protocol over every probe-target neuron.
ProbeReport probe_model(const HostModel& model, std::int64_t num_scenes,
                        const DeltaSchedule& schedule, std::uint64_t seed);
ProbeReport probe_model(const HostModel& model, const ProbeOptions& options);
ProbeReport probe_subject(const ProbeSubject& subject, const ProbeOptions& options,
                          const std::string& model_id, const std::string& dataset_id);

// Mean, over neurons whose row maximum reaches epsilon, of how many
// factors that neuron moves; 0 when nothing is active. 1.0 is perfect
// one-neuron-one-factor.
double disentanglement_score(const Eigen::MatrixXd& effect_matrix, double epsilon);

// Side-by-side scores, taxonomy counts and per-factor best neurons. The
// direction of the difference is reported, never asserted.
ComparisonReport compare_models(const ProbeReport& baseline, const ProbeReport& other);

}  // namespace ddf
