#include "ddf/probe.hpp"

#include "ddf/rng.hpp"
#include "ddf/sha256.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ddf {

namespace {

FactorEstimate extract_from(const ProbeSubject& subject, std::int64_t scene,
                            std::int64_t neuron, double delta) {
    return extract_factors(subject.reconstruct(scene, neuron, delta));
}

NeuronProfile sweep_with_bases(const ProbeSubject& subject, std::int64_t neuron,
                               const DeltaSchedule& schedule,
                               const std::vector<FactorEstimate>& bases) {
    if (neuron < 0 || neuron >= subject.neuron_count()) {
        throw std::invalid_argument("sweep_neuron: neuron index " + std::to_string(neuron) +
                                    " out of range [0, " +
                                    std::to_string(subject.neuron_count()) + ")");
    }
    schedule.validate();

    const auto n_deltas = static_cast<Eigen::Index>(schedule.size());
    NeuronProfile profile;
    profile.neuron = neuron;
    profile.effects = Eigen::MatrixXd::Zero(n_deltas, kFactorCount);

    Eigen::MatrixXd weight_sums = Eigen::MatrixXd::Zero(n_deltas, kFactorCount);
    for (std::int64_t s = 0; s < subject.scene_count(); ++s) {
        for (Eigen::Index di = 0; di < n_deltas; ++di) {
            const FactorEstimate est =
                extract_from(subject, s, neuron, schedule.deltas[static_cast<std::size_t>(di)]);
            for (int f = 0; f < kFactorCount; ++f) {
                const FactorDisplacement d =
                    factor_displacement(bases[static_cast<std::size_t>(s)], est, f);
                profile.effects(di, f) += d.weight * d.value;
                weight_sums(di, f) += d.weight;
            }
        }
    }
    for (Eigen::Index di = 0; di < n_deltas; ++di) {
        for (int f = 0; f < kFactorCount; ++f) {
            profile.effects(di, f) =
                weight_sums(di, f) > 0.0 ? profile.effects(di, f) / weight_sums(di, f) : 0.0;
        }
    }
    return profile;
}

std::vector<FactorEstimate> base_estimates(const ProbeSubject& subject) {
    std::vector<FactorEstimate> bases;
    bases.reserve(static_cast<std::size_t>(subject.scene_count()));
    for (std::int64_t s = 0; s < subject.scene_count(); ++s) {
        bases.push_back(extract_from(subject, s, -1, 0.0));
    }
    return bases;
}

std::string dataset_identifier(int image_hw) {
    return sha256_hex("dataset:v1;image_hw=" + std::to_string(image_hw));
}

}  // namespace

DeltaSchedule DeltaSchedule::standard() {
    return DeltaSchedule{{-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3}};
}

void DeltaSchedule::validate() const {
    if (deltas.empty()) throw std::invalid_argument("delta schedule: empty");
    bool has_zero = false;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (deltas[i] == 0.0) has_zero = true;
        if (i > 0 && !(deltas[i] > deltas[i - 1])) {
            throw std::invalid_argument("delta schedule: values must be strictly increasing");
        }
    }
    if (!has_zero) throw std::invalid_argument("delta schedule: must contain 0");
}

std::size_t DeltaSchedule::zero_index() const {
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (deltas[i] == 0.0) return i;
    }
    throw std::invalid_argument("delta schedule: must contain 0");
}

const char* to_string(NeuronClass c) {
    switch (c) {
        case NeuronClass::Continuous: return "continuous";
        case NeuronClass::Discrete: return "discrete";
        case NeuronClass::Redundant: return "redundant";
    }
    return "?";
}

HostProbeSubject::HostProbeSubject(const HostModel& model,
                                   const std::vector<FactorScene>& scenes)
    : model_(model) {
    if (scenes.empty()) throw std::invalid_argument("probe: scene batch is empty");
    NoGradGuard guard;
    Tensor images = scene_batch(scenes);
    Tensor reps = model.encode(images);
    representations_ =
        ConstMatMap(reps.data().data(), reps.dim(0), reps.dim(1));
}

std::int64_t HostProbeSubject::neuron_count() const {
    return model_.filter.has_value() ? model_.filter->n : model_.config.d;
}

std::int64_t HostProbeSubject::scene_count() const { return representations_.rows(); }

std::string HostProbeSubject::target_name() const {
    return model_.filter.has_value() ? "ddf_hidden" : "representation";
}

Tensor HostProbeSubject::reconstruct(std::int64_t scene, std::int64_t neuron,
                                     double delta) const {
    if (scene < 0 || scene >= representations_.rows()) {
        throw std::invalid_argument("probe: scene index out of range");
    }
    NoGradGuard guard;
    const std::int64_t d = model_.config.d;
    Array rep_data(d);
    Eigen::Map<Eigen::RowVectorXd>(rep_data.data(), d) = representations_.row(scene);
    Tensor rep = Tensor::from_array({1, d}, std::move(rep_data));

    Tensor decoded_input;
    if (model_.filter.has_value()) {
        decoded_input = neuron < 0 ? ddf_forward(*model_.filter, rep)
                                   : ddf_forward_with_override(*model_.filter, rep, neuron, delta);
    } else {
        if (neuron >= d) {
            throw std::invalid_argument("probe: neuron index out of range for representation");
        }
        if (neuron >= 0) rep.data()[neuron] += delta;
        decoded_input = rep;
    }
    Tensor out = model_.decode(decoded_input);
    const int hw = model_.config.image_hw;
    return reshape(out, {3, hw, hw});
}

NeuronProfile sweep_neuron(const ProbeSubject& subject, std::int64_t neuron,
                           const DeltaSchedule& schedule) {
    return sweep_with_bases(subject, neuron, schedule, base_estimates(subject));
}

NeuronProfile sweep_neuron(const HostModel& model, const std::vector<FactorScene>& scenes,
                           std::int64_t neuron, const DeltaSchedule& schedule) {
    HostProbeSubject subject(model, scenes);
    return sweep_neuron(subject, neuron, schedule);
}

NeuronClass classify_neuron(const NeuronProfile& profile, double epsilon,
                            double jump_fraction) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("classify_neuron: epsilon must be > 0");
    if (!(jump_fraction > 0.5) || !(jump_fraction <= 1.0)) {
        throw std::invalid_argument("classify_neuron: jump_fraction must lie in (0.5, 1]");
    }

    const double max_abs = profile.effects.cwiseAbs().maxCoeff();
    if (max_abs < epsilon) return NeuronClass::Redundant;

    // Dominant factor: largest |effect| over all deltas, lowest factor
    // index on exact ties.
    int dominant = 0;
    double dominant_abs = -1.0;
    for (int f = 0; f < profile.effects.cols(); ++f) {
        const double a = profile.effects.col(f).cwiseAbs().maxCoeff();
        if (a > dominant_abs) {
            dominant_abs = a;
            dominant = f;
        }
    }

    const Eigen::VectorXd curve = profile.effects.col(dominant);
    const double range = curve.maxCoeff() - curve.minCoeff();
    double max_jump = 0.0;
    for (Eigen::Index i = 0; i + 1 < curve.size(); ++i) {
        max_jump = std::max(max_jump, std::abs(curve[i + 1] - curve[i]));
    }
    return max_jump >= jump_fraction * range ? NeuronClass::Discrete : NeuronClass::Continuous;
}

double disentanglement_score(const Eigen::MatrixXd& effect_matrix, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("disentanglement_score: epsilon must be > 0");
    }
    std::int64_t active = 0;
    std::int64_t affected_total = 0;
    for (Eigen::Index i = 0; i < effect_matrix.rows(); ++i) {
        if (effect_matrix.row(i).cwiseAbs().maxCoeff() < epsilon) continue;
        ++active;
        for (Eigen::Index f = 0; f < effect_matrix.cols(); ++f) {
            if (std::abs(effect_matrix(i, f)) >= epsilon) ++affected_total;
        }
    }
    if (active == 0) return 0.0;
    return static_cast<double>(affected_total) / static_cast<double>(active);
}

ProbeReport probe_subject(const ProbeSubject& subject, const ProbeOptions& options,
                          const std::string& model_id, const std::string& dataset_id) {
    options.schedule.validate();
    const std::int64_t n = subject.neuron_count();

    const auto bases = base_estimates(subject);
    std::vector<NeuronProfile> profiles(static_cast<std::size_t>(n));

    auto worker_body = [&](std::int64_t neuron) {
        profiles[static_cast<std::size_t>(neuron)] =
            sweep_with_bases(subject, neuron, options.schedule, bases);
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) worker_body(i);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::int64_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    worker_body(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    ProbeReport report;
    report.model_id = model_id;
    report.target = subject.target_name();
    report.dataset_id = dataset_id;
    report.seed = options.seed;
    report.schedule = options.schedule;
    report.epsilon = options.epsilon;
    report.jump_fraction = options.jump_fraction;
    report.effect_matrix = Eigen::MatrixXd::Zero(n, kFactorCount);

    for (std::int64_t i = 0; i < n; ++i) {
        NeuronProfile& p = profiles[static_cast<std::size_t>(i)];
        for (int f = 0; f < kFactorCount; ++f) {
            report.effect_matrix(i, f) = p.effects.col(f).cwiseAbs().maxCoeff();
            if (report.effect_matrix(i, f) >= options.epsilon) p.affected_factors.push_back(f);
        }
        p.label = classify_neuron(p, options.epsilon, options.jump_fraction);
        switch (p.label) {
            case NeuronClass::Continuous: ++report.counts.continuous; break;
            case NeuronClass::Discrete: ++report.counts.discrete; break;
            case NeuronClass::Redundant: ++report.counts.redundant; break;
        }
    }
    report.profiles = std::move(profiles);
    report.score = disentanglement_score(report.effect_matrix, options.epsilon);
    return report;
}

std::vector<FactorScene> probe_scene_set(const ProbeOptions& options, int hw) {
    return sample_scenes(options.num_scenes, split_seed(options.seed, 7), hw);
}

ProbeReport probe_model(const HostModel& model, const ProbeOptions& options) {
    for (const Parameter& p : model.parameters()) {
        if (!p.tensor.data().isFinite().all()) {
            throw std::invalid_argument("probe_model: model parameter '" + p.name +
                                        "' contains non-finite values");
        }
    }
    auto scenes = probe_scene_set(options, model.config.image_hw);
    HostProbeSubject subject(model, scenes);
    return probe_subject(subject, options, model_checksum(model),
                         dataset_identifier(model.config.image_hw));
}

ProbeReport probe_model(const HostModel& model, std::int64_t num_scenes,
                        const DeltaSchedule& schedule, std::uint64_t seed) {
    ProbeOptions options;
    options.num_scenes = num_scenes;
    options.schedule = schedule;
    options.seed = seed;
    return probe_model(model, options);
}

ComparisonReport compare_models(const ProbeReport& baseline, const ProbeReport& other) {
    if (baseline.dataset_id != other.dataset_id) {
        throw std::invalid_argument("compare_models: reports come from different dataset configs");
    }
    ComparisonReport cmp;
    cmp.model_a = baseline.model_id;
    cmp.model_b = other.model_id;
    cmp.target_a = baseline.target;
    cmp.target_b = other.target;
    cmp.score_a = baseline.score;
    cmp.score_b = other.score;
    cmp.score_difference = other.score - baseline.score;
    cmp.second_model_lower = other.score < baseline.score;
    cmp.counts_a = baseline.counts;
    cmp.counts_b = other.counts;

    for (int f = 0; f < kFactorCount; ++f) {
        FactorBest best;
        best.factor = factor_names()[static_cast<std::size_t>(f)];
        auto fill = [f](const ProbeReport& r, std::int64_t& neuron, double& effect) {
            neuron = -1;
            effect = 0.0;
            for (Eigen::Index i = 0; i < r.effect_matrix.rows(); ++i) {
                if (r.effect_matrix(i, f) > effect) {
                    effect = r.effect_matrix(i, f);
                    neuron = i;
                }
            }
        };
        fill(baseline, best.neuron_a, best.effect_a);
        fill(other, best.neuron_b, best.effect_b);
        cmp.per_factor.push_back(best);
    }
    return cmp;
}

}  // namespace ddf
