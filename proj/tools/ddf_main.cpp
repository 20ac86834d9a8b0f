#include "ddf/common.hpp"
#include "ddf/config.hpp"
#include "ddf/hdc.hpp"
#include "ddf/host.hpp"
#include "ddf/io.hpp"
#include "ddf/probe.hpp"
#include "ddf/report_io.hpp"
#include "ddf/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int threads = 1;
};

ddf::ExperimentConfig load_effective_config(const GlobalArgs& args) {
    if (args.config_path.empty()) {
        throw std::invalid_argument("a config file is required (--config PATH)");
    }
    ddf::ExperimentConfig config = ddf::load_config(args.config_path);
    if (args.seed.has_value()) ddf::override_seeds(config, *args.seed);
    if (args.out_dir.has_value()) config.output_dir = *args.out_dir;
    return config;
}

std::string variant_name(bool with_ddf) { return with_ddf ? "ddf" : "baseline"; }

int run_train(const GlobalArgs& args, const std::string& variant_override,
              const std::string& dump_scenes_dir) {
    ddf::ExperimentConfig config = load_effective_config(args);
    if (variant_override == "baseline") config.with_ddf = false;
    if (variant_override == "ddf") config.with_ddf = true;

    fs::create_directories(config.output_dir);
    const std::string variant = variant_name(config.with_ddf);

    ddf::HostModel model = ddf::build_host(config.host_config());
    const std::string init_checksum = ddf::model_checksum(model);

    ddf::TrainConfig tc;
    tc.num_scenes = config.num_scenes;
    tc.steps = config.steps;
    tc.batch = config.batch;
    tc.lr = config.lr;
    tc.momentum = config.momentum;
    tc.seed = config.training_seed;
    tc.checkpoint_every = config.checkpoint_every;
    const std::string out = config.output_dir;
    if (tc.checkpoint_every > 0) {
        tc.on_checkpoint = [&](std::int64_t step, const ddf::HostModel& m) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s_step%06lld.ckpt", variant.c_str(),
                          static_cast<long long>(step + 1));
            ddf::save_checkpoint(m, (fs::path(out) / name).string());
        };
    }

    if (!dump_scenes_dir.empty()) {
        fs::create_directories(dump_scenes_dir);
        auto pool = ddf::training_scene_pool(tc, config.image_hw);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "scene_%04zu.ppm", i);
            ddf::write_ppm((fs::path(dump_scenes_dir) / name).string(), pool[i].image);
        }
        std::cout << "wrote " << pool.size() << " scenes to " << dump_scenes_dir << "\n";
    }

    const auto started = std::chrono::steady_clock::now();
    ddf::TrainingLog log = ddf::train(model, tc);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      started)
                            .count();

    const std::string ckpt_path = (fs::path(out) / (variant + ".ckpt")).string();
    const std::string csv_path = (fs::path(out) / (variant + "_loss.csv")).string();
    const std::string manifest_path = (fs::path(out) / (variant + "_manifest.json")).string();
    ddf::save_checkpoint(model, ckpt_path);
    ddf::write_loss_csv(csv_path, log);

    // Reconstruction quality on a held-out, seeded evaluation set.
    auto eval_scenes = ddf::sample_scenes(64, ddf::split_seed(config.training_seed, 999),
                                          config.image_hw);
    const double final_eval = ddf::eval_loss(model, ddf::scene_batch(eval_scenes));

    json manifest = {{"schema_version", 1},
                     {"kind", "run_manifest"},
                     {"variant", variant},
                     {"config_hash", config.hash()},
                     {"config_file", args.config_path},
                     {"seeds",
                      {{"model", config.model_seed},
                       {"training", config.training_seed},
                       {"probe", config.probe_seed}}},
                     {"steps", config.steps},
                     {"first_loss", log.steps.front().loss},
                     {"final_loss", log.steps.back().loss},
                     {"final_eval_loss", final_eval},
                     {"wall_seconds", wall},
                     {"initial_checksum", init_checksum},
                     {"final_checksum", log.final_checksum},
                     {"checkpoint", ckpt_path}};
    ddf::write_text_file(manifest_path, manifest.dump(2) + "\n");

    std::cout << "trained " << variant << ": loss " << ddf::format_double(log.steps.front().loss)
              << " -> " << ddf::format_double(log.steps.back().loss) << " in "
              << ddf::format_double(wall) << " s\n";
    std::cout << "checkpoint: " << ckpt_path << "\n";
    std::cout << "loss csv:   " << csv_path << "\n";
    std::cout << "manifest:   " << manifest_path << "\n";
    return ddf::kExitOk;
}

int run_probe(const GlobalArgs& args, const std::string& checkpoint_path, bool strips) {
    ddf::ExperimentConfig config = load_effective_config(args);
    if (checkpoint_path.empty()) {
        throw std::invalid_argument("probe requires --checkpoint PATH");
    }
    ddf::HostModel model = ddf::load_checkpoint(checkpoint_path);

    // The probe interprets results in terms of the configured experiment;
    // a checkpoint from a different geometry is a contract error.
    const ddf::HostConfig expected = config.host_config();
    if (model.config.image_hw != expected.image_hw || model.config.d != expected.d ||
        model.config.hidden != expected.hidden ||
        (model.config.with_ddf && model.config.n != expected.n)) {
        throw std::invalid_argument("probe: checkpoint dimensions (image_hw=" +
                                    std::to_string(model.config.image_hw) + ", d=" +
                                    std::to_string(model.config.d) +
                                    ") do not match the config");
    }

    fs::create_directories(config.output_dir);
    ddf::ProbeOptions options = config.probe_options();
    options.threads = args.threads;

    ddf::ProbeReport report = ddf::probe_model(model, options);
    const json report_json = ddf::probe_report_to_json(report);
    auto violations = ddf::validate_against_schema(report_json, ddf::probe_report_schema());
    if (!violations.empty()) {
        throw std::runtime_error("probe: produced report violates its schema: " +
                                 violations.front());
    }

    const std::string variant = variant_name(model.config.with_ddf);
    const fs::path out(config.output_dir);
    const std::string report_path = (out / (variant + "_probe_report.json")).string();
    const std::string csv_path = (out / (variant + "_effects.csv")).string();
    ddf::write_text_file(report_path, report_json.dump(2) + "\n");
    ddf::write_text_file(csv_path, ddf::effect_matrix_csv(report));

    if (strips) {
        const fs::path strip_dir = out / (variant + "_strips");
        fs::create_directories(strip_dir);
        auto scenes = ddf::probe_scene_set(options, model.config.image_hw);
        ddf::HostProbeSubject subject(model, scenes);
        for (std::int64_t neuron = 0; neuron < subject.neuron_count(); ++neuron) {
            std::vector<ddf::Tensor> columns;
            columns.reserve(report.schedule.size());
            for (double delta : report.schedule.deltas) {
                columns.push_back(subject.reconstruct(0, neuron, delta));
            }
            char name[32];
            std::snprintf(name, sizeof(name), "neuron_%03lld.ppm",
                          static_cast<long long>(neuron));
            ddf::write_ppm((strip_dir / name).string(), ddf::hstack_images(columns));
        }
        std::cout << "strips:     " << strip_dir.string() << " (" << subject.neuron_count()
                  << " files)\n";
    }

    std::cout << "probed " << report.target << " (" << report.profiles.size()
              << " neurons), score " << ddf::format_double(report.score) << "\n";
    std::cout << "report:     " << report_path << "\n";
    std::cout << "effects:    " << csv_path << "\n";
    return ddf::kExitOk;
}

int run_compare(const GlobalArgs& args, const std::string& path_a, const std::string& path_b) {
    json ja, jb;
    try {
        ja = json::parse(ddf::read_text_file(path_a));
        jb = json::parse(ddf::read_text_file(path_b));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("compare: invalid report JSON: ") + e.what());
    }
    ddf::ProbeReport a = ddf::probe_report_from_json(ja);
    ddf::ProbeReport b = ddf::probe_report_from_json(jb);
    ddf::ComparisonReport cmp = ddf::compare_models(a, b);

    const std::string out = args.out_dir.value_or("out");
    fs::create_directories(out);
    const std::string json_path = (fs::path(out) / "comparison.json").string();
    const std::string text_path = (fs::path(out) / "comparison_summary.txt").string();
    ddf::write_text_file(json_path, ddf::comparison_to_json(cmp).dump(2) + "\n");
    const std::string summary = ddf::comparison_summary_text(cmp);
    ddf::write_text_file(text_path, summary);
    std::cout << summary;
    std::cout << "comparison: " << json_path << "\n";
    return ddf::kExitOk;
}

int run_hdc_demo(std::int64_t dim, std::int64_t trials, std::uint64_t seed,
                 const std::string& out_dir) {
    using namespace ddf::hdc;
    if (dim < 2) throw std::invalid_argument("hdc-demo: --dim must be >= 2");
    if (trials < 1) throw std::invalid_argument("hdc-demo: --trials must be >= 1");

    // Pairwise cosine statistics of independent random bipolar vectors.
    double sum = 0.0, sum_sq = 0.0, max_abs = 0.0;
    const int bins = 41;
    const double lo = -0.1, hi = 0.1;
    std::vector<std::int64_t> histogram(bins, 0);
    std::int64_t outliers = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto a = random_bipolar(dim, ddf::split_seed(seed, 2 * t));
        const auto b = random_bipolar(dim, ddf::split_seed(seed, 2 * t + 1));
        const double c = cosine(a, b);
        sum += c;
        sum_sq += c * c;
        max_abs = std::max(max_abs, std::abs(c));
        const int bin = static_cast<int>((c - lo) / (hi - lo) * bins);
        if (bin >= 0 && bin < bins) {
            ++histogram[bin];
        } else {
            ++outliers;
        }
    }
    const double mean = sum / static_cast<double>(trials);
    const double std_dev = std::sqrt(std::max(0.0, sum_sq / trials - mean * mean));

    // Bundle and bind behavior on fresh vectors.
    double bundle_self_sum = 0.0, bundle_other_max = 0.0, bind_max = 0.0;
    bool inverse_exact = true;
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto a = random_bipolar(dim, ddf::split_seed(seed, 1000000 + 3 * t));
        const auto b = random_bipolar(dim, ddf::split_seed(seed, 1000000 + 3 * t + 1));
        const auto c = random_bipolar(dim, ddf::split_seed(seed, 1000000 + 3 * t + 2));
        const auto ab = bundle({a, b});
        bundle_self_sum += cosine(ab, a);
        bundle_other_max = std::max(bundle_other_max, std::abs(cosine(ab, c)));
        const auto bound = bind(a, b);
        bind_max = std::max({bind_max, std::abs(cosine(bound, a)), std::abs(cosine(bound, b))});
        inverse_exact = inverse_exact && (bind(bound, b).values == a.values);
    }

    // Graph capacity: recover every value from a k-pair vector against a
    // 64-entry codebook.
    Codebook codebook;
    for (int i = 0; i < 64; ++i) {
        codebook.add("symbol_" + std::to_string(i),
                     random_bipolar(dim, ddf::split_seed(seed, 2000000 + i)));
    }
    json capacity = json::array();
    const std::int64_t capacity_trials = std::min<std::int64_t>(trials, 200);
    for (int pairs = 1; pairs <= 8; ++pairs) {
        std::int64_t correct = 0, total = 0;
        for (std::int64_t t = 0; t < capacity_trials; ++t) {
            auto engine = ddf::make_engine(ddf::split_seed(seed, 3000000 + pairs * 100000 + t));
            std::vector<std::pair<HyperVector, HyperVector>> kv;
            std::vector<std::size_t> labels;
            for (int p = 0; p < pairs; ++p) {
                const auto key = random_bipolar(
                    dim, ddf::split_seed(seed, 4000000 + pairs * 100000 + t * 10 + p));
                const std::size_t pick = engine() % codebook.size();
                labels.push_back(pick);
                kv.emplace_back(key, codebook.vector(pick));
            }
            const auto graph = encode_pairs(kv);
            for (int p = 0; p < pairs; ++p) {
                const auto decoded = decode_value(graph, kv[p].first, codebook, 0.15);
                ++total;
                if (decoded.has_value() && *decoded == codebook.label(labels[p])) ++correct;
            }
        }
        capacity.push_back({{"pairs", pairs},
                            {"accuracy", static_cast<double>(correct) / total},
                            {"trials", capacity_trials}});
    }

    json stats = {{"schema_version", 1},
                  {"kind", "hdc_demo"},
                  {"dim", dim},
                  {"trials", trials},
                  {"seed", seed},
                  {"cosine",
                   {{"mean", mean},
                    {"std", std_dev},
                    {"max_abs", max_abs},
                    {"expected_std", 1.0 / std::sqrt(static_cast<double>(dim))}}},
                  {"histogram",
                   {{"low", lo}, {"high", hi}, {"bins", bins}, {"counts", histogram},
                    {"outliers", outliers}}},
                  {"bundle",
                   {{"cos_sum_with_summand_mean", bundle_self_sum / trials},
                    {"cos_sum_with_fresh_max_abs", bundle_other_max}}},
                  {"bind",
                   {{"cos_bound_with_input_max_abs", bind_max},
                    {"inverse_exact", inverse_exact}}},
                  {"capacity", capacity}};

    fs::create_directories(out_dir);
    const std::string stats_path = (fs::path(out_dir) / "hdc_demo.json").string();
    ddf::write_text_file(stats_path, stats.dump(2) + "\n");

    std::cout << "d = " << dim << ", " << trials << " trials\n";
    std::cout << "pairwise cosine: mean " << ddf::format_double(mean) << ", std "
              << ddf::format_double(std_dev) << " (1/sqrt(d) = "
              << ddf::format_double(1.0 / std::sqrt(static_cast<double>(dim))) << "), max |cos| "
              << ddf::format_double(max_abs) << "\n";
    std::cout << "bundle: cos(A+B, A) mean " << ddf::format_double(bundle_self_sum / trials)
              << ", max |cos(A+B, C)| " << ddf::format_double(bundle_other_max) << "\n";
    std::cout << "bind: max |cos(A*B, A or B)| " << ddf::format_double(bind_max)
              << ", exact inverse: " << (inverse_exact ? "true" : "false") << "\n";
    std::cout << "capacity (threshold 0.15, 64 symbols):";
    for (const auto& row : capacity) {
        std::cout << "  " << row.at("pairs").get<int>() << ":"
                  << ddf::format_double(row.at("accuracy").get<double>());
    }
    std::cout << "\nstats: " << stats_path << "\n";
    return ddf::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable disentanglement filter playground: train a synthetic-scene "
                 "host with or without the frozen filter, probe neurons, compare variants."};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    app.add_option("--config", args.config_path, "experiment config file (INI or JSON)");
    app.add_option("--seed", args.seed, "master seed overriding all config seeds");
    app.add_option("--out", args.out_dir, "output directory override");
    app.add_option("--threads", args.threads, "worker threads for the probe stage")
        ->check(CLI::PositiveNumber);

    auto* train_cmd = app.add_subcommand("train", "train one variant and write a checkpoint");
    std::string variant_override;
    train_cmd->add_option("--variant", variant_override, "force baseline or ddf")
        ->check(CLI::IsMember({"baseline", "ddf"}));
    std::string dump_scenes_dir;
    train_cmd->add_option("--dump-scenes", dump_scenes_dir,
                          "also write the training scenes as PPM files");

    auto* probe_cmd = app.add_subcommand("probe", "run the neuron perturbation probe");
    std::string checkpoint_path;
    probe_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint to probe")->required();
    bool no_strips = false;
    probe_cmd->add_flag("--no-strips", no_strips, "skip per-neuron image strips");

    auto* compare_cmd = app.add_subcommand("compare", "compare two probe reports");
    std::string report_a, report_b;
    compare_cmd->add_option("report_a", report_a, "first probe report JSON")->required();
    compare_cmd->add_option("report_b", report_b, "second probe report JSON")->required();

    auto* hdc_cmd = app.add_subcommand("hdc-demo", "hypervector algebra statistics");
    std::int64_t dim = 10000;
    std::int64_t trials = 1000;
    hdc_cmd->add_option("--dim", dim, "hypervector dimension");
    hdc_cmd->add_option("--trials", trials, "Monte Carlo trials");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ddf::kExitContract;
    }

    try {
        if (*train_cmd) return run_train(args, variant_override, dump_scenes_dir);
        if (*probe_cmd) return run_probe(args, checkpoint_path, !no_strips);
        if (*compare_cmd) return run_compare(args, report_a, report_b);
        if (*hdc_cmd) {
            return run_hdc_demo(dim, trials, args.seed.value_or(42),
                                args.out_dir.value_or("out"));
        }
    } catch (const ddf::DivergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return ddf::kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ddf::kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return ddf::kExitOk;
}
