#include "ddf/host.hpp"

#include "ddf/common.hpp"
#include "ddf/rng.hpp"
#include "ddf/sha256.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ddf {

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'D', 'D', 'F', 'C', 'K', 'P', 'T', '1'};

// Stream ids for seed derivation. Encoder/decoder streams are shared by
// both variants; the DDF has its own so inserting it changes nothing else.
enum SeedStream : std::uint64_t {
    kEnc1 = 11,
    kEnc2 = 12,
    kEnc3 = 13,
    kDec1 = 21,
    kDec2 = 22,
    kDec3 = 23,
    kFilter = 31,
    kScenePool = 41,
    kBatchDraw = 42,
};

}  // namespace

Dense make_dense(std::int64_t in, std::int64_t out, std::uint64_t seed,
                 const std::string& name) {
    auto engine = make_engine(seed);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    std::normal_distribution<double> normal(0.0, stddev);
    Array w(out * in);
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = normal(engine);
    Dense layer;
    layer.w = Parameter{Tensor::from_array({out, in}, std::move(w), /*requires_grad=*/true),
                        /*frozen=*/false, name + ".w"};
    layer.b = Parameter{Tensor::zeros({out}, /*requires_grad=*/true), /*frozen=*/false,
                        name + ".b"};
    return layer;
}

Tensor dense_forward(const Dense& layer, const Tensor& x) {
    return add(matmul(x, layer.w.tensor, /*transpose_b=*/true), layer.b.tensor);
}

Tensor HostModel::encode(const Tensor& images) const {
    Tensor h = relu(dense_forward(enc1, images));
    h = relu(dense_forward(enc2, h));
    return dense_forward(enc3, h);
}

Tensor HostModel::decode(const Tensor& representation) const {
    Tensor h = relu(dense_forward(dec1, representation));
    h = relu(dense_forward(dec2, h));
    return sigmoid(dense_forward(dec3, h));
}

Tensor HostModel::forward(const Tensor& images) const {
    Tensor rep = encode(images);
    if (filter.has_value()) rep = ddf_forward(*filter, rep);
    return decode(rep);
}

std::vector<Parameter> HostModel::parameters() const {
    std::vector<Parameter> out = {enc1.w, enc1.b, enc2.w, enc2.b, enc3.w, enc3.b};
    if (filter.has_value()) {
        out.push_back(filter->w1);
        out.push_back(filter->b1);
        out.push_back(filter->w2);
    }
    out.insert(out.end(), {dec1.w, dec1.b, dec2.w, dec2.b, dec3.w, dec3.b});
    return out;
}

HostModel build_host(const HostConfig& config) {
    if (config.d < 1 || config.hidden < 1 || config.n < 1) {
        throw std::invalid_argument("build_host: widths must be >= 1");
    }
    HostModel m;
    m.config = config;
    const std::int64_t in = m.input_width();
    m.enc1 = make_dense(in, config.hidden, split_seed(config.seed, kEnc1), "enc1");
    m.enc2 = make_dense(config.hidden, config.hidden, split_seed(config.seed, kEnc2), "enc2");
    m.enc3 = make_dense(config.hidden, config.d, split_seed(config.seed, kEnc3), "enc3");
    if (config.with_ddf) {
        m.filter = ddf_init(config.d, config.n, split_seed(config.seed, kFilter),
                            config.bias_low, config.bias_high);
    }
    m.dec1 = make_dense(config.d, config.hidden, split_seed(config.seed, kDec1), "dec1");
    m.dec2 = make_dense(config.hidden, config.hidden, split_seed(config.seed, kDec2), "dec2");
    m.dec3 = make_dense(config.hidden, in, split_seed(config.seed, kDec3), "dec3");
    return m;
}

HostModel build_host(std::int64_t d, bool with_ddf, std::int64_t n, std::uint64_t seed) {
    HostConfig config;
    config.d = d;
    config.with_ddf = with_ddf;
    config.n = n;
    config.seed = seed;
    return build_host(config);
}

std::vector<FactorScene> sample_scenes(std::int64_t count, std::uint64_t seed, int hw) {
    std::vector<FactorScene> scenes;
    scenes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        scenes.push_back(sample_scene(split_seed(seed, 1000 + static_cast<std::uint64_t>(i)), hw));
    }
    return scenes;
}

Tensor scene_batch(const std::vector<FactorScene>& scenes) {
    if (scenes.empty()) throw std::invalid_argument("scene_batch: empty scene list");
    const std::int64_t width = scenes.front().image.numel();
    Array data(static_cast<std::int64_t>(scenes.size()) * width);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].image.numel() != width) {
            throw std::invalid_argument("scene_batch: inconsistent image sizes");
        }
        data.segment(static_cast<std::int64_t>(i) * width, width) = scenes[i].image.data();
    }
    return Tensor::from_array({static_cast<std::int64_t>(scenes.size()), width},
                              std::move(data));
}

double eval_loss(const HostModel& model, const Tensor& images) {
    NoGradGuard guard;
    Tensor recon = model.forward(images);
    return mse(recon, images).item();
}

std::vector<FactorScene> training_scene_pool(const TrainConfig& config, int hw) {
    return sample_scenes(config.num_scenes, split_seed(config.seed, kScenePool), hw);
}

TrainingLog train(HostModel& model, const TrainConfig& config) {
    if (config.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    if (config.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (config.num_scenes < 1) throw std::invalid_argument("train: num_scenes must be >= 1");

    const int hw = model.config.image_hw;
    const std::int64_t width = model.input_width();

    // Fixed scene pool, rendered once and sampled by index each step.
    std::vector<FactorScene> pool = training_scene_pool(config, hw);
    Array pool_data(config.num_scenes * width);
    for (std::int64_t i = 0; i < config.num_scenes; ++i) {
        pool_data.segment(i * width, width) = pool[static_cast<std::size_t>(i)].image.data();
    }

    auto params = model.parameters();
    SgdOptimizer optimizer(config.lr, config.momentum);
    auto index_engine = make_engine(split_seed(config.seed, kBatchDraw));

    TrainingLog log;
    log.seed = config.seed;
    log.steps.reserve(static_cast<std::size_t>(config.steps));
    const auto start = std::chrono::steady_clock::now();
    std::int64_t last_finite = -1;

    for (std::int64_t step = 0; step < config.steps; ++step) {
        Array batch_data(config.batch * width);
        for (std::int64_t b = 0; b < config.batch; ++b) {
            const std::int64_t idx =
                static_cast<std::int64_t>(index_engine() % static_cast<std::uint64_t>(
                                              config.num_scenes));
            batch_data.segment(b * width, width) = pool_data.segment(idx * width, width);
        }
        Tensor batch = Tensor::from_array({config.batch, width}, std::move(batch_data));

        Tensor recon = model.forward(batch);
        Tensor loss = mse(recon, batch);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw DivergenceError("train: non-finite loss at step " + std::to_string(step) +
                                      " (last finite step " + std::to_string(last_finite) + ")",
                                  last_finite);
        }
        last_finite = step;

        backward(loss);
        optimizer.step(params);

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.steps.push_back({step, loss_value, seconds});

        if (config.checkpoint_every > 0 && config.on_checkpoint &&
            (step + 1) % config.checkpoint_every == 0) {
            config.on_checkpoint(step, model);
        }
    }

    log.final_checksum = model_checksum(model);
    return log;
}

std::string model_checksum(const HostModel& model) {
    Sha256 h;
    for (const Parameter& p : model.parameters()) {
        h.update(p.name);
        h.update(p.tensor.data().data(), static_cast<std::size_t>(p.tensor.numel()));
    }
    return h.hex_digest();
}

void save_checkpoint(const HostModel& model, const std::string& path) {
    json header;
    header["schema_version"] = 1;
    header["config"] = {{"image_hw", model.config.image_hw},
                        {"d", model.config.d},
                        {"hidden", model.config.hidden},
                        {"with_ddf", model.config.with_ddf},
                        {"n", model.config.n},
                        {"bias_low", model.config.bias_low},
                        {"bias_high", model.config.bias_high},
                        {"seed", model.config.seed}};

    auto params = model.parameters();
    std::int64_t offset = 0;
    json manifest = json::array();
    for (const Parameter& p : params) {
        manifest.push_back({{"name", p.name},
                            {"shape", p.tensor.shape()},
                            {"frozen", p.frozen},
                            {"offset", offset},
                            {"count", p.tensor.numel()}});
        offset += p.tensor.numel();
    }
    header["params"] = manifest;

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("save_checkpoint: cannot open '" + path + "'");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const Parameter& p : params) {
        out.write(reinterpret_cast<const char*>(p.tensor.data().data()),
                  static_cast<std::streamsize>(p.tensor.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

HostModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("load_checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::invalid_argument("load_checkpoint: '" + path + "' is not a checkpoint file");
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::invalid_argument("load_checkpoint: truncated header in '" + path + "'");

    json header = json::parse(header_text);
    if (header.at("schema_version").get<int>() != 1) {
        throw std::invalid_argument("load_checkpoint: unsupported schema_version");
    }
    const json& jc = header.at("config");
    HostConfig config;
    config.image_hw = jc.at("image_hw").get<int>();
    config.d = jc.at("d").get<std::int64_t>();
    config.hidden = jc.at("hidden").get<std::int64_t>();
    config.with_ddf = jc.at("with_ddf").get<bool>();
    config.n = jc.at("n").get<std::int64_t>();
    config.bias_low = jc.at("bias_low").get<double>();
    config.bias_high = jc.at("bias_high").get<double>();
    config.seed = jc.at("seed").get<std::uint64_t>();

    HostModel model = build_host(config);
    auto params = model.parameters();
    const json& manifest = header.at("params");
    if (manifest.size() != params.size()) {
        throw std::invalid_argument("load_checkpoint: parameter count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& entry = manifest[i];
        if (entry.at("name").get<std::string>() != params[i].name ||
            entry.at("shape").get<std::vector<std::int64_t>>() != params[i].tensor.shape() ||
            entry.at("frozen").get<bool>() != params[i].frozen) {
            throw std::invalid_argument("load_checkpoint: manifest mismatch for parameter '" +
                                        params[i].name + "'");
        }
        in.read(reinterpret_cast<char*>(params[i].tensor.data().data()),
                static_cast<std::streamsize>(params[i].tensor.numel() * sizeof(double)));
    }
    if (!in) throw std::invalid_argument("load_checkpoint: truncated data in '" + path + "'");
    return model;
}

}  // namespace ddf
