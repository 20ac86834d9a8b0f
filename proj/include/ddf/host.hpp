#pragma once

#include "ddf/filter.hpp"
#include "ddf/scene.hpp"
#include "ddf/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ddf {

struct HostConfig {
    int image_hw = 32;
    std::int64_t d = 32;       // representation width
    std::int64_t hidden = 256; // encoder/decoder hidden width
    bool with_ddf = false;
    std::int64_t n = 32;       // DDF hidden width
    double bias_low = -0.10;
    double bias_high = -0.01;
    std::uint64_t seed = 0;
};

struct Dense {
    Parameter w;  // [out x in]
    Parameter b;  // [out]
};

Dense make_dense(std::int64_t in, std::int64_t out, std::uint64_t seed, const std::string& name);
Tensor dense_forward(const Dense& layer, const Tensor& x);

// Image autoencoder with an optional DDF between the representation and
// the decoder. Encoder and decoder are seeded independently of with_ddf,
// so the two variants share identical trainable initializations.
struct HostModel {
    HostConfig config;
    Dense enc1, enc2, enc3;
    std::optional<DdfLayer> filter;
    Dense dec1, dec2, dec3;

    std::int64_t input_width() const {
        return 3ll * config.image_hw * config.image_hw;
    }

    Tensor encode(const Tensor& images) const;         // [B x 3hw^2] -> [B x d]
    Tensor decode(const Tensor& representation) const; // [B x d] -> [B x 3hw^2]
    Tensor forward(const Tensor& images) const;

    // Handles to every parameter (frozen DDF ones included); copies alias
    // the underlying tensors.
    std::vector<Parameter> parameters() const;
};

HostModel build_host(const HostConfig& config);
// Convenience overload; remaining fields take their defaults.
HostModel build_host(std::int64_t d, bool with_ddf, std::int64_t n, std::uint64_t seed);

struct TrainConfig {
    std::int64_t num_scenes = 512;
    std::int64_t steps = 5000;
    std::int64_t batch = 8;
    double lr = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 0;  // 0: never
    std::function<void(std::int64_t step, const HostModel&)> on_checkpoint;
};

struct TrainingLog {
    struct Step {
        std::int64_t step;
        double loss;
        double seconds;  // wall clock since training start
    };
    std::vector<Step> steps;
    std::string final_checksum;
    std::uint64_t seed = 0;
};

// Minimizes mean-squared reconstruction error over scenes sampled on the
// fly from the seed. Throws DivergenceError when the loss stops being
// finite, carrying the last finite step.
TrainingLog train(HostModel& model, const TrainConfig& config);

// Row-major matrix of flattened rendered scenes, one per row.
Tensor scene_batch(const std::vector<FactorScene>& scenes);
std::vector<FactorScene> sample_scenes(std::int64_t count, std::uint64_t seed, int hw);

// The exact scene pool a training run with this config will draw from.
std::vector<FactorScene> training_scene_pool(const TrainConfig& config, int hw);

// Reconstruction MSE over the given images without recording a tape.
double eval_loss(const HostModel& model, const Tensor& images);

// SHA-256 over every parameter tensor in declaration order.
std::string model_checksum(const HostModel& model);

// Self-describing checkpoint: magic, JSON header (config + parameter
// manifest + frozen flags), then raw little-endian doubles.
void save_checkpoint(const HostModel& model, const std::string& path);
HostModel load_checkpoint(const std::string& path);

}  // namespace ddf
