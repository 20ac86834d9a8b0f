#include "ddf/filter.hpp"

#include "ddf/rng.hpp"
#include "ddf/sha256.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ddf {

namespace {

// Kaiming-normal matrix [rows x cols] with per-row bipolar-balance
// rejection for rows of length >= 16.
Array kaiming_balanced(std::int64_t rows, std::int64_t cols, std::mt19937_64& engine) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
    std::normal_distribution<double> normal(0.0, stddev);
    Array out(rows * cols);
    const bool check_balance = cols >= 16;
    for (std::int64_t r = 0; r < rows; ++r) {
        for (int attempt = 0;; ++attempt) {
            std::int64_t positive = 0;
            for (std::int64_t c = 0; c < cols; ++c) {
                const double v = normal(engine);
                out[r * cols + c] = v;
                if (v > 0.0) ++positive;
            }
            if (!check_balance) break;
            const double fraction = static_cast<double>(positive) / static_cast<double>(cols);
            if (fraction >= 0.3 && fraction <= 0.7) break;
            if (attempt > 10000) {
                throw std::runtime_error("ddf_init: could not balance a weight row");
            }
        }
    }
    return out;
}

void check_input_width(const DdfLayer& layer, const Tensor& x, const char* op) {
    if (x.rank() != 2 || x.dim(1) != layer.d) {
        throw std::invalid_argument(std::string(op) + ": expected input of shape [batch x " +
                                    std::to_string(layer.d) + "], got " +
                                    shape_to_string(x.shape()));
    }
}

}  // namespace

DdfLayer ddf_init(std::int64_t d, std::int64_t n, std::uint64_t seed, double bias_low,
                  double bias_high) {
    if (d < 1 || n < 1) throw std::invalid_argument("ddf_init: d and n must be >= 1");
    if (!(bias_low < bias_high) || !(bias_high < 0.0)) {
        throw std::invalid_argument("ddf_init: bias bounds must satisfy low < high < 0");
    }

    auto w1_engine = make_engine(split_seed(seed, 0));
    auto b1_engine = make_engine(split_seed(seed, 1));
    auto w2_engine = make_engine(split_seed(seed, 2));

    DdfLayer layer;
    layer.d = d;
    layer.n = n;
    layer.seed = seed;
    layer.bias_low = bias_low;
    layer.bias_high = bias_high;

    layer.w1 = Parameter{
        Tensor::from_array({n, d}, kaiming_balanced(n, d, w1_engine), /*requires_grad=*/true),
        /*frozen=*/true, "ddf.w1"};
    layer.w2 = Parameter{
        Tensor::from_array({d, n}, kaiming_balanced(d, n, w2_engine), /*requires_grad=*/true),
        /*frozen=*/true, "ddf.w2"};

    std::uniform_real_distribution<double> bias(bias_low, bias_high);
    Array b(n);
    for (std::int64_t i = 0; i < n; ++i) b[i] = bias(b1_engine);
    layer.b1 = Parameter{Tensor::from_array({n}, std::move(b), /*requires_grad=*/true),
                         /*frozen=*/true, "ddf.b1"};
    return layer;
}

Tensor ddf_forward(const DdfLayer& layer, const Tensor& x) {
    check_input_width(layer, x, "ddf_forward");
    Tensor hidden = relu(add(matmul(x, layer.w1.tensor, /*transpose_b=*/true), layer.b1.tensor));
    return matmul(hidden, layer.w2.tensor, /*transpose_b=*/true);
}

Tensor ddf_hidden(const DdfLayer& layer, const Tensor& x) {
    check_input_width(layer, x, "ddf_hidden");
    return relu(add(matmul(x, layer.w1.tensor, /*transpose_b=*/true), layer.b1.tensor));
}

Tensor ddf_forward_with_override(const DdfLayer& layer, const Tensor& x, std::int64_t neuron,
                                 double delta) {
    check_input_width(layer, x, "ddf_forward_with_override");
    if (x.dim(0) != 1) {
        throw std::invalid_argument("ddf_forward_with_override: expected a single row, got " +
                                    shape_to_string(x.shape()));
    }
    if (neuron < 0 || neuron >= layer.n) {
        throw std::invalid_argument("ddf_forward_with_override: neuron index " +
                                    std::to_string(neuron) + " out of range [0, " +
                                    std::to_string(layer.n) + ")");
    }
    Tensor hidden = ddf_hidden(layer, x);
    Tensor offset = Tensor::zeros({1, layer.n});
    offset.data()[neuron] = delta;
    Tensor perturbed = add(hidden, offset);
    return matmul(perturbed, layer.w2.tensor, /*transpose_b=*/true);
}

std::string ddf_weight_hash(const DdfLayer& layer) {
    Sha256 h;
    h.update(layer.w1.tensor.data().data(), static_cast<std::size_t>(layer.w1.tensor.numel()));
    h.update(layer.b1.tensor.data().data(), static_cast<std::size_t>(layer.b1.tensor.numel()));
    h.update(layer.w2.tensor.data().data(), static_cast<std::size_t>(layer.w2.tensor.numel()));
    return h.hex_digest();
}

}  // namespace ddf
