#pragma once

#include "ddf/tensor.hpp"

#include <cstdint>
#include <string>

namespace ddf {

// A frozen-random linear -> ReLU -> linear bottleneck with equal input and
// output width d and n hidden rectifier units. The weights are drawn once
// from the seed, marked frozen, and never change: the block behaves as a
// fixed, differentiable nonlinearity that any host network can be trained
// through.
struct DdfLayer {
    std::int64_t d = 0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    double bias_low = 0.0;
    double bias_high = 0.0;
    Parameter w1;  // [n x d], frozen
    Parameter b1;  // [n], frozen, strictly negative entries
    Parameter w2;  // [d x n], frozen
};

// Draws w1 and w2 from Kaiming-normal distributions (std = sqrt(2/fan_in))
// and b1 uniformly from [bias_low, bias_high] with bias_low < bias_high < 0.
// Rows of w1/w2 with length >= 16 are redrawn until their positive-entry
// fraction lies in [0.3, 0.7], so the bipolar balance holds for every seed.
DdfLayer ddf_init(std::int64_t d, std::int64_t n, std::uint64_t seed, double bias_low = -0.10,
                  double bias_high = -0.01);

// relu(x . w1^T + b1) . w2^T for x of shape [batch x d].
Tensor ddf_forward(const DdfLayer& layer, const Tensor& x);

// The post-ReLU hidden activation relu(x . w1^T + b1), shape [batch x n].
Tensor ddf_hidden(const DdfLayer& layer, const Tensor& x);

// Forward pass with one hidden neuron offset by delta after the ReLU and
// without re-clamping, so negative perturbed activations pass through to
// the output layer. x must be a single row [1 x d].
Tensor ddf_forward_with_override(const DdfLayer& layer, const Tensor& x, std::int64_t neuron,
                                 double delta);

// SHA-256 over (w1, b1, w2); constant across the layer's lifetime.
std::string ddf_weight_hash(const DdfLayer& layer);

}  // namespace ddf
