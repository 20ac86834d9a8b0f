#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ddf::hdc {

enum class VectorKind { Bipolar, Real };

// High-dimensional vector. Bipolar vectors have every entry in {-1, +1};
// bundling produces real-valued sums which are kept unnormalized.
struct HyperVector {
    Eigen::VectorXd values;
    VectorKind kind = VectorKind::Real;

    std::int64_t dim() const { return values.size(); }
};

// Labeled reference vectors for cleaning up noisy decodes.
class Codebook {
public:
    void add(std::string label, HyperVector vector);

    std::size_t size() const { return entries_.size(); }
    const std::string& label(std::size_t i) const { return entries_[i].first; }
    const HyperVector& vector(std::size_t i) const { return entries_[i].second; }

private:
    std::vector<std::pair<std::string, HyperVector>> entries_;
};

// Seeded random vector with i.i.d. +/-1 entries. Same (d, seed) gives the
// identical vector.
HyperVector random_bipolar(std::int64_t d, std::uint64_t seed);

// Normalized dot product in [-1, 1]. Rejects dimension mismatches and
// zero vectors.
double cosine(const HyperVector& a, const HyperVector& b);

// Elementwise sum; correlates with every summand.
HyperVector bundle(const std::vector<HyperVector>& vs);

// Elementwise (Hadamard) product; near-orthogonal to both inputs for
// random bipolar vectors, and self-inverse in the bipolar case.
HyperVector bind(const HyperVector& a, const HyperVector& b);

// Bundle of bind(key_i, value_i): a whole set of key-value pairs (the
// edges of a graph) held in one vector.
HyperVector encode_pairs(const std::vector<std::pair<HyperVector, HyperVector>>& pairs);

// Unbinds `key` from `g` and looks the result up in the codebook; returns
// the best label if its cosine reaches the threshold. Ties break toward
// the lowest codebook index.
std::optional<std::string> decode_value(const HyperVector& g, const HyperVector& key,
                                        const Codebook& codebook, double threshold);

}  // namespace ddf::hdc
