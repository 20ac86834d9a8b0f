#include "ddf/hdc.hpp"

#include "ddf/rng.hpp"

#include <stdexcept>

namespace ddf::hdc {

namespace {

void check_same_dim(const HyperVector& a, const HyperVector& b, const char* op) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument(std::string(op) + ": dimension mismatch, " +
                                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
}

}  // namespace

void Codebook::add(std::string label, HyperVector vector) {
    for (const auto& [existing, _] : entries_) {
        if (existing == label) {
            throw std::invalid_argument("codebook: duplicate label '" + label + "'");
        }
    }
    if (!entries_.empty() && entries_.front().second.dim() != vector.dim()) {
        throw std::invalid_argument("codebook: dimension mismatch for label '" + label + "'");
    }
    entries_.emplace_back(std::move(label), std::move(vector));
}

HyperVector random_bipolar(std::int64_t d, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("random_bipolar: dimension must be >= 1");
    auto engine = make_engine(seed);
    HyperVector v{Eigen::VectorXd(d), VectorKind::Bipolar};
    for (std::int64_t i = 0; i < d; ++i) {
        v.values[i] = (engine() & 1) ? 1.0 : -1.0;
    }
    return v;
}

double cosine(const HyperVector& a, const HyperVector& b) {
    check_same_dim(a, b, "cosine");
    const double na = a.values.norm();
    const double nb = b.values.norm();
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
    return a.values.dot(b.values) / (na * nb);
}

HyperVector bundle(const std::vector<HyperVector>& vs) {
    if (vs.empty()) throw std::invalid_argument("bundle: empty list");
    HyperVector out{vs.front().values, VectorKind::Real};
    for (std::size_t i = 1; i < vs.size(); ++i) {
        check_same_dim(vs.front(), vs[i], "bundle");
        out.values += vs[i].values;
    }
    return out;
}

HyperVector bind(const HyperVector& a, const HyperVector& b) {
    check_same_dim(a, b, "bind");
    VectorKind kind = (a.kind == VectorKind::Bipolar && b.kind == VectorKind::Bipolar)
                          ? VectorKind::Bipolar
                          : VectorKind::Real;
    return HyperVector{a.values.cwiseProduct(b.values), kind};
}

HyperVector encode_pairs(const std::vector<std::pair<HyperVector, HyperVector>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("encode_pairs: empty list");
    std::vector<HyperVector> bound;
    bound.reserve(pairs.size());
    for (const auto& [key, value] : pairs) {
        if (key.kind != VectorKind::Bipolar || value.kind != VectorKind::Bipolar) {
            throw std::invalid_argument("encode_pairs: keys and values must be bipolar");
        }
        bound.push_back(bind(key, value));
    }
    return bundle(bound);
}

std::optional<std::string> decode_value(const HyperVector& g, const HyperVector& key,
                                        const Codebook& codebook, double threshold) {
    check_same_dim(g, key, "decode_value");
    if (codebook.size() == 0) throw std::invalid_argument("decode_value: empty codebook");

    const HyperVector untangled = bind(g, key);
    double best = 0.0;
    std::size_t best_index = 0;
    bool have_best = false;
    for (std::size_t i = 0; i < codebook.size(); ++i) {
        const double c = cosine(untangled, codebook.vector(i));
        if (!have_best || c > best) {
            best = c;
            best_index = i;
            have_best = true;
        }
    }
    if (best >= threshold) return codebook.label(best_index);
    return std::nullopt;
}

}  // namespace ddf::hdc
