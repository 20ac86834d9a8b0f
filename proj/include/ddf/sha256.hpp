#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ddf {

// Incremental SHA-256 (OpenSSL EVP underneath). Used for parameter
// checksums, golden-image hashes and config hashes.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    // Raw little-endian bytes of the doubles.
    void update(const double* values, std::size_t count) {
        update(static_cast<const void*>(values), count * sizeof(double));
    }

    // Finalizes and returns lowercase hex. The object must not be reused.
    std::string hex_digest();

private:
    void* ctx_;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace ddf
