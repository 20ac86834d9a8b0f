#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ddf {

// Thrown when training produces a non-finite loss. Carries the last step
// whose loss was still finite so callers can report how far the run got.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::int64_t last_finite_step)
        : std::runtime_error(what), last_finite_step_(last_finite_step) {}

    std::int64_t last_finite_step() const { return last_finite_step_; }

private:
    std::int64_t last_finite_step_;
};

// Contract violations (bad shapes, bad indices, bad config values) are
// reported as std::invalid_argument throughout; the CLI maps them to exit
// code 2 and DivergenceError to exit code 3.
inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 2;
inline constexpr int kExitNumerical = 3;

}  // namespace ddf
