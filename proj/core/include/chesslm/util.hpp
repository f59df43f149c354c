#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chesslm {

// Parse or validation failure in user-supplied text (FEN, PGN, SAN, config).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A move that is not legal in the position it was applied to.
struct IllegalMoveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Failure talking to an external engine process.
struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite loss/gradient, shape mismatch).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic 64-bit RNG. std::mt19937_64 outputs are pinned by the
// standard, so sequences are identical across platforms; the helpers below
// avoid implementation-defined std distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed)) {}

    uint64_t next_u64();
    // Uniform in [0, 1) with 53-bit resolution.
    double uniform();
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n);
    // Standard normal via Box-Muller (no cached spare, two draws per call).
    double gauss();
    // Derive an independent stream for a named sub-purpose.
    Rng fork(uint64_t tag) const;

    static uint64_t splitmix(uint64_t x);

private:
    uint64_t state_;
};

// FNV-1a over a byte string, used for content-addressing vocab/dataset files.
uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);
bool starts_with(std::string_view text, std::string_view prefix);

std::string format_double(double v);

}  // namespace chesslm
