#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace illusion {

// Stable seed for a pipeline stage: hash of (seed, stage label, ordinal).
// Adding a new stage label never changes the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t ordinal = 0);

std::uint64_t fnv1a64(std::string_view bytes);

// Portable random draws. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so the mapping lives here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1).
    double uniform();
    // Uniform on {0, ..., n-1}; n must be positive.
    std::size_t index(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace illusion
