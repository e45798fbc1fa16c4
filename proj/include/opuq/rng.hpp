#pragma once

#include <cstdint>
#include <vector>

namespace opuq {

/// xoshiro256** seeded through SplitMix64. Substreams are derived from the
/// root seed and a stream tag, so parallel workers stay reproducible no
/// matter the execution order.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer on [0, n).
    std::uint64_t uniform_index(std::uint64_t n);
    /// Standard normal via Box-Muller (one spare cached).
    double normal();

    /// Independent generator for stream `tag` under the same root seed.
    Rng split(std::uint64_t tag) const;

    std::uint64_t root_seed() const { return root_seed_; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::uint64_t i = v.size(); i > 1; --i) {
            std::uint64_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    Rng() = default;
    std::uint64_t root_seed_ = 0;
    std::uint64_t s_[4] = {0, 0, 0, 0};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace opuq
