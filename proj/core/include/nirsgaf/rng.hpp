// Deterministic random numbers.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard, and every distribution mapping is implemented here rather than
// taken from <random> (standard library distributions are free to differ
// between implementations). Given the same seed, the same sequence of calls
// yields the same values on any conforming platform.
//
//   uniform01  = (engine() >> 11) * 2^-53              (53-bit mantissa)
//   normal     = Marsaglia polar method, pairs cached
//   below(n)   = rejection sampling, unbiased
//   shuffle    = Fisher-Yates, descending index
//
// Sub-streams for independent work units (CV folds, recordings, dropout) come
// from derive(), which mixes a tag into the seed with SplitMix64.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nirsgaf {

uint64_t splitmix64(uint64_t x);

class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

    uint64_t seed() const { return seed_; }
    uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal.
    double normal();

    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent sub-stream; same (seed, tag) always gives the same stream.
    Rng derive(uint64_t tag) const { return Rng(splitmix64(seed_ ^ splitmix64(tag))); }

private:
    uint64_t seed_;
    std::mt19937_64 eng_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace nirsgaf
