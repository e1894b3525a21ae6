#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace biomark {

std::uint64_t fnv1a64(std::string_view s);

/// Deterministic random stream. The same seed always yields the same
/// sequence, on every platform. Substreams derived by split() are
/// independent of draw order on the parent, so module-level consumers can
/// each take their own stream.
///
/// Instances are single-owner; parallel callers must split, never share.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    /// Independent substream keyed by label: new seed = hash(label) XOR seed.
    SeededRng split(std::string_view label) const {
        return SeededRng(fnv1a64(label) ^ seed_);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * bound) >> 64);
    }

    /// N(mean, sd^2) via Box-Muller with a cached second deviate.
    /// sd = 0 returns mean exactly; negative sd throws.
    double gauss(double mean, double sd);

    /// Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

} // namespace biomark
