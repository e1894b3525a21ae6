#include "biomark/rng.hpp"

#include <cmath>
#include <numbers>

#include "biomark/errors.hpp"

namespace biomark {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

double SeededRng::gauss(double mean, double sd) {
    if (sd < 0.0) throw DataError("gauss: negative sd");
    double z;
    if (has_cached_) {
        z = cached_;
        has_cached_ = false;
    } else {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53; // guard log(0)
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        z = r * std::cos(theta);
        cached_ = r * std::sin(theta);
        has_cached_ = true;
    }
    return mean + sd * z;
}

} // namespace biomark
