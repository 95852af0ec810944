#include "fbmvar/rng.hpp"

#include <cmath>

namespace fbmvar {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kDeriveSalt = 0xD1B54A32D192ED03ULL;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

} // namespace

std::uint64_t RandomStream::word_at(std::uint64_t i) const {
    return mix64(key_ + (i + 1) * kGolden);
}

double RandomStream::to_uniform(std::uint64_t word) {
    // Centers of 2^52 equal bins: every value is exact and the extremes
    // 2^-53 and 1 - 2^-53 stay strictly inside (0,1). A 53-bit variant
    // would round its top value to exactly 1.0.
    return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t derive_key(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master + kGolden) + (index + 1) * kDeriveSalt);
}

double normal_icdf(double p) {
    // Wichura, Algorithm AS 241, PPND16.
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r +
                    4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r +
                  1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r +
                3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r +
                    2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r +
                  6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r +
                1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    if (r <= 0.0) {
        return (q < 0.0) ? -HUGE_VAL : HUGE_VAL;
    }
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r +
                 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r +
               5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r +
             1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r +
               1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r +
             1.0);
    } else {
        r -= 5.0;
        z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r +
               1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r +
             6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r +
               1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r +
             1.0);
    }
    return (q < 0.0) ? -z : z;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

} // namespace fbmvar
