#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "fbmvar/fgn.hpp"
#include "fbmvar/rng.hpp"
#include "fbmvar/variations.hpp"

namespace fbmvar {

// Two-sided tail of the standard normal law, P(|Z| > z) = 2(1 - Phi(z)).
// Absolute accuracy better than 1e-12; underflows to zero near z = 38.
// Throws std::invalid_argument for z < 0 or NaN.
double phi_normal(double z);

// Parameters that produced a Monte Carlo sample, carried alongside the
// values so downstream reports can state what they compared.
struct SampleProvenance {
    unsigned q = 0;
    double H = 0.0;
    std::uint64_t n_or_limit = 0; // grid size n, or m_path for limit surrogates
    std::uint64_t seed = 0;
};

// A nonempty sample held sorted ascending, with the magnitudes sorted
// separately so tail queries are a binary search.
class EmpiricalSample {
public:
    EmpiricalSample(std::vector<double> values, SampleProvenance provenance);

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& magnitudes() const { return magnitudes_; }
    const SampleProvenance& provenance() const { return provenance_; }

private:
    std::vector<double> values_;
    std::vector<double> magnitudes_;
    SampleProvenance provenance_;
};

// Fraction of sample points with |x| > z. Throws std::invalid_argument for
// z < 0 or NaN.
double empirical_tail(const EmpiricalSample& s, double z);

enum class TailFamily { analytic_normal, empirical };

// Two-sided tail function z >= 0 -> P(|X| > z), tagged so consumers that
// need closed-form structure (quadrature, derivatives) can insist on the
// analytic family.
struct TwoSidedTail {
    TailFamily family;
    std::function<double(double)> prob;
};

TwoSidedTail normal_tail();
TwoSidedTail make_empirical_tail(const EmpiricalSample& s);

// One-sample Kolmogorov statistic sup_x |ECDF(x) - cdf(x)|, evaluated at
// the sample points on both sides of each jump.
double ks_distance(const EmpiricalSample& s,
                   const std::function<double(double)>& cdf);

// Two-sample Kolmogorov statistic between the empirical CDFs.
double ks_distance(const EmpiricalSample& a, const EmpiricalSample& b);

// Draws the normalized variation statistic at fixed (q, H, n):
// Z_n^(1) = V_n / (c1 sqrt(n)) in the CLT regime, Z_n^(2) = V_n / (c2 n^beta)
// in the Hermite regime. Construction resolves the normalization constant
// (memoized across instances) and precomputes the synthesizer, so draws are
// cheap; each draw consumes exactly normals_per_draw() values from the
// caller's stream. Instances hold scratch buffers: one per thread.
class VariationSampler {
public:
    VariationSampler(unsigned q, double H, std::size_t n);

    double draw(RandomStream& stream);

    unsigned q() const { return q_; }
    double hurst() const;
    std::size_t n() const { return n_; }
    Regime regime() const;
    const NormalizationConstants& constants() const { return *consts_; }
    std::size_t normals_per_draw() const;

private:
    unsigned q_;
    std::size_t n_;
    const NormalizationConstants* consts_;
    FgnSynthesizer synth_;
    std::vector<double> buffer_;
};

// Batch of Z_n draws: draw r reads the stream keyed by
// derive_key(master_seed, r), so the sample is a pure function of the
// arguments, independent of worker count and scheduling.
EmpiricalSample draw_variation_sample(unsigned q, double H, std::size_t n,
                                      std::uint32_t draws,
                                      std::uint64_t master_seed,
                                      unsigned workers = 1);

// One draw of Z_{m_path}^(2), the finite-resolution surrogate for the
// Hermite law of order q. The surrogate's L2 distance to the limit decays
// like m_path^{1 - 1/(2q) - H} (prefactor unknown), so m_path should be
// large; 2^14 is the routine choice. Throws RegimeError outside the
// Hermite regime.
double sample_hermite_limit(unsigned q, double H, std::size_t m_path,
                            RandomStream& rng);

// Parameters of a frozen Hermite-limit reference sample. The defaults are
// the high-resolution configuration shared by every consumer; tests use
// smaller ones against private cache directories.
struct ReferenceSpec {
    unsigned q = 2;
    double H = 0.9;
    std::uint64_t m_path = std::uint64_t{1} << 16;
    std::uint32_t draws = 100000;
    std::uint64_t seed = 0x5EEDF0A2C1B3ULL;
};

// Cache directory resolution: $FBMVAR_CACHE_DIR if set, else
// $HOME/.cache/fbmvar, else a directory under the system temp path.
std::filesystem::path reference_cache_dir();

// File that caches the sample for this spec inside dir. The name encodes
// the exact bits of every parameter; the 32-byte header repeats them so a
// stale or foreign file is detected and regenerated.
std::filesystem::path reference_file_path(const std::filesystem::path& dir,
                                          const ReferenceSpec& spec);

// The reference sample for spec: loaded from cache when a valid file
// exists, otherwise generated (draw i uses the stream keyed by
// derive_key(spec.seed, i)), sorted, and written atomically via a
// temporary file and rename, so concurrent creators race harmlessly to
// identical content. Throws RegimeError outside the Hermite regime.
EmpiricalSample reference_sample(const ReferenceSpec& spec,
                                 const std::filesystem::path& dir,
                                 unsigned workers = 1);
EmpiricalSample reference_sample(const ReferenceSpec& spec,
                                 unsigned workers = 1);

// Predicted exponent e(q, H) of the Kolmogorov-distance decay n^{e(q,H)}:
//   CLT regime:     -1/2        for H in (0, 1/2],
//                   H - 1       for H in [1/2, (2q-3)/(2q-2)),
//                   qH - q + 1/2 for H in [(2q-3)/(2q-2), 1 - 1/(2q)),
//   Hermite regime: 1 - 1/(2q) - H.
// Continuous across both interior joins; throws RegimeError on the
// regime boundary itself.
double rate_exponent(unsigned q, double H);

struct SlopeFit {
    double slope;
    double std_error;
};

// Least-squares slope of log ks against log n. Requires at least four
// points with every ks positive; throws DegenerateFit otherwise.
SlopeFit fit_rate_slope(const std::map<std::uint64_t, double>& ks_by_n);

} // namespace fbmvar
