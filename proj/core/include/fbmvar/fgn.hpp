#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fbmvar/rng.hpp"

namespace fbmvar {

// Throws std::invalid_argument unless 0 < H < 1.
void validate_hurst(double H);

// Autocovariance of standardized fractional Gaussian noise at lag k:
// rho_H(k) = ((k+1)^{2H} + |k-1|^{2H} - 2 k^{2H}) / 2.
// The closed form cancels catastrophically for large k, so lags k >= 8 are
// evaluated through the even-order binomial series
// rho_H(k) = k^{2H} * sum_{j>=1} C(2H, 2j) k^{-2j}.
double fgn_autocovariance(double H, std::uint64_t k);

// Covariance of fractional Brownian motion:
// E[B_s B_t] = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double fbm_covariance(double H, double s, double t);

struct PathSpec {
    double H;
    std::size_t n;       // number of increments, >= 1
    std::uint64_t seed;
};

enum class SynthesisMethod {
    circulant,  // circulant embedding of size 2M, M = smallest power of two >= n
    cholesky,   // dense factorization of the n-by-n covariance
    iid,        // independent normals, valid only at H = 1/2
};

struct SynthesisInfo {
    SynthesisMethod method;
    std::size_t embedding_size; // 2M for the circulant path, 0 otherwise
    double min_eigenvalue;      // smallest circulant eigenvalue seen, 0 if unused
    std::size_t clamped_count;  // eigenvalues in [-tol, 0) clamped to zero
};

const char* synthesis_method_name(SynthesisMethod m);

// Draws exact (in distribution) standardized fGn vectors of length n with
// covariance rho_H(k-l). Construction precomputes the circulant spectrum or
// the dense factor; sample() then consumes a documented number of standard
// normals from the caller's stream:
//   iid:        n normals z_0..z_{n-1}, output x_k = z_k
//   circulant:  2M normals; w_0 = sqrt(lam_0/2M) z_0,
//               w_j = sqrt(lam_j/4M) (z_{2j-1} + i z_{2j}) for j = 1..M-1,
//               w_M = sqrt(lam_M/2M) z_{2M-1}, output = inverse DFT, first n
//   cholesky:   n normals, output = L z with L the lower Cholesky factor
// Instances hold scratch buffers, so each thread needs its own; the
// construction cost is O(M log M).
class FgnSynthesizer {
public:
    // Auto-selects: iid at H = 1/2, otherwise circulant with a dense
    // fallback when the embedding spectrum dips below -tol_eig,
    // tol_eig = 1e-10 * max eigenvalue.
    FgnSynthesizer(double H, std::size_t n);
    // Forces a specific path. Throws std::invalid_argument for iid with
    // H != 1/2; throws SynthesisError if the forced path cannot realize
    // the covariance.
    FgnSynthesizer(double H, std::size_t n, SynthesisMethod method);
    ~FgnSynthesizer();
    FgnSynthesizer(FgnSynthesizer&&) noexcept;
    FgnSynthesizer& operator=(FgnSynthesizer&&) noexcept;

    double hurst() const;
    std::size_t n() const;
    const SynthesisInfo& info() const;
    std::size_t normals_per_sample() const;

    void sample(RandomStream& stream, double* out);
    std::vector<double> sample(RandomStream& stream);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One standardized fGn draw of spec.n increments from a stream keyed by
// spec.seed.
std::vector<double> sample_fgn(const PathSpec& spec);

// Fractional Brownian motion on the grid k/n, k = 0..n: n+1 values with
// B_0 = 0 and B_{k/n} = n^{-H} * (x_0 + ... + x_{k-1}).
std::vector<double> sample_fbm(const PathSpec& spec);

} // namespace fbmvar
