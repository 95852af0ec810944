#include "fbmvar/fgn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbmvar/errors.hpp"
#include "fbmvar/kahan.hpp"
#include "fft.hpp"

namespace fbmvar {
namespace {

constexpr double kEigTolFactor = 1e-10;

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

double rho_direct(double H, double k) {
    const double h2 = 2.0 * H;
    return 0.5 * (std::pow(k + 1.0, h2) + std::pow(std::abs(k - 1.0), h2) -
                  2.0 * std::pow(k, h2));
}

// rho_H(k) = k^{2H} * sum_{j>=1} C(2H, 2j) k^{-2j}, from the binomial
// expansion of (1 +- 1/k)^{2H}; odd-order terms cancel in the sum.
double rho_series(double H, double k) {
    const double alpha = 2.0 * H;
    const double inv2 = 1.0 / (k * k);
    double binom = 1.0;   // C(alpha, m) tracked over m = 1, 2, ...
    double kpow = 1.0;    // k^{-2j}
    KahanSum sum;
    for (unsigned j = 1; j <= 60; ++j) {
        binom *= (alpha - (2.0 * j - 2.0)) / (2.0 * j - 1.0);
        binom *= (alpha - (2.0 * j - 1.0)) / (2.0 * j);
        kpow *= inv2;
        const double term = binom * kpow;
        sum.add(term);
        if (std::abs(term) < 1e-20 * std::abs(sum.value())) break;
    }
    return std::pow(k, alpha) * sum.value();
}

} // namespace

void validate_hurst(double H) {
    if (!(H > 0.0 && H < 1.0)) {
        throw std::invalid_argument("Hurst index must lie strictly between 0 and 1, got " +
                                    std::to_string(H));
    }
}

double fgn_autocovariance(double H, std::uint64_t k) {
    validate_hurst(H);
    if (k == 0) return 1.0;
    if (H == 0.5) return 0.0;
    const double kd = static_cast<double>(k);
    return (k < 8) ? rho_direct(H, kd) : rho_series(H, kd);
}

double fbm_covariance(double H, double s, double t) {
    validate_hurst(H);
    if (s < 0.0 || t < 0.0) {
        throw std::invalid_argument("fbm_covariance: times must be nonnegative");
    }
    const double h2 = 2.0 * H;
    return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

const char* synthesis_method_name(SynthesisMethod m) {
    switch (m) {
        case SynthesisMethod::circulant: return "circulant-embedding";
        case SynthesisMethod::cholesky: return "dense-cholesky";
        case SynthesisMethod::iid: return "iid-gaussian";
    }
    return "unknown";
}

struct FgnSynthesizer::Impl {
    double H;
    std::size_t n;
    SynthesisInfo info{};

    // circulant state
    std::size_t M = 0;
    std::vector<double> scale;  // sqrt(lam_j / 4M), j = 0..M; slots 0 and M
                                // instead hold sqrt(lam_j / 2M)
    std::unique_ptr<detail::HalfSpectrumSynthesis> synth;

    // cholesky state
    Eigen::MatrixXd chol_factor;

    void init_circulant(bool allow_fallback) {
        M = next_pow2(n);
        std::vector<double> half_row(M + 1);
        for (std::size_t k = 0; k <= M; ++k) {
            half_row[k] = fgn_autocovariance(H, k);
        }
        std::vector<double> eig = detail::circulant_eigenvalues(std::move(half_row));
        const double max_eig = *std::max_element(eig.begin(), eig.end());
        const double min_eig = *std::min_element(eig.begin(), eig.end());
        const double tol = kEigTolFactor * max_eig;
        if (min_eig < -tol) {
            if (allow_fallback) {
                init_cholesky();
                return;
            }
            throw SynthesisError(
                "circulant embedding spectrum is negative beyond tolerance: min "
                "eigenvalue " + std::to_string(min_eig) + " at H=" + std::to_string(H) +
                ", n=" + std::to_string(n));
        }
        info.method = SynthesisMethod::circulant;
        info.embedding_size = 2 * M;
        info.min_eigenvalue = min_eig;
        scale.resize(M + 1);
        const double m2 = static_cast<double>(2 * M);
        for (std::size_t j = 0; j <= M; ++j) {
            double lam = eig[j];
            if (lam < 0.0) {
                lam = 0.0;
                ++info.clamped_count;
            }
            const double denom = (j == 0 || j == M) ? m2 : 2.0 * m2;
            scale[j] = std::sqrt(lam / denom);
        }
        synth = std::make_unique<detail::HalfSpectrumSynthesis>(M);
    }

    void init_cholesky() {
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double r = fgn_autocovariance(H, i - j);
                cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
                cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r;
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw SynthesisError(
                "dense factorization failed: fGn covariance numerically not positive "
                "definite at H=" + std::to_string(H) + ", n=" + std::to_string(n));
        }
        chol_factor = llt.matrixL();
        info.method = SynthesisMethod::cholesky;
        info.embedding_size = 0;
        info.min_eigenvalue = 0.0;
    }

    void init_iid() {
        if (H != 0.5) {
            throw std::invalid_argument("iid synthesis is exact only at H = 0.5");
        }
        info.method = SynthesisMethod::iid;
        info.embedding_size = 0;
        info.min_eigenvalue = 0.0;
    }

    std::size_t normals_per_sample() const {
        return info.method == SynthesisMethod::circulant ? 2 * M : n;
    }

    void sample(RandomStream& stream, double* out) {
        switch (info.method) {
            case SynthesisMethod::iid: {
                for (std::size_t k = 0; k < n; ++k) out[k] = stream.next_normal();
                return;
            }
            case SynthesisMethod::circulant: {
                auto* w = synth->spectrum();
                w[0] = {scale[0] * stream.next_normal(), 0.0};
                for (std::size_t j = 1; j < M; ++j) {
                    const double re = scale[j] * stream.next_normal();
                    const double im = scale[j] * stream.next_normal();
                    w[j] = {re, im};
                }
                w[M] = {scale[M] * stream.next_normal(), 0.0};
                const double* x = synth->synthesize();
                std::copy(x, x + n, out);
                return;
            }
            case SynthesisMethod::cholesky: {
                Eigen::VectorXd z(static_cast<Eigen::Index>(n));
                for (std::size_t k = 0; k < n; ++k) {
                    z(static_cast<Eigen::Index>(k)) = stream.next_normal();
                }
                Eigen::Map<Eigen::VectorXd> mapped(out, static_cast<Eigen::Index>(n));
                mapped.noalias() = chol_factor * z;
                return;
            }
        }
    }
};

FgnSynthesizer::FgnSynthesizer(double H, std::size_t n) : impl_(std::make_unique<Impl>()) {
    validate_hurst(H);
    if (n == 0) throw std::invalid_argument("path length must be at least 1");
    impl_->H = H;
    impl_->n = n;
    if (H == 0.5) {
        impl_->init_iid();
    } else {
        impl_->init_circulant(/*allow_fallback=*/true);
    }
}

FgnSynthesizer::FgnSynthesizer(double H, std::size_t n, SynthesisMethod method)
    : impl_(std::make_unique<Impl>()) {
    validate_hurst(H);
    if (n == 0) throw std::invalid_argument("path length must be at least 1");
    impl_->H = H;
    impl_->n = n;
    switch (method) {
        case SynthesisMethod::iid: impl_->init_iid(); break;
        case SynthesisMethod::circulant: impl_->init_circulant(/*allow_fallback=*/false); break;
        case SynthesisMethod::cholesky: impl_->init_cholesky(); break;
    }
}

FgnSynthesizer::~FgnSynthesizer() = default;
FgnSynthesizer::FgnSynthesizer(FgnSynthesizer&&) noexcept = default;
FgnSynthesizer& FgnSynthesizer::operator=(FgnSynthesizer&&) noexcept = default;

double FgnSynthesizer::hurst() const { return impl_->H; }
std::size_t FgnSynthesizer::n() const { return impl_->n; }
const SynthesisInfo& FgnSynthesizer::info() const { return impl_->info; }
std::size_t FgnSynthesizer::normals_per_sample() const { return impl_->normals_per_sample(); }

void FgnSynthesizer::sample(RandomStream& stream, double* out) {
    impl_->sample(stream, out);
}

std::vector<double> FgnSynthesizer::sample(RandomStream& stream) {
    std::vector<double> out(impl_->n);
    impl_->sample(stream, out.data());
    return out;
}

std::vector<double> sample_fgn(const PathSpec& spec) {
    FgnSynthesizer synth(spec.H, spec.n);
    RandomStream stream(spec.seed);
    return synth.sample(stream);
}

std::vector<double> sample_fbm(const PathSpec& spec) {
    const std::vector<double> incr = sample_fgn(spec);
    const double scale = std::pow(static_cast<double>(spec.n), -spec.H);
    std::vector<double> path(spec.n + 1);
    path[0] = 0.0;
    KahanSum partial;
    for (std::size_t k = 0; k < spec.n; ++k) {
        partial.add(incr[k]);
        path[k + 1] = scale * partial.value();
    }
    return path;
}

} // namespace fbmvar
