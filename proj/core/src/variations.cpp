#include "fbmvar/variations.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "fbmvar/errors.hpp"
#include "fbmvar/fgn.hpp"
#include "fbmvar/hermite.hpp"
#include "fbmvar/kahan.hpp"
#include "zeta.hpp"

namespace fbmvar {
namespace {

constexpr double kBoundaryGuard = 1e-13;
constexpr std::uint64_t kC1LagCutoff = 100000;
constexpr std::uint64_t kMajorantLagCutoff = 200000;

double ipow(double x, unsigned q) {
    double r = 1.0;
    for (unsigned i = 0; i < q; ++i) r *= x;
    return r;
}

void validate_order(unsigned q) {
    if (q < 1) throw std::invalid_argument("Hermite order must be at least 1");
}

double boundary(unsigned q) { return 1.0 - 1.0 / (2.0 * static_cast<double>(q)); }

// E[V_n^2] at every n in `grid` (ascending), sharing one pass over the lags.
std::vector<double> second_moment_grid(unsigned q, double H,
                                       const std::vector<std::size_t>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    const double qf = factorial(q);
    KahanSum plain;    // sum of rho(k)^q, k = 1..n-1
    KahanSum weighted; // sum of k rho(k)^q, k = 1..n-1
    std::size_t k = 1;
    for (std::size_t n : grid) {
        for (; k < n; ++k) {
            const double rq = ipow(fgn_autocovariance(H, k), q);
            plain.add(rq);
            weighted.add(static_cast<double>(k) * rq);
        }
        const double nd = static_cast<double>(n);
        out.push_back(qf * (nd + 2.0 * (nd * plain.value() - weighted.value())));
    }
    return out;
}

struct FitResult {
    double intercept;   // A in y = A + B x^{-delta}
    double slope;       // B
    double delta;
    double rms_residual;
};

// Least squares in (A, B) for fixed delta; returns the residual sum of squares.
double linear_rss(const std::vector<double>& x, const std::vector<double>& y,
                  double delta, double* a_out, double* b_out) {
    const std::size_t m = x.size();
    double su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = std::pow(x[i], -delta);
        su += u;
        suu += u * u;
        sy += y[i];
        suy += u * y[i];
    }
    const double md = static_cast<double>(m);
    const double det = md * suu - su * su;
    if (std::abs(det) < 1e-300) {
        *a_out = sy / md;
        *b_out = 0.0;
    } else {
        *b_out = (md * suy - su * sy) / det;
        *a_out = (sy - *b_out * su) / md;
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - (*a_out + *b_out * std::pow(x[i], -delta));
        rss += r * r;
    }
    return rss;
}

FitResult fit_power_correction(const std::vector<double>& x, const std::vector<double>& y) {
    double lo = 1e-3, hi = 3.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a, b;
    double m1 = hi - gr * (hi - lo);
    double m2 = lo + gr * (hi - lo);
    double f1 = linear_rss(x, y, m1, &a, &b);
    double f2 = linear_rss(x, y, m2, &a, &b);
    for (int it = 0; it < 120; ++it) {
        if (f1 <= f2) {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - gr * (hi - lo);
            f1 = linear_rss(x, y, m1, &a, &b);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + gr * (hi - lo);
            f2 = linear_rss(x, y, m2, &a, &b);
        }
    }
    FitResult fit;
    fit.delta = 0.5 * (lo + hi);
    const double rss = linear_rss(x, y, fit.delta, &fit.intercept, &fit.slope);
    fit.rms_residual = std::sqrt(rss / static_cast<double>(x.size()));
    return fit;
}

} // namespace

const char* regime_name(Regime r) {
    return r == Regime::clt ? "CLT" : "HERMITE";
}

Regime regime_of(unsigned q, double H) {
    validate_order(q);
    validate_hurst(H);
    const double hb = boundary(q);
    if (std::abs(H - hb) <= kBoundaryGuard) {
        throw RegimeError("H = " + std::to_string(H) + " sits on the regime boundary 1 - 1/(2q) = " +
                          std::to_string(hb) + " where no normalization applies");
    }
    return H < hb ? Regime::clt : Regime::hermite;
}

double hermite_scaling_exponent(unsigned q, double H) {
    return 1.0 - static_cast<double>(q) * (1.0 - H);
}

double compute_vn(unsigned q, const double* increments, std::size_t n) {
    validate_order(q);
    if (n == 0) throw std::invalid_argument("compute_vn: sample must be nonempty");
    KahanSum sum;
    for (std::size_t k = 0; k < n; ++k) {
        sum.add(hermite_eval(q, increments[k]));
    }
    return sum.value();
}

double compute_vn(unsigned q, const std::vector<double>& increments) {
    return compute_vn(q, increments.data(), increments.size());
}

double exact_second_moment(unsigned q, double H, std::size_t n) {
    validate_order(q);
    validate_hurst(H);
    if (n == 0) throw std::invalid_argument("exact_second_moment: n must be at least 1");
    return second_moment_grid(q, H, {n})[0];
}

double exact_second_moment_brute(unsigned q, double H, std::size_t n) {
    validate_order(q);
    validate_hurst(H);
    if (n == 0) throw std::invalid_argument("exact_second_moment_brute: n must be at least 1");
    std::vector<double> rq(n);
    for (std::size_t k = 0; k < n; ++k) {
        rq[k] = ipow(fgn_autocovariance(H, k), q);
    }
    const double qf = factorial(q);
    KahanSum sum;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            sum.add(qf * rq[k >= l ? k - l : l - k]);
        }
    }
    return sum.value();
}

ConstantWithError c1_constant(unsigned q, double H) {
    if (regime_of(q, H) != Regime::clt) {
        throw RegimeError("c1 is defined only for H < 1 - 1/(2q); got H = " + std::to_string(H) +
                          ", q = " + std::to_string(q));
    }
    if (q < 2) {
        throw RegimeError("the lag series for c1 telescopes to zero at q = 1; "
                          "no positive constant exists");
    }
    const double qf = factorial(q);
    KahanSum partial;
    for (std::uint64_t k = 1; k <= kC1LagCutoff; ++k) {
        partial.add(ipow(fgn_autocovariance(H, k), q));
    }
    // Beyond the cutoff, rho(k) = a k^{2H-2} + e(k) with
    // |e(k)| <= (k-1)^{2H-4}/2, so the tail of sum rho^q is
    // a^q zeta(gamma, K+1) up to q |a|^{q-1} zeta(gamma+2, K) / 2.
    const double a = H * (2.0 * H - 1.0);
    const double gamma = (2.0 - 2.0 * H) * static_cast<double>(q);
    const double kd = static_cast<double>(kC1LagCutoff);
    double tail_main = 0.0;
    double tail_err = 0.0;
    if (a != 0.0) {
        tail_main = ipow(a, q) * detail::hurwitz_zeta_tail(gamma, kd + 1.0);
        tail_err = 0.5 * static_cast<double>(q) * ipow(std::abs(a), q - 1) *
                   detail::hurwitz_zeta_tail(gamma + 2.0, kd);
    }
    const double c1_sq = qf * (1.0 + 2.0 * partial.value() + 2.0 * tail_main);
    const double err_sq = 2.0 * qf * tail_err + 4e-15 * qf * (1.0 + 2.0 * std::abs(partial.value()));
    if (!(c1_sq > 0.0)) {
        throw NoConvergence("c1 series summed to a nonpositive value at q = " + std::to_string(q) +
                            ", H = " + std::to_string(H));
    }
    const double c1 = std::sqrt(c1_sq);
    return {c1, err_sq / (2.0 * c1)};
}

ConstantWithError c2_constant(unsigned q, double H) {
    if (regime_of(q, H) != Regime::hermite) {
        throw RegimeError("c2 is defined only for H > 1 - 1/(2q); got H = " + std::to_string(H) +
                          ", q = " + std::to_string(q));
    }
    const double beta = hermite_scaling_exponent(q, H);
    std::vector<std::size_t> grid;
    for (unsigned p = 10; p <= 20; ++p) grid.push_back(std::size_t{1} << p);
    const std::vector<double> moments = second_moment_grid(q, H, grid);
    std::vector<double> x(grid.size()), y(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        x[i] = static_cast<double>(grid[i]);
        y[i] = moments[i] * std::pow(x[i], -2.0 * beta);
    }
    const FitResult fit = fit_power_correction(x, y);
    if (!(fit.intercept > 0.0)) {
        throw DegenerateFit("extrapolated squared constant is nonpositive: " +
                            std::to_string(fit.intercept));
    }
    const double correction_at_top = std::abs(fit.slope) * std::pow(x.back(), -fit.delta);
    const double err_sq = std::max(3.0 * fit.rms_residual, correction_at_top);
    const double c2 = std::sqrt(fit.intercept);
    return {c2, err_sq / (2.0 * c2)};
}

const NormalizationConstants& constants_for(unsigned q, double H) {
    static std::mutex mutex;
    static std::map<std::pair<unsigned, std::uint64_t>, std::unique_ptr<NormalizationConstants>> cache;

    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(H));
    std::memcpy(&bits, &H, sizeof(bits));
    const auto key = std::make_pair(q, bits);
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
    }
    auto fresh = std::make_unique<NormalizationConstants>();
    fresh->q = q;
    fresh->H = H;
    fresh->regime = regime_of(q, H);
    if (fresh->regime == Regime::clt) {
        const ConstantWithError c = c1_constant(q, H);
        fresh->c1 = c.value;
        fresh->err1 = c.error;
    } else {
        const ConstantWithError c = c2_constant(q, H);
        fresh->c2 = c.value;
        fresh->err2 = c.error;
    }
    std::lock_guard<std::mutex> lock(mutex);
    auto [it, inserted] = cache.try_emplace(key, std::move(fresh));
    return *it->second;
}

double normalize(double vn, unsigned q, double H, std::size_t n,
                 const NormalizationConstants& consts) {
    if (consts.q != q || consts.H != H) {
        throw RegimeError("normalization constants were computed for q = " +
                          std::to_string(consts.q) + ", H = " + std::to_string(consts.H) +
                          " but applied to q = " + std::to_string(q) + ", H = " + std::to_string(H));
    }
    const double nd = static_cast<double>(n);
    if (consts.regime == Regime::clt) {
        return vn / (consts.c1 * std::sqrt(nd));
    }
    return vn / (consts.c2 * std::pow(nd, hermite_scaling_exponent(q, H)));
}

double variance_majorant_coefficient(unsigned q, double H) {
    const Regime regime = regime_of(q, H);
    const double qf = factorial(q);
    const double a = H * (2.0 * H - 1.0);
    const double gamma = (2.0 - 2.0 * H) * static_cast<double>(q);
    if (regime == Regime::clt) {
        // E V_n^2 <= n q! sum_{k in Z} |rho(k)|^q, summed to the cutoff with
        // the integral bound sum_{k>K} |rho|^q <= |a|^q (K-1)^{1-gamma}/(gamma-1).
        KahanSum s;
        for (std::uint64_t k = 1; k <= kMajorantLagCutoff; ++k) {
            s.add(ipow(std::abs(fgn_autocovariance(H, k)), q));
        }
        double tail = 0.0;
        if (a != 0.0) {
            tail = ipow(std::abs(a), q) *
                   std::pow(static_cast<double>(kMajorantLagCutoff) - 1.0, 1.0 - gamma) /
                   (gamma - 1.0);
        }
        return qf * (1.0 + 2.0 * s.value() + 2.0 * tail);
    }
    // E V_n^2 <= n^{2 beta} q! (1 + 2 rho(1)^q + 2 a^q + 2 a^q/(1-gamma)),
    // from |rho(k)| <= a (k-1)^{2H-2} for k >= 2 and an integral comparison
    // of the folded lag sum.
    const double r1q = ipow(fgn_autocovariance(H, 1), q);
    const double aq = ipow(a, q);
    return qf * (1.0 + 2.0 * r1q + 2.0 * aq + 2.0 * aq / (1.0 - gamma));
}

} // namespace fbmvar
