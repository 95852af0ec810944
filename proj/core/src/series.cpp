#include "fbmvar/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmvar/errors.hpp"
#include "fbmvar/fgn.hpp"
#include "fbmvar/hermite.hpp"
#include "fbmvar/kahan.hpp"
#include "fbmvar/parallel.hpp"

namespace fbmvar {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kPi = 3.1415926535897932385;

// 97.5% point of the standard normal, so +-z covers 95%. Evaluated with
// 30-digit mpmath arithmetic.
constexpr double kWilsonZ = 1.959963984540054;

// Limit of the trapezoid-vs-integral correction of the f shape as
// eps -> 0, equal to the Euler constant minus one half. Evaluated with
// 30-digit mpmath arithmetic.
constexpr double kTrapezoidLimit = 0.077215664901532861;

// J(1) = integral_1^inf P(|Z| > y)/y dy. Evaluated with 30-digit mpmath
// arithmetic.
constexpr double kJAtOne = 0.12205043635709779;

// Past z = 9.5 the normal tail contributes less than 1e-20 in relative
// terms to any of the sums below, so direct summation stops there.
constexpr double kZCut = 9.5;

// Direct summation is allowed up to this many terms (2^26); past it the
// Euler-Maclaurin closed forms take over.
constexpr double kDirectCap = 67108864.0;

// 12-point Gauss-Legendre rule on [-1, 1]: positive nodes; the rule is
// symmetric and each weight is used twice.
constexpr int kGl12Half = 6;
constexpr double kGl12Node[kGl12Half] = {
    0.12523340851146891547, 0.36783149899818019375, 0.58731795428661744730,
    0.76990267419430468704, 0.90411725637047485668, 0.98156063424671925069};
constexpr double kGl12Weight[kGl12Half] = {
    0.24914704581340278500, 0.23349253653835480876, 0.20316742672306592175,
    0.16007832854334622633, 0.10693932599531843096, 0.04717533638651182719};

// 8-point rule for the bulk of the trapezoid correction, where the
// integrand is nearly flat.
constexpr int kGl8Half = 4;
constexpr double kGl8Node[kGl8Half] = {
    0.18343464249564980494, 0.52553240991632898582, 0.79666647741362673959,
    0.96028985649753623168};
constexpr double kGl8Weight[kGl8Half] = {
    0.36268378337836198297, 0.31370664587788728734, 0.22238103445337447054,
    0.10122853629037625915};

template <typename F>
double gauss_panel(const F& f, double a, double b, const double* node,
                   const double* weight, int half) {
    const double mid = 0.5 * (a + b);
    const double rad = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < half; ++i) {
        s += weight[i] * (f(mid - rad * node[i]) + f(mid + rad * node[i]));
    }
    return rad * s;
}

template <typename F>
double composite_gl12(const F& f, double a, double b, int panels) {
    KahanSum acc;
    const double step = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        acc.add(gauss_panel(f, a + i * step, a + (i + 1) * step, kGl12Node,
                            kGl12Weight, kGl12Half));
    }
    return acc.value();
}

// J(a) = integral_a^inf P(|Z| > y)/y dy. Below 1 the integrable part is
// split off through 1/y, leaving integral_a^1 erf(y/sqrt 2)/y dy whose
// integrand extends smoothly to 0 with value sqrt(2/pi); above 1 the bare
// tail integrand decays like a Gaussian and is spent by y = 40.
double normal_tail_log_integral(double a) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument(
            "normal_tail_log_integral: a must be positive");
    if (a >= 40.0) return 0.0;
    if (a >= 1.0) {
        const auto f = [](double y) { return std::erfc(y / kSqrt2) / y; };
        const int panels = static_cast<int>(std::ceil((a - 1.0) / 0.25)) + 1;
        return kJAtOne - composite_gl12(f, 1.0, a, panels);
    }
    const auto f = [](double y) { return std::erf(y / kSqrt2) / y; };
    return -std::log(a) - composite_gl12(f, a, 1.0, 16) + kJAtOne;
}

WilsonInterval wilson95(std::uint64_t x, std::uint64_t replicas) {
    const double z = kWilsonZ;
    const double r = static_cast<double>(replicas);
    const double p = static_cast<double>(x) / r;
    const double denom = 1.0 + z * z / r;
    const double center = (p + z * z / (2.0 * r)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / r + z * z / (4.0 * r * r)) / denom;
    WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    // The interval is exact at the boundary counts; rounding in the two
    // expressions above must not leave a stray ulp there.
    if (x == 0) ci.lo = 0.0;
    if (x == replicas) ci.hi = 1.0;
    return ci;
}

// Moment bounds of order 2p on the normalized variation give
// P(|V_n| > eps n^tau) <= C_p n^{-p(2 tau - v)} with
// C_p = ((2p-1)^q D / eps^2)^p, where E V_n^2 <= D n^v. Together with the
// summand weight n^{-w} each series term is below C_p n^{-s_p}.
struct TailEnvelope {
    double c[8];
    double s[8];
};

Regime require_kind_regime(SeriesKind kind, unsigned q, double H,
                           const char* where) {
    if (q < 1)
        throw std::invalid_argument(std::string(where) + ": q must be >= 1");
    const Regime need = series_kind_regime(kind);
    if (regime_of(q, H) != need)
        throw RegimeError(std::string(where) + ": " + series_kind_name(kind) +
                          " is defined in the " + regime_name(need) +
                          " regime");
    return need;
}

TailEnvelope tail_envelope(unsigned q, double H, SeriesKind kind,
                           double eps) {
    const Regime regime = require_kind_regime(kind, q, H, "truncation_bound");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("truncation_bound: eps must be positive");
    const double d = variance_majorant_coefficient(q, H);
    const double tau =
        regime == Regime::clt ? 1.0 : 2.0 - 2.0 * q * (1.0 - H);
    const double v = tau;
    const double w =
        (kind == SeriesKind::f1 || kind == SeriesKind::f2) ? 1.0 : 0.0;
    TailEnvelope env;
    for (int p = 1; p <= 8; ++p) {
        double odd = 1.0;
        for (unsigned i = 0; i < q; ++i) odd *= static_cast<double>(2 * p - 1);
        const double base = odd * d / (eps * eps);
        env.c[p - 1] = std::pow(base, static_cast<double>(p));
        env.s[p - 1] = static_cast<double>(p) * (2.0 * tau - v) + w;
    }
    return env;
}

double envelope_term(const TailEnvelope& env, double n) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i) {
        best = std::min(best, env.c[i] * std::pow(n, -env.s[i]));
    }
    return best;
}

double envelope_bound(const TailEnvelope& env, std::uint64_t n_trunc) {
    KahanSum window;
    const std::uint64_t edge = 64 * n_trunc;
    for (std::uint64_t n = n_trunc + 1; n <= edge; ++n) {
        window.add(envelope_term(env, static_cast<double>(n)));
    }
    double tail = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i) {
        if (env.s[i] > 1.0) {
            tail = std::min(tail,
                            env.c[i] *
                                std::pow(static_cast<double>(edge),
                                         1.0 - env.s[i]) /
                                (env.s[i] - 1.0));
        }
    }
    return window.value() + tail;
}

PredictedLimit predicted_limit_closed(SeriesKind kind, unsigned q, double H) {
    require_kind_regime(kind, q, H, "predicted_limit");
    switch (kind) {
        case SeriesKind::f1:
            return {2.0, 0.0};
        case SeriesKind::g1:
            return {1.0, 0.0};
        case SeriesKind::f2:
            return {1.0 / hermite_scaling_exponent(q, H), 0.0};
        case SeriesKind::g2:
            break;
    }
    throw std::logic_error("predicted_limit: g2 has no closed form");
}

}  // namespace

const char* series_kind_name(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::f1:
            return "f1";
        case SeriesKind::f2:
            return "f2";
        case SeriesKind::g1:
            return "g1";
        case SeriesKind::g2:
            return "g2";
    }
    throw std::invalid_argument("series_kind_name: unknown kind");
}

SeriesKind series_kind_from_name(std::string_view name) {
    if (name == "f1") return SeriesKind::f1;
    if (name == "f2") return SeriesKind::f2;
    if (name == "g1") return SeriesKind::g1;
    if (name == "g2") return SeriesKind::g2;
    throw std::invalid_argument(
        "series_kind_from_name: expected one of f1, f2, g1, g2");
}

Regime series_kind_regime(SeriesKind kind) {
    return (kind == SeriesKind::f1 || kind == SeriesKind::g1)
               ? Regime::clt
               : Regime::hermite;
}

double series_weight(SeriesKind kind, std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("series_weight: n must be >= 1");
    return (kind == SeriesKind::f1 || kind == SeriesKind::f2)
               ? 1.0 / static_cast<double>(n)
               : 1.0;
}

double series_threshold_exponent(SeriesKind kind, unsigned q, double H) {
    const Regime regime =
        require_kind_regime(kind, q, H, "series_threshold_exponent");
    return regime == Regime::clt ? 1.0 : 2.0 - 2.0 * q * (1.0 - H);
}

double series_threshold(SeriesKind kind, unsigned q, double H, double eps,
                        std::uint64_t n) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("series_threshold: eps must be positive");
    if (n < 1) throw std::invalid_argument("series_threshold: n must be >= 1");
    return eps * std::pow(static_cast<double>(n),
                          series_threshold_exponent(kind, q, H));
}

TailProbability tail_prob_mc(unsigned q, double H, std::size_t n,
                             double threshold, std::uint64_t replicas,
                             const RandomStream& rng, unsigned workers) {
    if (q < 1) throw std::invalid_argument("tail_prob_mc: q must be >= 1");
    if (n < 1) throw std::invalid_argument("tail_prob_mc: n must be >= 1");
    if (!(threshold >= 0.0))
        throw std::invalid_argument("tail_prob_mc: threshold must be >= 0");
    if (replicas < 100)
        throw std::invalid_argument(
            "tail_prob_mc: fewer than 100 replicas gives a vacuous interval");
    validate_hurst(H);

    const std::uint64_t key = rng.key();
    const unsigned nw = static_cast<unsigned>(std::min<std::uint64_t>(
        std::max(1u, workers), replicas));
    std::vector<FgnSynthesizer> synths;
    synths.reserve(nw);
    for (unsigned w = 0; w < nw; ++w) synths.emplace_back(H, n);
    std::vector<std::uint64_t> counts(nw, 0);
    const std::uint64_t chunk = (replicas + nw - 1) / nw;
    run_indexed_tasks(nw, nw, [&](std::size_t w) {
        const std::uint64_t first = w * chunk;
        const std::uint64_t last = std::min<std::uint64_t>(replicas, first + chunk);
        std::vector<double> path(n);
        FgnSynthesizer& synth = synths[w];
        std::uint64_t hits = 0;
        for (std::uint64_t r = first; r < last; ++r) {
            RandomStream stream(derive_key(key, r));
            synth.sample(stream, path.data());
            if (std::abs(compute_vn(q, path.data(), n)) > threshold) ++hits;
        }
        counts[w] = hits;
    });
    std::uint64_t x = 0;
    for (std::uint64_t c : counts) x += c;
    return {static_cast<double>(x) / static_cast<double>(replicas),
            wilson95(x, replicas), x, replicas};
}

double truncation_bound(unsigned q, double H, SeriesKind kind, double eps,
                        std::uint64_t n_trunc) {
    if (n_trunc < 1)
        throw std::invalid_argument("truncation_bound: n_trunc must be >= 1");
    if (n_trunc > std::numeric_limits<std::uint64_t>::max() / 64)
        throw std::invalid_argument("truncation_bound: n_trunc too large");
    return envelope_bound(tail_envelope(q, H, kind, eps), n_trunc);
}

std::uint64_t truncation_cutoff(unsigned q, double H, SeriesKind kind,
                                double eps, double tol, std::uint64_t n_cap) {
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw std::invalid_argument("truncation_cutoff: tol must be positive");
    if (n_cap < 1)
        throw std::invalid_argument("truncation_cutoff: n_cap must be >= 1");
    const TailEnvelope env = tail_envelope(q, H, kind, eps);
    std::uint64_t lo = 0;
    std::uint64_t hi = 1;
    while (envelope_bound(env, hi) > tol) {
        if (hi >= n_cap)
            throw BudgetExceeded(
                std::string("truncation_cutoff: ") + series_kind_name(kind) +
                    " needs more than " + std::to_string(n_cap) +
                    " terms to push the remainder below the tolerance",
                hi, 0, n_cap);
        lo = hi;
        hi = std::min(hi * 2, n_cap);
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (envelope_bound(env, mid) <= tol) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::vector<std::uint64_t> replica_schedule(SeriesKind kind,
                                            std::uint64_t n_trunc,
                                            std::uint64_t budget) {
    if (n_trunc < 1)
        throw std::invalid_argument("replica_schedule: n_trunc must be >= 1");
    std::vector<std::uint64_t> out(n_trunc);
    if (kind == SeriesKind::g1 || kind == SeriesKind::g2) {
        const double share = std::floor(static_cast<double>(budget) /
                                        static_cast<double>(n_trunc));
        const std::uint64_t r =
            std::max<std::uint64_t>(200, static_cast<std::uint64_t>(share));
        std::fill(out.begin(), out.end(), r);
        return out;
    }
    KahanSum weight_sum;
    for (std::uint64_t n = 1; n <= n_trunc; ++n) {
        weight_sum.add(std::pow(static_cast<double>(n), -2.0 / 3.0));
    }
    const double total_weight = weight_sum.value();
    for (std::uint64_t n = 1; n <= n_trunc; ++n) {
        const double share = std::floor(
            static_cast<double>(budget) *
            std::pow(static_cast<double>(n), -2.0 / 3.0) / total_weight);
        out[n - 1] =
            std::max<std::uint64_t>(100, static_cast<std::uint64_t>(share));
    }
    return out;
}

SeriesEstimate estimate_series(SeriesKind kind, unsigned q, double H,
                               double eps, double tol,
                               const NormalizationConstants& consts,
                               const RandomStream& rng, SeriesBudget budget,
                               unsigned workers) {
    const Regime regime = require_kind_regime(kind, q, H, "estimate_series");
    if (consts.q != q || consts.H != H || consts.regime != regime)
        throw RegimeError(
            "estimate_series: constants were built for different parameters");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("estimate_series: eps must be positive");

    const std::uint64_t n_trunc =
        truncation_cutoff(q, H, kind, eps, tol, budget.n_cap);
    const double remainder = truncation_bound(q, H, kind, eps, n_trunc);
    std::vector<std::uint64_t> schedule =
        replica_schedule(kind, n_trunc, budget.replicas);
    std::uint64_t total = 0;
    for (std::uint64_t r : schedule) total += r;
    if (total > budget.replicas)
        throw BudgetExceeded(
            std::string("estimate_series: ") + series_kind_name(kind) +
                " at eps = " + std::to_string(eps) + " truncates at n = " +
                std::to_string(n_trunc) + " and needs " +
                std::to_string(total) + " replicas against a budget of " +
                std::to_string(budget.replicas),
            n_trunc, total, budget.replicas);

    const std::uint64_t master = rng.key();
    std::vector<double> p_hat(n_trunc);
    std::vector<std::uint64_t> exceed(n_trunc);
    run_indexed_tasks(n_trunc, workers, [&](std::size_t idx) {
        const std::uint64_t n = idx + 1;
        RandomStream point(derive_key(master, n));
        const TailProbability tp =
            tail_prob_mc(q, H, static_cast<std::size_t>(n),
                         series_threshold(kind, q, H, eps, n), schedule[idx],
                         point, 1);
        p_hat[idx] = tp.p_hat;
        exceed[idx] = tp.exceedances;
    });

    KahanSum value;
    KahanSum variance;
    for (std::uint64_t n = 1; n <= n_trunc; ++n) {
        const double w = series_weight(kind, n);
        const double r = static_cast<double>(schedule[n - 1]);
        value.add(w * p_hat[n - 1]);
        const double shrunk =
            (static_cast<double>(exceed[n - 1]) + 0.5) / (r + 1.0);
        variance.add(w * w * shrunk * (1.0 - shrunk) / r);
    }

    SeriesEstimate est;
    est.kind = kind;
    est.q = q;
    est.H = H;
    est.eps = eps;
    est.tol = tol;
    est.value = value.value();
    est.mc_stderr = std::sqrt(variance.value());
    est.n_trunc = n_trunc;
    est.remainder_bound = remainder;
    est.replicas_per_n = std::move(schedule);
    est.total_replicas = total;
    est.seed = master;
    return est;
}

double normal_series_exact(NormalSeriesShape shape, double c, double eps) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("normal_series_exact: c must be positive");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument(
            "normal_series_exact: eps must be positive");
    const double ce = c * eps;
    const double terms = (kZCut / ce) * (kZCut / ce);
    if (terms <= kDirectCap) {
        const std::uint64_t n_cut =
            static_cast<std::uint64_t>(std::ceil(terms));
        KahanSum acc;
        for (std::uint64_t n = 1; n <= n_cut; ++n) {
            const double nd = static_cast<double>(n);
            const double t = phi_normal(ce * std::sqrt(nd));
            acc.add(shape == NormalSeriesShape::f ? t / nd : t);
        }
        return acc.value();
    }
    if (shape == NormalSeriesShape::f) {
        // Absolute error below 2.4 c.eps: the trapezoid correction has not
        // yet reached its limit, and its distance from the limit is
        // bounded by the total variation of the integrand's slope.
        return 2.0 * normal_tail_log_integral(ce) + 0.5 * phi_normal(ce) +
               kTrapezoidLimit;
    }
    // Absolute error below 0.34 c.eps, which is vanishing relative to the
    // (c.eps)^{-2} growth.
    return 1.0 / (ce * ce) - 0.5;
}

EulerMaclaurinTerms euler_maclaurin_check(const TwoSidedTail& tail, double c,
                                          double eps) {
    if (tail.family != TailFamily::analytic_normal)
        throw std::invalid_argument(
            "euler_maclaurin_check: the integral term needs the analytic "
            "normal tail");
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("euler_maclaurin_check: c must be positive");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument(
            "euler_maclaurin_check: eps must be positive");
    const double ce = c * eps;
    const double terms = (kZCut / ce) * (kZCut / ce);
    if (terms > kDirectCap)
        throw std::invalid_argument(
            "euler_maclaurin_check: eps too small for term-wise summation; "
            "use normal_series_exact");
    const std::uint64_t n_cut =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(terms)));

    const auto h = [&](double x) { return tail.prob(ce * std::sqrt(x)) / x; };

    KahanSum series_acc;
    KahanSum corr_acc;
    double h_here = h(1.0);
    series_acc.add(h_here);
    for (std::uint64_t k = 1; k <= n_cut; ++k) {
        const double a = static_cast<double>(k);
        const double b = static_cast<double>(k + 1);
        const double h_next = h(b);
        const double panel =
            k <= 1000 ? gauss_panel(h, a, b, kGl12Node, kGl12Weight, kGl12Half)
                      : gauss_panel(h, a, b, kGl8Node, kGl8Weight, kGl8Half);
        corr_acc.add(0.5 * (h_here + h_next) - panel);
        if (k + 1 <= n_cut) series_acc.add(h_next);
        h_here = h_next;
    }

    EulerMaclaurinTerms out;
    out.integral = 2.0 * normal_tail_log_integral(ce);
    out.boundary = 0.5 * tail.prob(ce);
    out.correction = corr_acc.value();
    out.series = series_acc.value();
    const double recomposed = out.integral + out.boundary + out.correction;
    if (std::abs(out.series - recomposed) >
        1e-8 * std::max(1.0, std::abs(out.series)))
        throw NoConvergence(
            "euler_maclaurin_check: decomposition does not reproduce the "
            "direct sum");
    return out;
}

Q1Series q1_special(double H, double eps) {
    validate_hurst(H);
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("q1_special: needs 0 < eps < 1");
    const double r = 1.0 / H;
    const double terms = std::pow(kZCut / eps, r);
    double spitzer_sum;
    double hsurobbins;
    if (terms <= kDirectCap) {
        const std::uint64_t n_cut =
            static_cast<std::uint64_t>(std::ceil(terms));
        KahanSum weighted;
        KahanSum plain;
        for (std::uint64_t n = 1; n <= n_cut; ++n) {
            const double nd = static_cast<double>(n);
            const double t = phi_normal(eps * std::pow(nd, H));
            weighted.add(t / nd);
            plain.add(t);
        }
        spitzer_sum = weighted.value();
        hsurobbins = std::pow(eps, r) * plain.value();
    } else {
        // Substituting u = eps x^H turns the integral term into
        // (1/H) J(eps); the trapezoid correction has the same limit as the
        // f shape because the tail factor approaches one on every fixed
        // range.
        spitzer_sum = r * normal_tail_log_integral(eps) +
                      0.5 * phi_normal(eps) + kTrapezoidLimit;
        // The unweighted sum is the midpoint rule for
        // integral_0^inf P(|Z| > eps x^H) dx = eps^{-1/H} E|Z|^{1/H} minus
        // half the unit strip at the origin.
        hsurobbins = normal_abs_moment(r) - 0.5 * std::pow(eps, r);
    }
    return {spitzer_sum / -std::log(eps), hsurobbins};
}

PredictedLimit predicted_limit(SeriesKind kind, unsigned q, double H) {
    if (kind == SeriesKind::g2) {
        require_kind_regime(kind, q, H, "predicted_limit");
        ReferenceSpec spec;
        spec.q = q;
        spec.H = H;
        return predicted_limit(kind, q, H, reference_sample(spec));
    }
    return predicted_limit_closed(kind, q, H);
}

PredictedLimit predicted_limit(SeriesKind kind, unsigned q, double H,
                               const EmpiricalSample& reference) {
    if (kind != SeriesKind::g2) return predicted_limit_closed(kind, q, H);
    require_kind_regime(kind, q, H, "predicted_limit");
    const SampleProvenance& from = reference.provenance();
    if (from.q != q || from.H != H)
        throw std::invalid_argument(
            "predicted_limit: reference sample was drawn for different "
            "(q, H)");
    if (reference.size() < 2)
        throw std::invalid_argument(
            "predicted_limit: reference sample too small");
    const double r = 1.0 / hermite_scaling_exponent(q, H);
    const double m = static_cast<double>(reference.size());
    KahanSum sum;
    for (double z : reference.magnitudes()) sum.add(std::pow(z, r));
    const double mean = sum.value() / m;
    KahanSum squares;
    for (double z : reference.magnitudes()) {
        const double d = std::pow(z, r) - mean;
        squares.add(d * d);
    }
    const double var = squares.value() / (m - 1.0);
    return {mean, std::sqrt(var / m)};
}

double normalized_ratio(const SeriesEstimate& est,
                        const NormalizationConstants& consts) {
    if (consts.q != est.q || consts.H != est.H ||
        consts.regime != series_kind_regime(est.kind))
        throw RegimeError(
            "normalized_ratio: constants were built for different "
            "parameters");
    switch (est.kind) {
        case SeriesKind::f1: {
            const double denom = -std::log(est.eps / consts.c1);
            if (denom == 0.0)
                throw std::invalid_argument(
                    "normalized_ratio: eps equals c1, the f1 normalization "
                    "vanishes");
            return est.value / denom;
        }
        case SeriesKind::f2: {
            const double denom = -std::log(est.eps / consts.c2);
            if (denom == 0.0)
                throw std::invalid_argument(
                    "normalized_ratio: eps equals c2, the f2 normalization "
                    "vanishes");
            return est.value / denom;
        }
        case SeriesKind::g1: {
            const double u = est.eps / consts.c1;
            return u * u * est.value;
        }
        case SeriesKind::g2: {
            const double u = est.eps / consts.c2;
            return std::pow(u, 1.0 / hermite_scaling_exponent(est.q, est.H)) *
                   est.value;
        }
    }
    throw std::invalid_argument("normalized_ratio: unknown kind");
}

double normal_abs_moment(double r) {
    if (!(r > -1.0) || !std::isfinite(r))
        throw std::invalid_argument("normal_abs_moment: needs r > -1");
    return std::pow(2.0, 0.5 * r) * std::tgamma(0.5 * (r + 1.0)) /
           std::sqrt(kPi);
}

EpsilonGrid make_epsilon_grid(double eps0, double ratio, std::size_t count) {
    if (!(eps0 > 0.0) || !std::isfinite(eps0))
        throw std::invalid_argument("make_epsilon_grid: eps0 must be positive");
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument(
            "make_epsilon_grid: ratio must lie in (0, 1)");
    if (count < 1)
        throw std::invalid_argument("make_epsilon_grid: count must be >= 1");
    EpsilonGrid grid;
    grid.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid.values[i] = eps0 * std::pow(ratio, static_cast<double>(i));
    }
    return grid;
}

EpsilonGrid default_epsilon_grid(unsigned q) {
    if (q < 1)
        throw std::invalid_argument("default_epsilon_grid: q must be >= 1");
    return make_epsilon_grid(3.0 * std::sqrt(factorial(q)),
                             std::pow(10.0, -0.5), 8);
}

EpsilonGrid epsilon_grid_from(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("epsilon_grid_from: grid must be nonempty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw std::invalid_argument(
                "epsilon_grid_from: values must be positive and finite");
        if (i > 0 && !(values[i] < values[i - 1]))
            throw std::invalid_argument(
                "epsilon_grid_from: values must be strictly decreasing");
    }
    EpsilonGrid grid;
    grid.values = std::move(values);
    return grid;
}

}  // namespace fbmvar
