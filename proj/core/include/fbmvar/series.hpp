#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fbmvar/limitlaws.hpp"
#include "fbmvar/rng.hpp"
#include "fbmvar/variations.hpp"

namespace fbmvar {

// The four partial-sum families over the normalized Hermite variations.
// Writing p(n, t) = P(|V_n| > t),
//
//   f1: sum (1/n) p(n, eps * n)                    weighted, CLT regime
//   f2: sum (1/n) p(n, eps * n^(2 - 2q(1-H)))      weighted, Hermite regime
//   g1: sum       p(n, eps * n)                    unweighted, CLT regime
//   g2: sum       p(n, eps * n^(2 - 2q(1-H)))      unweighted, Hermite regime
//
// The weighted sums grow like a constant times -log(eps); the unweighted
// ones like a power of 1/eps.
enum class SeriesKind { f1, f2, g1, g2 };

const char* series_kind_name(SeriesKind kind);

// Inverse of series_kind_name. Throws std::invalid_argument for anything
// other than "f1", "f2", "g1", "g2".
SeriesKind series_kind_from_name(std::string_view name);

// Regime in which the series has a finite limit statement: CLT for f1/g1,
// Hermite for f2/g2.
Regime series_kind_regime(SeriesKind kind);

// Summand weight: 1/n for the f kinds, 1 for the g kinds.
double series_weight(SeriesKind kind, std::uint64_t n);

// Exponent a in the threshold eps * n^a: a = 1 for f1/g1 and
// a = 2 - 2q(1-H) for f2/g2.
double series_threshold_exponent(SeriesKind kind, unsigned q, double H);

// The threshold eps * n^a applied to the unnormalized variation V_n.
double series_threshold(SeriesKind kind, unsigned q, double H, double eps,
                        std::uint64_t n);

struct WilsonInterval {
    double lo;
    double hi;
};

struct TailProbability {
    double p_hat;
    WilsonInterval ci;
    std::uint64_t exceedances;
    std::uint64_t replicas;
};

// Monte Carlo estimate of P(|V_n| > threshold) from independent paths.
// Replica r consumes the stream keyed by derive_key(rng.key(), r); the
// caller's stream position is never advanced, and the exceedance count is
// an integer, so the result is identical for every worker count. p_hat is
// the plain binomial fraction and ci the Wilson 95% interval (exactly 0 at
// the low end when no exceedance was seen). Throws std::invalid_argument
// for replicas < 100 or a negative threshold.
TailProbability tail_prob_mc(unsigned q, double H, std::size_t n,
                             double threshold, std::uint64_t replicas,
                             const RandomStream& rng, unsigned workers = 1);

// Rigorous upper bound on the tail sum_{n > n_trunc} weight(n) p(n, t_n),
// built from moment bounds of order 2p, p = 1..8, on the normalized
// variation: each term is bounded by min_p C_p(eps) n^(-s_p), the window
// n_trunc+1 .. 64 n_trunc is summed term by term, and the rest is bounded
// by the integral of the best exponent with s_p > 1. Throws RegimeError
// when (q, H) is not in the regime of the kind.
double truncation_bound(unsigned q, double H, SeriesKind kind, double eps,
                        std::uint64_t n_trunc);

// Smallest n_trunc with truncation_bound(...) <= tol, located by doubling
// then bisection. Throws BudgetExceeded when no n_trunc <= n_cap works.
std::uint64_t truncation_cutoff(unsigned q, double H, SeriesKind kind,
                                double eps, double tol,
                                std::uint64_t n_cap = 10000000);

// Monte Carlo replicas allocated to each grid point n = 1..n_trunc. The g
// kinds split the budget uniformly with a floor of 200; every term enters
// with weight 1, so the far tail keeps a usable Wilson interval. The f
// kinds allocate proportionally to n^(-2/3), matching the decay of the
// weighted summand variance, with a floor of 100: the 1/n weight makes the
// tail terms cheap to estimate coarsely. The total may exceed the budget
// when a floor binds; estimate_series treats that as BudgetExceeded.
std::vector<std::uint64_t> replica_schedule(SeriesKind kind,
                                            std::uint64_t n_trunc,
                                            std::uint64_t budget);

struct SeriesBudget {
    std::uint64_t replicas = 2000000;
    std::uint64_t n_cap = 10000000;
};

struct SeriesEstimate {
    SeriesKind kind;
    unsigned q;
    double H;
    double eps;
    double tol;
    double value;
    double mc_stderr;
    std::uint64_t n_trunc;
    double remainder_bound;
    std::vector<std::uint64_t> replicas_per_n;
    std::uint64_t total_replicas;
    std::uint64_t seed;
};

// Estimate of the partial-sum series at one eps: truncation point from
// truncation_cutoff, replica schedule from replica_schedule, per-point
// tail probabilities from tail_prob_mc. Point n uses the stream keyed by
// derive_key(rng.key(), n), so the estimate is reproducible from the seed
// alone and independent of the worker count. mc_stderr is the square root
// of sum weight(n)^2 p~(1-p~)/R(n) with the shrunk estimate
// p~ = (x + 1/2)/(R + 1), which keeps the error bar positive when a point
// saw no exceedances. Throws RegimeError for a kind/regime mismatch or
// constants built for different (q, H); BudgetExceeded (carrying n_trunc,
// the replicas needed, and the budget) when the schedule does not fit.
SeriesEstimate estimate_series(SeriesKind kind, unsigned q, double H,
                               double eps, double tol,
                               const NormalizationConstants& consts,
                               const RandomStream& rng,
                               SeriesBudget budget = {}, unsigned workers = 1);

// The two series shapes with the exact standard normal tail in place of
// the Monte Carlo probability:
//
//   f: sum_{n>=1} (1/n) Phi(c eps sqrt(n))      -> 2 |log eps| + O(1)
//   g: sum_{n>=1}       Phi(c eps sqrt(n))      -> (c eps)^(-2) + O(1)
//
// where Phi(z) = P(|N(0,1)| > z). Summed directly while the index where
// the terms underflow stays below 2^26; past that the Euler-Maclaurin
// closed forms take over (error below 2.4 c.eps for f, 0.34 c.eps for g).
enum class NormalSeriesShape { f, g };
double normal_series_exact(NormalSeriesShape shape, double c, double eps);

struct EulerMaclaurinTerms {
    double integral;
    double boundary;
    double correction;
    double series;
};

// Decomposition of the f-shape sum sum_{n>=1} h(n), h(x) = Phi(c eps
// sqrt(x))/x, into integral_1^inf h + h(1)/2 + trapezoid-vs-integral
// correction. Summing h over integers n >= 1 anchors the trapezoid
// correction at h(1)/2. The sum of the three pieces reproduces the direct
// series to quadrature accuracy; the function verifies that to 1e-8 and
// throws NoConvergence otherwise. Requires the analytic normal tail
// (quadrature needs the closed form) and c eps large enough for direct
// summation; throws std::invalid_argument otherwise.
EulerMaclaurinTerms euler_maclaurin_check(const TwoSidedTail& tail, double c,
                                          double eps);

struct Q1Series {
    double spitzer_ratio;
    double hsurobbins_value;
};

// First-chaos case: V_n is the fractional Brownian motion itself, with
// variance n^(2H), and the thresholds scale as eps * n^(2H). The exact
// Gaussian tail gives
//
//   spitzer_ratio:    sum (1/n) Phi(eps n^H) / |log eps|  -> 1/H
//   hsurobbins_value: eps^(1/H) sum Phi(eps n^H)          -> E|Z|^(1/H)
//
// for a standard normal Z. Direct summation, with the same
// Euler-Maclaurin continuation as normal_series_exact once the term count
// passes 2^26. Requires 0 < eps < 1.
Q1Series q1_special(double H, double eps);

struct PredictedLimit {
    double value;
    double std_error;
};

// Limit the normalized series ratio converges to as eps -> 0: 2 for f1,
// 1/(1 - q(1-H)) for f2, 1 for g1. The g2 limit is the (1/beta)-th
// absolute moment of the Hermite-type limit law, estimated from the
// frozen reference sample; its Monte Carlo uncertainty is reported in
// std_error (zero for the closed-form kinds). The one-argument form loads
// the reference for (q, H) through reference_sample; the overload takes an
// explicit sample whose provenance must match (q, H).
PredictedLimit predicted_limit(SeriesKind kind, unsigned q, double H);
PredictedLimit predicted_limit(SeriesKind kind, unsigned q, double H,
                               const EmpiricalSample& reference);

// The eps-dependent normalization whose limit predicted_limit states:
// value / (-log(eps/c)) for the f kinds and (eps/c)^2 value, resp.
// (eps/c)^(1/beta) value, for g1, resp. g2, with c the matching
// normalization constant. Throws RegimeError when the constants do not
// match the estimate and std::invalid_argument at the removable point
// eps = c of the f kinds.
double normalized_ratio(const SeriesEstimate& est,
                        const NormalizationConstants& consts);

// E|Z|^r for standard normal Z and r > -1: 2^(r/2) Gamma((r+1)/2) /
// sqrt(pi).
double normal_abs_moment(double r);

struct EpsilonGrid {
    std::vector<double> values;
};

// Geometric grid eps0 * ratio^i, i = 0..count-1. Requires eps0 > 0,
// 0 < ratio < 1, count >= 1.
EpsilonGrid make_epsilon_grid(double eps0, double ratio, std::size_t count);

// Eight points from 3 sqrt(q!) downward with ratio 10^(-1/2), so the
// leading threshold sits at three standard deviations of V_1 and the grid
// spans three and a half decades.
EpsilonGrid default_epsilon_grid(unsigned q);

// Wraps an explicit grid; values must be positive, finite, and strictly
// decreasing.
EpsilonGrid epsilon_grid_from(std::vector<double> values);

}  // namespace fbmvar
