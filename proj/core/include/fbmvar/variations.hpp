#pragma once

#include <cstddef>
#include <vector>

namespace fbmvar {

enum class Regime { clt, hermite };

const char* regime_name(Regime r);

// CLT regime for H < 1 - 1/(2q), Hermite regime for H > 1 - 1/(2q).
// Throws RegimeError when H is within 1e-13 of the boundary, where neither
// normalization applies.
Regime regime_of(unsigned q, double H);

// beta = 1 - q(1-H), the growth exponent of the Hermite-regime
// normalization n^beta. Positive exactly in the Hermite regime.
double hermite_scaling_exponent(unsigned q, double H);

// V_n = sum_k H_q(x_k) over the standardized increments.
double compute_vn(unsigned q, const double* increments, std::size_t n);
double compute_vn(unsigned q, const std::vector<double>& increments);

// E[V_n^2] = q! * sum_{|k| < n} (n - |k|) rho_H(k)^q, folded to O(n).
double exact_second_moment(unsigned q, double H, std::size_t n);

// Same quantity by the O(n^2) double sum over index pairs; cross-check only.
double exact_second_moment_brute(unsigned q, double H, std::size_t n);

struct ConstantWithError {
    double value;
    double error; // certified absolute error on value
};

// c1 = sqrt(q! * sum_{k in Z} rho_H(k)^q), the limit of sqrt(E[V_n^2]/n)
// in the CLT regime. The lag sum runs to K = 1e5; the remainder is the
// power-law tail a^q * sum_{k>K} k^{(2H-2)q} evaluated by Hurwitz zeta,
// with the deviation of rho from a*k^{2H-2} bounded analytically, so the
// reported error is certified and <= 1e-8. Requires q >= 2: at q = 1 the
// lag series telescopes to zero and no positive constant exists.
ConstantWithError c1_constant(unsigned q, double H);

// c2 = lim n^{-beta} sqrt(E[V_n^2]) in the Hermite regime, estimated by
// fitting A + B*n^{-delta} to n^{-2 beta} E[V_n^2] on the geometric grid
// n = 2^10..2^20; the reported error combines the fit residual with the
// size of the correction term at the largest n.
ConstantWithError c2_constant(unsigned q, double H);

struct NormalizationConstants {
    unsigned q;
    double H;
    Regime regime;
    double c1 = 0.0, err1 = 0.0; // meaningful only in the CLT regime
    double c2 = 0.0, err2 = 0.0; // meaningful only in the Hermite regime
};

// Computes the constant for the regime of (q, H), memoized; safe for
// concurrent callers.
const NormalizationConstants& constants_for(unsigned q, double H);

// Z_n^(1) = V_n / (c1 sqrt(n)) in the CLT regime,
// Z_n^(2) = V_n / (c2 n^beta) in the Hermite regime.
// Throws RegimeError if consts was built for a different (q, H).
double normalize(double vn, unsigned q, double H, std::size_t n,
                 const NormalizationConstants& consts);

// Certified majorants on the variance growth, used to truncate series:
// E[V_n^2] <= coefficient * n in the CLT regime (sum of |rho|^q over all
// lags, rounded up), and <= coefficient * n^{2 beta} in the Hermite regime.
double variance_majorant_coefficient(unsigned q, double H);

} // namespace fbmvar
