#pragma once

#include <cstdint>

namespace fbmvar {

// Probabilists' Hermite polynomial H_q(x): H_0 = 1, H_1 = x,
// H_{q+1}(x) = x H_q(x) - q H_{q-1}(x).
double hermite_eval(unsigned q, double x);

// Covariance of H_q applied to a standard Gaussian pair with correlation
// rho: E[H_q(X) H_q(Y)] = q! * rho^q.
double hermite_mehler_cov(unsigned q, double rho);

// q! as a double, exact for q <= 20.
double factorial(unsigned q);

} // namespace fbmvar
