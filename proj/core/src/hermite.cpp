#include "fbmvar/hermite.hpp"

#include <cmath>

namespace fbmvar {

double hermite_eval(unsigned q, double x) {
    if (q == 0) return 1.0;
    if (q == 1) return x;
    double hm = 1.0;
    double h = x;
    for (unsigned k = 1; k < q; ++k) {
        const double hn = x * h - static_cast<double>(k) * hm;
        hm = h;
        h = hn;
    }
    return h;
}

double hermite_mehler_cov(unsigned q, double rho) {
    return factorial(q) * std::pow(rho, static_cast<double>(q));
}

double factorial(unsigned q) {
    double f = 1.0;
    for (unsigned k = 2; k <= q; ++k) f *= static_cast<double>(k);
    return f;
}

} // namespace fbmvar
