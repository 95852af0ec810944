#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbmvar {

// Parameter combinations outside the domain of a statistic, e.g. a Hurst
// index sitting exactly on the boundary between the Gaussian and
// non-Gaussian regimes, where neither normalization applies.
class RegimeError : public std::domain_error {
public:
    explicit RegimeError(const std::string& what) : std::domain_error(what) {}
};

// Failure to realize a Gaussian vector with the requested covariance,
// e.g. a circulant embedding whose spectrum is negative beyond tolerance
// and no fallback was permitted.
class SynthesisError : public std::runtime_error {
public:
    explicit SynthesisError(const std::string& what) : std::runtime_error(what) {}
};

// A series estimate cannot reach the requested accuracy within the sample
// budget. Carries what would have been needed so callers can re-plan.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, std::uint64_t n_trunc,
                   std::uint64_t replicas_needed, std::uint64_t budget)
        : std::runtime_error(what),
          n_trunc(n_trunc),
          replicas_needed(replicas_needed),
          budget(budget) {}

    std::uint64_t n_trunc;
    std::uint64_t replicas_needed;
    std::uint64_t budget;
};

// A least-squares fit whose design matrix is rank deficient or whose
// residuals do not shrink, so the fitted exponent is meaningless.
class DegenerateFit : public std::runtime_error {
public:
    explicit DegenerateFit(const std::string& what) : std::runtime_error(what) {}
};

// An iterative refinement that failed to reach its tolerance.
class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fbmvar
