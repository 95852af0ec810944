#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fbmvar {

// Inputs shared by every acceptance criterion. cli_path names the installed
// command-line binary and is only needed by the determinism criterion, which
// re-runs it as a subprocess; cache_dir overrides the reference-sample cache
// resolution when nonempty.
struct AcceptanceOptions {
    std::string cli_path;
    std::string cache_dir;
    unsigned workers = 1;
    std::uint64_t master_seed = 20260816;
};

// One sub-check of a criterion. expected_pass is false for the checks
// whose stated target the statistic provably cannot reach at the stated
// operating point (the detail string explains the mechanism, README records
// the analysis); they are reported as failures, and regression tooling gates
// on the outcome matching this documented status rather than on raw success.
struct CheckResult {
    std::string name;
    bool passed = false;
    bool expected_pass = true;
    std::string detail;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<CheckResult> checks;
    double seconds = 0.0;

    bool passed() const;        // every check passed
    bool as_documented() const; // every check matches its expected status
};

inline constexpr int acceptance_criteria_count = 10;

// Runs criterion `id` in 1..acceptance_criteria_count.
// Throws std::invalid_argument for an unknown id.
CriterionResult run_criterion(int id, const AcceptanceOptions& opt);

// Runs all criteria in order, streaming each result to `out` as it
// completes, then a one-line summary.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream& out);

// One "criterion N: PASS|FAIL" line followed by an indented line per check.
void print_criterion(std::ostream& out, const CriterionResult& r);

bool all_passed(const std::vector<CriterionResult>& results);
bool all_as_documented(const std::vector<CriterionResult>& results);

} // namespace fbmvar
