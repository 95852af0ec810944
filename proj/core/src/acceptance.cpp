#include "fbmvar/acceptance.hpp"

#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fbmvar/fgn.hpp"
#include "fbmvar/hermite.hpp"
#include "fbmvar/kahan.hpp"
#include "fbmvar/limitlaws.hpp"
#include "fbmvar/rng.hpp"
#include "fbmvar/series.hpp"
#include "fbmvar/variations.hpp"

namespace fbmvar {

namespace {

std::string num(double v, int precision = 6) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

struct CheckList {
    std::vector<CheckResult> checks;

    void check(std::string name, bool ok, std::string detail = "",
               bool expected_pass = true) {
        checks.push_back(
            {std::move(name), ok, expected_pass, std::move(detail)});
    }
};

std::filesystem::path resolve_cache_dir(const AcceptanceOptions& opt) {
    if (!opt.cache_dir.empty()) return std::filesystem::path(opt.cache_dir);
    return reference_cache_dir();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void criterion_hermite(const AcceptanceOptions&, CheckList& cl) {
    double max_dev = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double x = -4.0 + 0.02 * i;
        const double closed[5] = {1.0, x, x * x - 1.0, x * x * x - 3.0 * x,
                                  x * x * x * x - 6.0 * x * x + 3.0};
        for (unsigned q = 0; q <= 4; ++q) {
            const double dev = std::abs(hermite_eval(q, x) - closed[q]) /
                               std::max(1.0, std::abs(closed[q]));
            max_dev = std::max(max_dev, dev);
        }
    }
    cl.check("recurrence matches the closed forms through order four",
             max_dev <= 1e-12,
             "largest relative deviation " + num(max_dev, 3) +
                 " over 401 points of [-4, 4]");

    bool parity_ok = true;
    for (unsigned q = 0; q <= 8 && parity_ok; ++q) {
        const double sign = (q % 2 == 0) ? 1.0 : -1.0;
        for (int i = 0; i <= 400; ++i) {
            const double x = -4.0 + 0.02 * i;
            if (hermite_eval(q, -x) != sign * hermite_eval(q, x)) {
                parity_ok = false;
                break;
            }
        }
    }
    cl.check("parity identity holds bitwise through order eight", parity_ok);
}

void criterion_autocovariance(const AcceptanceOptions& opt, CheckList& cl) {
    const double hurst[] = {0.3, 0.5, 0.7, 0.9};
    constexpr std::size_t n = 512;
    constexpr int replicas = 200;
    constexpr int lags = 6;
    const std::uint64_t seed = derive_key(opt.master_seed, 2);
    for (int hi = 0; hi < 4; ++hi) {
        const double H = hurst[hi];
        FgnSynthesizer synth(H, n);
        RandomStream stream(derive_key(seed, static_cast<std::uint64_t>(hi)));
        std::vector<double> x(n);
        std::vector<std::array<double, lags>> gam(replicas);
        for (int r = 0; r < replicas; ++r) {
            synth.sample(stream, x.data());
            for (int k = 0; k < lags; ++k) {
                KahanSum s;
                for (std::size_t i = 0; i + k < n; ++i) s.add(x[i] * x[i + k]);
                gam[r][k] = s.value() / static_cast<double>(n - k);
            }
        }
        double max_z = 0.0;
        int worst = 0;
        for (int k = 0; k < lags; ++k) {
            KahanSum s1;
            for (int r = 0; r < replicas; ++r) s1.add(gam[r][k]);
            const double mean = s1.value() / replicas;
            KahanSum s2;
            for (int r = 0; r < replicas; ++r) {
                const double d = gam[r][k] - mean;
                s2.add(d * d);
            }
            const double se =
                std::sqrt(s2.value() / (replicas - 1) / replicas);
            const double z =
                std::abs(mean - fgn_autocovariance(H, k)) / se;
            if (z > max_z) {
                max_z = z;
                worst = k;
            }
        }
        cl.check("H = " + num(H, 2) +
                     ": sample autocovariance at lags 0..5 within 4 SE",
                 max_z <= 4.0,
                 "largest |z| = " + num(max_z, 3) + " at lag " +
                     std::to_string(worst) + ", " +
                     std::to_string(replicas) + " replicas of n = 512");
    }
}

void criterion_second_moment(const AcceptanceOptions& opt, CheckList& cl) {
    const unsigned qs[] = {2, 3};
    const double hurst[] = {0.3, 0.5, 0.7, 0.9};
    const std::size_t ns[] = {256, 1024};
    constexpr int m = 400;
    const std::uint64_t seed = derive_key(opt.master_seed, 3);
    std::uint64_t combo = 0;
    for (const unsigned q : qs) {
        double max_z = 0.0;
        std::string worst;
        for (const double H : hurst) {
            for (const std::size_t n : ns) {
                FgnSynthesizer synth(H, n);
                RandomStream stream(derive_key(seed, combo++));
                std::vector<double> x(n);
                KahanSum s2, s4;
                for (int r = 0; r < m; ++r) {
                    synth.sample(stream, x.data());
                    const double v = compute_vn(q, x.data(), n);
                    s2.add(v * v);
                    s4.add(v * v * v * v);
                }
                const double var = s2.value() / m;
                const double m4 = s4.value() / m;
                const double se =
                    std::sqrt(std::max(0.0, m4 - var * var) / m);
                const double z =
                    std::abs(var - exact_second_moment(q, H, n)) / se;
                if (z > max_z) {
                    max_z = z;
                    worst = "H = " + num(H, 2) + ", n = " + std::to_string(n);
                }
            }
        }
        cl.check("q = " + std::to_string(q) +
                     ": sampled E[V^2] within 4 SE over the (H, n) grid",
                 max_z <= 4.0,
                 "largest |z| = " + num(max_z, 3) + " at " + worst + ", " +
                     std::to_string(m) + " replicas per cell");
    }
    double max_rel = 0.0;
    for (const unsigned q : qs) {
        for (const double H : hurst) {
            const double folded = exact_second_moment(q, H, 512);
            const double brute = exact_second_moment_brute(q, H, 512);
            max_rel = std::max(max_rel, std::abs(folded - brute) / brute);
        }
    }
    cl.check("folded second moment matches the double sum at n = 512",
             max_rel <= 1e-10, "largest relative gap " + num(max_rel, 3));
}

void criterion_gaussian_rate(const AcceptanceOptions& opt, CheckList& cl) {
    constexpr std::uint32_t m = 5000;
    std::map<std::uint64_t, double> ks;
    for (int k = 6; k <= 12; ++k) {
        const auto n = std::uint64_t{1} << k;
        const auto s = draw_variation_sample(
            2, 0.5, static_cast<std::size_t>(n), m, opt.master_seed,
            opt.workers);
        ks[n] = ks_distance(s, normal_cdf);
    }
    cl.check("Kolmogorov distance to the normal law below 0.05 at n = 4096",
             ks[4096] < 0.05,
             "measured " + num(ks[4096], 4) + " from " + std::to_string(m) +
                 " draws");
    cl.check("distance shrinks from n = 64 to n = 4096", ks[4096] < ks[64],
             num(ks[64], 4) + " -> " + num(ks[4096], 4));
    const auto fit = fit_rate_slope(ks);
    cl.check(
        "fitted log-log slope within [-0.7, -0.3]",
        fit.slope >= -0.7 && fit.slope <= -0.3,
        "measured " + num(fit.slope, 4) + " +- " + num(fit.std_error, 3) +
            "; the distributional gap, about 0.19/sqrt(n) here, sinks below "
            "the 0.87/sqrt(m) sampling floor of the distance estimator past "
            "n = 2^9, so the log-log curve flattens and the fit lands near "
            "-0.2 at every seed; the window would need m near 1e5 (see "
            "README, known acceptance deviations)",
        false);
}

void criterion_hermite_reference(const AcceptanceOptions& opt,
                                 CheckList& cl) {
    ReferenceSpec spec;
    const auto dir = resolve_cache_dir(opt);
    const auto ref = reference_sample(spec, dir, opt.workers);
    constexpr std::uint32_t m = 3000;
    constexpr std::size_t n = 1024;
    const auto sample =
        draw_variation_sample(2, 0.9, n, m, opt.master_seed, opt.workers);
    const double ks = ks_distance(sample, ref);
    cl.check("two-sample Kolmogorov distance to the reference below 0.08",
             ks < 0.08,
             "measured " + num(ks, 4) + ", " + std::to_string(m) +
                 " draws at n = 1024 against " + std::to_string(ref.size()) +
                 " cached reference draws");

    KahanSum s2, s4;
    for (const double z : sample.values()) {
        s2.add(z * z);
        s4.add(z * z * z * z);
    }
    const double var = s2.value() / m;
    const double m4 = s4.value() / m;
    const double se = std::sqrt(std::max(0.0, m4 - var * var) / m);
    const auto& consts = constants_for(2, 0.9);
    const double beta = hermite_scaling_exponent(2, 0.9);
    const double target =
        exact_second_moment(2, 0.9, n) /
        (consts.c2 * consts.c2 * std::pow(static_cast<double>(n), 2.0 * beta));
    const double z = std::abs(var - target) / se;
    cl.check("sample variance within 4 SE of the exact finite-n ratio",
             z <= 4.0,
             "measured " + num(var, 6) + " against " + num(target, 6) +
                 ", |z| = " + num(z, 3));
}

void criterion_exact_series(const AcceptanceOptions&, CheckList& cl) {
    const double a =
        0.1 * 0.1 * normal_series_exact(NormalSeriesShape::g, 1.0, 0.1);
    cl.check("eps^2-scaled tail sum at eps = 0.1 within 0.995 +- 0.005",
             std::abs(a - 0.995) <= 0.005, "measured " + num(a, 10));
    const double b =
        1e-4 * normal_series_exact(NormalSeriesShape::g, 1.0, 0.01);
    cl.check("eps^2-scaled tail sum at eps = 0.01 within 1.000 +- 0.001",
             std::abs(b - 1.0) <= 0.001, "measured " + num(b, 10));
}

void criterion_log_ratio(const AcceptanceOptions&, CheckList& cl) {
    std::vector<double> ratios;
    for (int k = 3; k <= 8; ++k) {
        ratios.push_back(q1_special(0.5, std::pow(10.0, -k)).spitzer_ratio);
    }
    const double r6 = ratios[3];
    cl.check(
        "log-scaled ratio at eps = 1e-6 within 1.908 +- 0.02",
        std::abs(r6 - 1.908) <= 0.02,
        "measured " + num(r6, 7) +
            "; the stated center keeps only the leading integral of the "
            "continuation and drops its boundary term and limiting trapezoid "
            "correction, worth +0.042 at this eps; the companion check pins "
            "the full value (see README, known acceptance deviations)",
        false);
    cl.check("log-scaled ratio at eps = 1e-6 within 1.949828 +- 0.02",
             std::abs(r6 - 1.949828) <= 0.02, "measured " + num(r6, 9));
    bool increasing = true;
    for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
        if (!(ratios[i] < ratios[i + 1])) increasing = false;
    }
    const bool below = ratios.back() < 2.0;
    cl.check("ratio increases strictly toward 2 over eps = 1e-3 .. 1e-8",
             increasing && below,
             num(ratios.front(), 7) + " .. " + num(ratios.back(), 7) +
                 ", limit 2");
    double worst = 0.0;
    for (const double eps : {0.5, 0.1, 0.01}) {
        const auto em = euler_maclaurin_check(normal_tail(), 1.0, eps);
        const double recomposed = em.integral + em.boundary + em.correction;
        const double direct =
            normal_series_exact(NormalSeriesShape::f, 1.0, eps);
        const double scale = std::max(1.0, std::abs(em.series));
        worst = std::max(worst, std::abs(recomposed - em.series) / scale);
        worst = std::max(worst, std::abs(em.series - direct) / scale);
    }
    cl.check(
        "integral-plus-correction decomposition matches the direct sum to "
        "1e-8",
        worst <= 1e-8,
        "largest relative gap " + num(worst, 3) + " over eps in {0.5, 0.1, "
        "0.01}");
}

void criterion_series_limits(const AcceptanceOptions& opt, CheckList& cl) {
    const std::uint64_t seed = derive_key(opt.master_seed, 8);
    std::uint64_t max_replicas = 0;

    {
        const auto& consts = constants_for(2, 0.5);
        SeriesBudget budget;
        budget.replicas = 2000000;
        RandomStream rng(derive_key(seed, 1));
        const auto est = estimate_series(SeriesKind::g1, 2, 0.5,
                                         0.3 * consts.c1, 0.02, consts, rng,
                                         budget, opt.workers);
        const double ratio = normalized_ratio(est, consts);
        max_replicas = std::max(max_replicas, est.total_replicas);
        cl.check("unweighted Gaussian-regime sum: scaled value in [0.7, 1.3] "
                 "at eps = 0.3 c1",
                 ratio >= 0.7 && ratio <= 1.3,
                 "measured " + num(ratio, 5) + " +- " +
                     num(est.mc_stderr * 0.09, 2) + ", cutoff " +
                     std::to_string(est.n_trunc) + ", " +
                     std::to_string(est.total_replicas) + " replicas");
    }
    {
        const auto& consts = constants_for(2, 0.5);
        SeriesBudget budget;
        budget.replicas = 6000000;
        RandomStream rng(derive_key(seed, 2));
        const auto est = estimate_series(SeriesKind::f1, 2, 0.5,
                                         0.05 * consts.c1, 0.02, consts, rng,
                                         budget, opt.workers);
        const double ratio = normalized_ratio(est, consts);
        max_replicas = std::max(max_replicas, est.total_replicas);
        cl.check("log-weighted Gaussian-regime sum: scaled value in "
                 "[1.2, 2.8] at eps = 0.05 c1",
                 ratio >= 1.2 && ratio <= 2.8,
                 "measured " + num(ratio, 5) + ", cutoff " +
                     std::to_string(est.n_trunc) + ", " +
                     std::to_string(est.total_replicas) + " replicas");
    }
    {
        const auto& consts = constants_for(2, 0.9);
        ReferenceSpec spec;
        const auto ref = reference_sample(spec, resolve_cache_dir(opt),
                                          opt.workers);
        const auto predicted = predicted_limit(SeriesKind::g2, 2, 0.9, ref);
        SeriesBudget budget;
        budget.replicas = 250000;
        RandomStream rng(derive_key(seed, 3));
        const auto est = estimate_series(SeriesKind::g2, 2, 0.9,
                                         0.5 * consts.c2, 0.02, consts, rng,
                                         budget, opt.workers);
        const double ratio = normalized_ratio(est, consts);
        max_replicas = std::max(max_replicas, est.total_replicas);
        cl.check("Hermite-regime sum: scaled value within 30% of the "
                 "reference moment at eps = 0.5 c2",
                 std::abs(ratio - predicted.value) <= 0.3 * predicted.value,
                 "measured " + num(ratio, 5) + " against " +
                     num(predicted.value, 5) + " +- " +
                     num(predicted.std_error, 2) + ", cutoff " +
                     std::to_string(est.n_trunc) +
                     "; the exact value of this statistic is 0.4946 +- "
                     "0.0006, which is 69.7% of the moment: the stated "
                     "bracket needs 70%, see README, known acceptance "
                     "deviations",
                 false);
    }
    cl.check("every run stays within 1e7 replicas",
             max_replicas <= 10000000,
             "largest total " + std::to_string(max_replicas));
}

void criterion_rate_continuity(const AcceptanceOptions&, CheckList& cl) {
    double worst_join = 0.0;
    double worst_jump = 0.0;
    constexpr double d = 1e-9;
    for (unsigned q = 2; q <= 6; ++q) {
        const double at_half = rate_exponent(q, 0.5);
        worst_join = std::max(worst_join, std::abs(at_half + 0.5));
        worst_jump = std::max(
            worst_jump,
            std::abs(rate_exponent(q, 0.5 + d) - rate_exponent(q, 0.5 - d)));

        const double hstar = (2.0 * q - 3.0) / (2.0 * q - 2.0);
        const double at_star = rate_exponent(q, hstar);
        worst_join =
            std::max(worst_join, std::abs(at_star - (hstar - 1.0)));
        worst_join = std::max(
            worst_join, std::abs(at_star - (q * hstar - q + 0.5)));
        worst_jump = std::max(worst_jump,
                              std::abs(rate_exponent(q, hstar + d) -
                                       rate_exponent(q, hstar - d)));
    }
    cl.check("both branch formulas agree at each join to 1e-15, q = 2..6",
             worst_join <= 1e-15, "largest gap " + num(worst_join, 3));
    cl.check("no jump across a join at step 1e-9", worst_jump <= 1.3e-8,
             "largest two-sided increment " + num(worst_jump, 3));
}

void criterion_cli_determinism(const AcceptanceOptions& opt, CheckList& cl) {
    if (opt.cli_path.empty()) {
        cl.check("command-line binary path provided", false,
                 "pass the path of the installed binary via --cli");
        return;
    }
    namespace fs = std::filesystem;
    const auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    const auto dir =
        fs::temp_directory_path() /
        ("fbmvar-accept-" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(dir);

    const char* names[3] = {"run_a", "run_b", "run_c"};
    const unsigned workers[3] = {1, 1, 8};
    bool ran = true;
    std::string fail;
    for (int i = 0; i < 3 && ran; ++i) {
        const auto out = dir / (std::string(names[i]) + ".csv");
        const std::string cmd =
            quote(opt.cli_path) +
            " series --kind g1 --q 2 --hurst 0.5 --eps-grid 0.9,0.7,0.5"
            " --tol 0.05 --budget 1000000 --seed 7 --workers " +
            std::to_string(workers[i]) + " --out " + quote(out.string());
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            ran = false;
            fail = std::string("run ") + names[i] + " returned status " +
                   std::to_string(rc);
        }
    }
    cl.check("three series runs with workers 1, 1, 8 complete", ran,
             ran ? "seed 7, eps grid {0.9, 0.7, 0.5}, budget 1e6" : fail);
    if (ran) {
        const auto csv_a = read_file(dir / "run_a.csv");
        const auto csv_b = read_file(dir / "run_b.csv");
        const auto csv_c = read_file(dir / "run_c.csv");
        cl.check("CSV byte-identical across repeats and worker counts",
                 !csv_a.empty() && csv_a == csv_b && csv_a == csv_c,
                 std::to_string(csv_a.size()) + " bytes each");
        const auto man_a = read_file(dir / "run_a.json");
        const auto man_b = read_file(dir / "run_b.json");
        const auto man_c = read_file(dir / "run_c.json");
        cl.check("run manifest byte-identical across repeats and worker "
                 "counts",
                 !man_a.empty() && man_a == man_b && man_a == man_c,
                 std::to_string(man_a.size()) + " bytes each");
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
}

struct CriterionDef {
    const char* title;
    void (*body)(const AcceptanceOptions&, CheckList&);
    double time_budget;
};

const CriterionDef kCriteria[acceptance_criteria_count] = {
    {"Hermite evaluation matches the closed forms", criterion_hermite, 1.0},
    {"synthesizer reproduces the noise autocovariance",
     criterion_autocovariance, 60.0},
    {"variation second moments match the exact evaluation",
     criterion_second_moment, 120.0},
    {"Gaussian-regime distance decays toward the normal law",
     criterion_gaussian_rate, 600.0},
    {"Hermite-regime sample matches the frozen reference",
     criterion_hermite_reference, 600.0},
    {"closed tail sum hits its small-threshold limits",
     criterion_exact_series, 1.0},
    {"log-scaled tail ratio approaches its limit from below",
     criterion_log_ratio, 0.0},
    {"series estimates land on their predicted limits",
     criterion_series_limits, 1800.0},
    {"rate exponent is continuous across its joins",
     criterion_rate_continuity, 1.0},
    {"series runs are byte-identical across worker counts",
     criterion_cli_determinism, 300.0},
};

} // namespace

bool CriterionResult::passed() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return !checks.empty();
}

bool CriterionResult::as_documented() const {
    for (const auto& c : checks) {
        if (c.passed != c.expected_pass) return false;
    }
    return !checks.empty();
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
    if (id < 1 || id > acceptance_criteria_count) {
        throw std::invalid_argument(
            "run_criterion: id must be in 1.." +
            std::to_string(acceptance_criteria_count));
    }
    const auto& def = kCriteria[id - 1];
    CriterionResult r;
    r.id = id;
    r.title = def.title;
    CheckList cl;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        def.body(opt, cl);
    } catch (const std::exception& e) {
        cl.check("criterion body completed", false, e.what());
    }
    r.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (def.time_budget > 0.0) {
        cl.check("runtime under " + num(def.time_budget, 4) + " s",
                 r.seconds < def.time_budget, num(r.seconds, 3) + " s");
    }
    r.checks = std::move(cl.checks);
    return r;
}

void print_criterion(std::ostream& out, const CriterionResult& r) {
    char head[64];
    std::snprintf(head, sizeof head, "criterion %2d: %s  (%.1f s)  ", r.id,
                  r.passed() ? "PASS" : "FAIL", r.seconds);
    out << head << r.title << "\n";
    for (const auto& c : r.checks) {
        const char* tag;
        if (c.passed) {
            tag = c.expected_pass ? "ok" : "ok, documented as failing";
        } else {
            tag = c.expected_pass ? "FAIL" : "FAIL, documented";
        }
        out << "    [" << tag << "] " << c.name;
        if (!c.detail.empty()) out << ": " << c.detail;
        out << "\n";
    }
    out.flush();
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream& out) {
    std::vector<CriterionResult> results;
    results.reserve(acceptance_criteria_count);
    for (int id = 1; id <= acceptance_criteria_count; ++id) {
        results.push_back(run_criterion(id, opt));
        print_criterion(out, results.back());
    }
    int npass = 0;
    int ndoc = 0;
    for (const auto& r : results) {
        if (r.passed()) ++npass;
        for (const auto& c : r.checks) {
            if (!c.expected_pass && !c.passed) ++ndoc;
        }
    }
    out << npass << " of " << acceptance_criteria_count
        << " criteria pass";
    if (all_as_documented(results)) {
        out << "; every check matches its documented status (" << ndoc
            << " documented misses)";
    }
    out << "\n";
    out.flush();
    return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
    for (const auto& r : results) {
        if (!r.passed()) return false;
    }
    return !results.empty();
}

bool all_as_documented(const std::vector<CriterionResult>& results) {
    for (const auto& r : results) {
        if (!r.as_documented()) return false;
    }
    return !results.empty();
}

} // namespace fbmvar
