#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbmvar/acceptance.hpp"
#include "fbmvar/errors.hpp"
#include "fbmvar/fgn.hpp"
#include "fbmvar/limitlaws.hpp"
#include "fbmvar/rng.hpp"
#include "fbmvar/series.hpp"
#include "fbmvar/variations.hpp"
#include "fbmvar/version.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(std::uint64_t v) {
    return std::to_string(v);
}

// CSV and run-manifest routing: with --out the CSV goes to the file and the
// manifest to the same path with a .json extension; without it the CSV goes
// to stdout and the manifest to stderr, so piped CSV stays clean.
struct OutputTarget {
    std::string out;

    void write_csv(const std::string& body) const {
        if (out.empty()) {
            std::cout << body;
            return;
        }
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::invalid_argument("--out: cannot open '" + out +
                                        "' for writing");
        }
        f << body;
    }

    void write_manifest(const json& manifest) const {
        if (out.empty()) {
            std::cerr << manifest.dump() << "\n";
            return;
        }
        auto path = std::filesystem::path(out);
        path.replace_extension(".json");
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::invalid_argument("--out: cannot open '" +
                                        path.string() + "' for writing");
        }
        f << manifest.dump(2) << "\n";
    }
};

struct SimulateArgs {
    double hurst = 0.5;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    OutputTarget target;
};

int run_simulate(const SimulateArgs& a) {
    fbmvar::FgnSynthesizer synth(a.hurst, static_cast<std::size_t>(a.n));
    fbmvar::RandomStream stream(a.seed);
    const auto increments = synth.sample(stream);

    const double step_std = std::pow(static_cast<double>(a.n), -a.hurst);
    std::ostringstream csv;
    csv << "k,t,B_t,increment_std\n";
    csv << "0,0,0,0\n";
    double prefix = 0.0;
    for (std::uint64_t k = 1; k <= a.n; ++k) {
        prefix += increments[k - 1];
        const double t = static_cast<double>(k) / static_cast<double>(a.n);
        csv << k << "," << fmt(t) << "," << fmt(step_std * prefix) << ","
            << fmt(step_std) << "\n";
    }

    const auto& info = synth.info();
    json manifest = {
        {"H", a.hurst},
        {"embedding_size", info.embedding_size},
        {"generator_name", fbmvar::synthesis_method_name(info.method)},
        {"n", a.n},
        {"seed", a.seed},
        {"version", fbmvar::version_string},
    };
    a.target.write_csv(csv.str());
    a.target.write_manifest(manifest);
    return 0;
}

struct ConstantsArgs {
    unsigned q = 2;
    double hurst = 0.5;
    OutputTarget target;
};

int run_constants(const ConstantsArgs& a) {
    const auto& c = fbmvar::constants_for(a.q, a.hurst);
    json doc;
    if (c.regime == fbmvar::Regime::clt) {
        doc["c1"] = c.c1;
        doc["certified_error"] = c.err1;
    } else {
        doc["c2"] = c.c2;
        doc["certified_error"] = c.err2;
    }
    doc["regime"] = fbmvar::regime_name(c.regime);
    doc["version"] = fbmvar::version_string;
    if (a.target.out.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream f(a.target.out, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::invalid_argument("--out: cannot open '" +
                                        a.target.out + "' for writing");
        }
        f << doc.dump(2) << "\n";
    }
    return 0;
}

struct RatesArgs {
    unsigned q = 2;
    double hurst = 0.5;
    std::vector<std::uint64_t> n_grid;
    std::uint32_t m = 2000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    OutputTarget target;
};

int run_rates(const RatesArgs& a) {
    if (a.n_grid.empty()) {
        throw std::invalid_argument("--n-grid: at least one grid point is required");
    }
    const auto regime = fbmvar::regime_of(a.q, a.hurst);
    const double exponent = fbmvar::rate_exponent(a.q, a.hurst);

    // Standard deviation of the Kolmogorov statistic under the null is
    // 0.2603 / sqrt(m); the two-sample variant sees the pooled effective
    // sample size m M / (m + M) against a reference of size M.
    const double kolmogorov_std = 0.26033;

    std::optional<fbmvar::EmpiricalSample> reference;
    if (regime == fbmvar::Regime::hermite) {
        fbmvar::ReferenceSpec spec;
        spec.q = a.q;
        spec.H = a.hurst;
        reference = fbmvar::reference_sample(spec, a.workers);
    }

    std::ostringstream csv;
    csv << "n,ks,stderr,predicted_exponent\n";
    std::map<std::uint64_t, double> ks_by_n;
    for (const auto n : a.n_grid) {
        const auto sample = fbmvar::draw_variation_sample(
            a.q, a.hurst, static_cast<std::size_t>(n), a.m, a.seed, a.workers);
        double ks = 0.0;
        double m_eff = static_cast<double>(a.m);
        if (regime == fbmvar::Regime::clt) {
            ks = fbmvar::ks_distance(sample, fbmvar::normal_cdf);
        } else {
            ks = fbmvar::ks_distance(sample, *reference);
            const double mm = static_cast<double>(a.m);
            const double rr = static_cast<double>(reference->size());
            m_eff = mm * rr / (mm + rr);
        }
        ks_by_n[n] = ks;
        csv << n << "," << fmt(ks) << "," << fmt(kolmogorov_std / std::sqrt(m_eff))
            << "," << fmt(exponent) << "\n";
    }

    json manifest = {
        {"H", a.hurst},
        {"m", a.m},
        {"predicted_exponent", exponent},
        {"q", a.q},
        {"seed", a.seed},
        {"version", fbmvar::version_string},
    };
    if (ks_by_n.size() >= 4) {
        const auto fit = fbmvar::fit_rate_slope(ks_by_n);
        manifest["slope"] = fit.slope;
        manifest["slope_std_error"] = fit.std_error;
    }
    a.target.write_csv(csv.str());
    a.target.write_manifest(manifest);
    return 0;
}

struct SeriesArgs {
    std::string kind_name = "g1";
    unsigned q = 2;
    double hurst = 0.5;
    std::vector<double> eps_grid;
    double tol = 0.02;
    std::uint64_t budget = 2000000;
    std::uint64_t n_cap = 10000000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    OutputTarget target;
};

int run_series(const SeriesArgs& a) {
    const auto kind = fbmvar::series_kind_from_name(a.kind_name);
    const auto& consts = fbmvar::constants_for(a.q, a.hurst);
    const auto grid = a.eps_grid.empty()
                          ? fbmvar::default_epsilon_grid(a.q)
                          : fbmvar::epsilon_grid_from(a.eps_grid);
    const auto predicted = fbmvar::predicted_limit(kind, a.q, a.hurst);

    fbmvar::SeriesBudget budget;
    budget.replicas = a.budget;
    budget.n_cap = a.n_cap;

    std::ostringstream csv;
    csv << "epsilon,value,mc_stderr,n_trunc,remainder_bound,"
           "normalized_ratio,predicted_limit\n";
    json schedule = json::array();
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double eps = grid.values[i];
        fbmvar::RandomStream stream(fbmvar::derive_key(a.seed, i));
        const auto est = fbmvar::estimate_series(kind, a.q, a.hurst, eps,
                                                 a.tol, consts, stream,
                                                 budget, a.workers);
        const double ratio = fbmvar::normalized_ratio(est, consts);
        csv << fmt(eps) << "," << fmt(est.value) << "," << fmt(est.mc_stderr)
            << "," << est.n_trunc << "," << fmt(est.remainder_bound) << ","
            << fmt(ratio) << "," << fmt(predicted.value) << "\n";
        std::uint64_t rmin = est.replicas_per_n.empty() ? 0 : est.replicas_per_n[0];
        std::uint64_t rmax = rmin;
        for (const auto r : est.replicas_per_n) {
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
        schedule.push_back({
            {"epsilon", eps},
            {"n_trunc", est.n_trunc},
            {"replicas_max", rmax},
            {"replicas_min", rmin},
            {"total_replicas", est.total_replicas},
        });
    }

    json manifest = {
        {"budget", {{"n_cap", a.n_cap}, {"replicas", a.budget}}},
        {"schedule", schedule},
        {"seed", a.seed},
        {"versions", {{"fbmvar", fbmvar::version_string}}},
    };
    a.target.write_csv(csv.str());
    a.target.write_manifest(manifest);
    return 0;
}

struct VerifyArgs {
    std::string cache_dir;
    unsigned workers = 1;
    std::uint64_t seed = 20260816;
    int only = 0;
};

int run_verify(const VerifyArgs& a, const char* self) {
    fbmvar::AcceptanceOptions opt;
    opt.cli_path = self;
    opt.cache_dir = a.cache_dir;
    opt.workers = a.workers;
    opt.master_seed = a.seed;
    if (a.only != 0) {
        const auto r = fbmvar::run_criterion(a.only, opt);
        fbmvar::print_criterion(std::cout, r);
        return r.passed() ? 0 : 1;
    }
    const auto results = fbmvar::run_acceptance(opt, std::cout);
    return fbmvar::all_passed(results) ? 0 : 1;
}

struct ReportArgs {
    std::vector<std::string> inputs;
    OutputTarget target;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

int run_report(const ReportArgs& a) {
    std::ostringstream csv;
    csv << "source,epsilon,normalized_ratio,predicted_limit,gap\n";
    for (const auto& path : a.inputs) {
        std::ifstream f(path);
        if (!f) {
            throw std::invalid_argument("--inputs: cannot open '" + path + "'");
        }
        std::string line;
        if (!std::getline(f, line)) {
            throw std::invalid_argument("--inputs: '" + path + "' is empty");
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto header = split_csv_line(line);
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
        for (const char* need : {"epsilon", "normalized_ratio", "predicted_limit"}) {
            if (col.find(need) == col.end()) {
                throw std::invalid_argument("--inputs: '" + path +
                                            "' has no column '" + need + "'");
            }
        }
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() < header.size()) {
                throw std::invalid_argument("--inputs: '" + path +
                                            "' has a short row");
            }
            const double ratio = std::stod(fields[col["normalized_ratio"]]);
            const double predicted = std::stod(fields[col["predicted_limit"]]);
            csv << path << "," << fields[col["epsilon"]] << "," << fmt(ratio)
                << "," << fmt(predicted) << "," << fmt(ratio - predicted)
                << "\n";
        }
    }
    a.target.write_csv(csv.str());
    return 0;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

// Reads a plain key=value file into --key=value tokens. The caller splices
// them in right after the subcommand name, so explicit flags, which come
// later, win under the take-last policy, and an unknown key surfaces as an
// ordinary unrecognized-flag parse error.
std::vector<std::string> load_config_tokens(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::invalid_argument("--config: cannot open '" + path + "'");
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::invalid_argument("--config: '" + stripped +
                                        "' is not a key=value line");
        }
        const auto key = trim(stripped.substr(0, eq));
        const auto value = trim(stripped.substr(eq + 1));
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variation statistics of fractional Brownian motion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fbmvar::version_string));
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.footer("Every subcommand accepts --config FILE holding plain "
               "key=value lines\n(keys name long flags without the dashes); "
               "explicit flags override the file.");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand(
        "simulate", "Sample a fractional Brownian path on the grid k/n");
    simulate->add_option("--hurst", sim.hurst, "Hurst parameter in (0,1)")
        ->required();
    simulate->add_option("--n", sim.n, "Number of increments")
        ->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Stream key for the normals");
    simulate->add_option("--out", sim.target.out,
                         "CSV path; the run manifest goes next to it as .json");

    ConstantsArgs con;
    auto* constants = app.add_subcommand(
        "constants", "Resolve the variance normalization constant for (q, H)");
    constants->add_option("--q", con.q, "Hermite order, >= 2")->required();
    constants->add_option("--hurst", con.hurst, "Hurst parameter in (0,1)")
        ->required();
    constants->add_option("--out", con.target.out, "JSON path (default stdout)");

    RatesArgs rates_args;
    auto* rates = app.add_subcommand(
        "rates", "Kolmogorov distance of the normalized variation per grid n");
    rates->add_option("--q", rates_args.q, "Hermite order, >= 2")->required();
    rates->add_option("--hurst", rates_args.hurst, "Hurst parameter in (0,1)")
        ->required();
    rates->add_option("--n-grid", rates_args.n_grid,
                      "Comma separated grid sizes")
        ->required()
        ->delimiter(',');
    rates->add_option("--m", rates_args.m, "Monte Carlo draws per grid point")
        ->check(CLI::PositiveNumber);
    rates->add_option("--seed", rates_args.seed, "Master stream key");
    rates->add_option("--workers", rates_args.workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    rates->add_option("--out", rates_args.target.out,
                      "CSV path; the slope fit goes next to it as .json");

    SeriesArgs ser;
    auto* series = app.add_subcommand(
        "series", "Monte Carlo estimate of a variation tail series over an "
                  "epsilon grid");
    series->add_option("--kind", ser.kind_name, "One of f1, f2, g1, g2")
        ->required()
        ->check(CLI::IsMember({"f1", "f2", "g1", "g2"}));
    series->add_option("--q", ser.q, "Hermite order, >= 2")->required();
    series->add_option("--hurst", ser.hurst, "Hurst parameter in (0,1)")
        ->required();
    series->add_option("--eps-grid", ser.eps_grid,
                       "Comma separated epsilons (default: geometric grid "
                       "from 3 sqrt(q!) with ratio 10^-1/2)")
        ->delimiter(',');
    series->add_option("--tol", ser.tol, "Truncation tolerance")
        ->check(CLI::PositiveNumber);
    series->add_option("--budget", ser.budget,
                       "Total replica budget per epsilon")
        ->check(CLI::PositiveNumber);
    series->add_option("--n-cap", ser.n_cap, "Largest admissible series cutoff")
        ->check(CLI::PositiveNumber);
    series->add_option("--seed", ser.seed, "Master stream key");
    series->add_option("--workers", ser.workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    series->add_option("--out", ser.target.out,
                       "CSV path; the run manifest goes next to it as .json");

    VerifyArgs ver;
    auto* verify = app.add_subcommand(
        "verify", "Run the acceptance criteria and print one line per result");
    verify->add_option("--cache-dir", ver.cache_dir,
                       "Reference cache directory (default: resolved from "
                       "FBMVAR_CACHE_DIR, then ~/.cache/fbmvar)");
    verify->add_option("--workers", ver.workers, "Worker threads")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", ver.seed, "Master seed for the criteria");
    verify->add_option("--only", ver.only, "Run a single criterion by number")
        ->check(CLI::Range(1, 10));

    ReportArgs rep;
    auto* report = app.add_subcommand(
        "report", "Merge series CSV runs into one ratio-versus-limit table");
    report->add_option("inputs", rep.inputs, "Series CSV files")
        ->required()
        ->expected(-1);
    report->add_option("--out", rep.target.out, "CSV path (default stdout)");

    std::vector<std::string> args;
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config") {
            if (i + 1 >= argc) {
                std::cerr << "--config needs a file path\n";
                return 2;
            }
            config_path = argv[++i];
        } else if (a.rfind("--config=", 0) == 0) {
            config_path = a.substr(9);
        } else {
            args.push_back(a);
        }
    }
    if (!config_path.empty()) {
        std::vector<std::string> tokens;
        try {
            tokens = load_config_tokens(config_path);
        } catch (const std::invalid_argument& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
        auto sub = args.begin();
        while (sub != args.end() && (sub->empty() || (*sub)[0] == '-')) ++sub;
        if (sub == args.end()) {
            std::cerr << "--config needs a subcommand to apply to\n";
            return 2;
        }
        args.insert(std::next(sub), tokens.begin(), tokens.end());
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (constants->parsed()) return run_constants(con);
        if (rates->parsed()) return run_rates(rates_args);
        if (series->parsed()) return run_series(ser);
        if (verify->parsed()) return run_verify(ver, argv[0]);
        if (report->parsed()) return run_report(rep);
    } catch (const fbmvar::BudgetExceeded& e) {
        json err = {
            {"budget", e.budget},
            {"error", "BudgetExceeded"},
            {"n_trunc", e.n_trunc},
            {"replicas_needed", e.replicas_needed},
            {"what", e.what()},
        };
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const fbmvar::SynthesisError& e) {
        json err = {{"error", "SynthesisError"}, {"what", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const fbmvar::RegimeError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
