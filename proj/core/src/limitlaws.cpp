#include "fbmvar/limitlaws.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

#include "fbmvar/errors.hpp"
#include "fbmvar/parallel.hpp"

namespace fbmvar {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

constexpr std::array<char, 8> kRefMagic = {'H', 'E', 'R', 'M', 'R', 'E', 'F', '1'};
constexpr std::uint16_t kRefVersion = 1;
constexpr std::size_t kRefHeaderSize = 32;

// The cache file format is declared little-endian; raw field images are
// only correct on such hosts.
static_assert(std::endian::native == std::endian::little);

std::array<char, kRefHeaderSize> encode_header(const ReferenceSpec& spec) {
    std::array<char, kRefHeaderSize> buf{};
    std::memcpy(buf.data(), kRefMagic.data(), 8);
    const auto q16 = static_cast<std::uint16_t>(spec.q);
    std::memcpy(buf.data() + 8, &q16, 2);
    std::memcpy(buf.data() + 10, &kRefVersion, 2);
    std::memcpy(buf.data() + 12, &spec.H, 8);
    const auto m32 = static_cast<std::uint32_t>(spec.m_path);
    std::memcpy(buf.data() + 20, &m32, 4);
    std::memcpy(buf.data() + 24, &spec.seed, 8);
    return buf;
}

// Reads the cached sample into `values`, returning false on any mismatch
// with the spec or any corruption, in which case the caller regenerates.
bool load_reference_payload(const std::filesystem::path& file,
                            const ReferenceSpec& spec,
                            std::vector<double>& values) {
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(file, ec);
    if (ec || bytes < kRefHeaderSize + 8 || (bytes - kRefHeaderSize) % 8 != 0)
        return false;
    const std::uint64_t m = (bytes - kRefHeaderSize) / 8;
    if (m != spec.draws)
        return false;
    std::ifstream in(file, std::ios::binary);
    if (!in)
        return false;
    std::array<char, kRefHeaderSize> header;
    if (!in.read(header.data(), kRefHeaderSize))
        return false;
    if (header != encode_header(spec))
        return false;
    values.assign(static_cast<std::size_t>(m), 0.0);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(m * sizeof(double))))
        return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            return false;
        if (i > 0 && values[i] < values[i - 1])
            return false;
    }
    return true;
}

void store_reference(const std::filesystem::path& file,
                     const ReferenceSpec& spec,
                     const std::vector<double>& values) {
    std::filesystem::create_directories(file.parent_path());
    static std::atomic<unsigned> tmp_counter{0};
    std::ostringstream tmp_name;
    tmp_name << file.filename().string() << ".tmp." << ::getpid() << "."
             << tmp_counter.fetch_add(1, std::memory_order_relaxed);
    const std::filesystem::path tmp = file.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("reference cache: cannot create " + tmp.string());
        const auto header = encode_header(spec);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw std::runtime_error("reference cache: short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, file, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw std::runtime_error("reference cache: cannot rename " + tmp.string() +
                                 " to " + file.string() + ": " + ec.message());
    }
}

} // namespace

double phi_normal(double z) {
    if (!(z >= 0.0))
        throw std::invalid_argument("phi_normal: z must be >= 0");
    return std::erfc(z / kSqrt2);
}

EmpiricalSample::EmpiricalSample(std::vector<double> values,
                                 SampleProvenance provenance)
    : values_(std::move(values)), provenance_(provenance) {
    if (values_.empty())
        throw std::invalid_argument("EmpiricalSample: sample must be nonempty");
    for (double v : values_) {
        if (!std::isfinite(v))
            throw std::invalid_argument("EmpiricalSample: values must be finite");
    }
    std::sort(values_.begin(), values_.end());
    magnitudes_.resize(values_.size());
    std::transform(values_.begin(), values_.end(), magnitudes_.begin(),
                   [](double v) { return std::abs(v); });
    std::sort(magnitudes_.begin(), magnitudes_.end());
}

double empirical_tail(const EmpiricalSample& s, double z) {
    if (!(z >= 0.0))
        throw std::invalid_argument("empirical_tail: z must be >= 0");
    const auto& mag = s.magnitudes();
    const auto first_above = std::upper_bound(mag.begin(), mag.end(), z);
    return static_cast<double>(mag.end() - first_above) /
           static_cast<double>(mag.size());
}

TwoSidedTail normal_tail() {
    return {TailFamily::analytic_normal,
            [](double z) { return phi_normal(z); }};
}

TwoSidedTail make_empirical_tail(const EmpiricalSample& s) {
    return {TailFamily::empirical,
            [s](double z) { return empirical_tail(s, z); }};
}

double ks_distance(const EmpiricalSample& s,
                   const std::function<double(double)>& cdf) {
    const auto& v = s.values();
    const auto m = static_cast<double>(v.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = std::clamp(cdf(v[i]), 0.0, 1.0);
        const double below = f - static_cast<double>(i) / m;
        const double above = static_cast<double>(i + 1) / m - f;
        dist = std::max(dist, std::max(below, above));
    }
    return dist;
}

double ks_distance(const EmpiricalSample& a, const EmpiricalSample& b) {
    const auto& x = a.values();
    const auto& y = b.values();
    const auto na = static_cast<double>(x.size());
    const auto nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double dist = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= t)
            ++i;
        while (j < y.size() && y[j] <= t)
            ++j;
        dist = std::max(dist, std::abs(static_cast<double>(i) / na -
                                       static_cast<double>(j) / nb));
    }
    return dist;
}

VariationSampler::VariationSampler(unsigned q, double H, std::size_t n)
    : q_(q),
      n_(n),
      consts_(&constants_for(q, H)),
      synth_(H, n),
      buffer_(n) {}

double VariationSampler::hurst() const { return consts_->H; }

Regime VariationSampler::regime() const { return consts_->regime; }

std::size_t VariationSampler::normals_per_draw() const {
    return synth_.normals_per_sample();
}

double VariationSampler::draw(RandomStream& stream) {
    synth_.sample(stream, buffer_.data());
    const double vn = compute_vn(q_, buffer_.data(), n_);
    return normalize(vn, q_, consts_->H, n_, *consts_);
}

EmpiricalSample draw_variation_sample(unsigned q, double H, std::size_t n,
                                      std::uint32_t draws,
                                      std::uint64_t master_seed,
                                      unsigned workers) {
    if (draws == 0)
        throw std::invalid_argument("draw_variation_sample: draws must be >= 1");
    std::vector<double> out(draws);
    const std::size_t nw =
        std::min<std::size_t>(std::max(1u, workers), draws);
    std::vector<VariationSampler> samplers;
    samplers.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w)
        samplers.emplace_back(q, H, n);
    const std::size_t chunk = (draws + nw - 1) / nw;
    run_indexed_tasks(nw, static_cast<unsigned>(nw), [&](std::size_t w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min<std::size_t>(draws, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            RandomStream stream(derive_key(master_seed, i));
            out[i] = samplers[w].draw(stream);
        }
    });
    return EmpiricalSample(std::move(out),
                           SampleProvenance{q, H, n, master_seed});
}

double sample_hermite_limit(unsigned q, double H, std::size_t m_path,
                            RandomStream& rng) {
    if (regime_of(q, H) != Regime::hermite)
        throw RegimeError("sample_hermite_limit: (q, H) outside the Hermite regime");
    VariationSampler sampler(q, H, m_path);
    return sampler.draw(rng);
}

std::filesystem::path reference_cache_dir() {
    if (const char* env = std::getenv("FBMVAR_CACHE_DIR"); env && *env)
        return std::filesystem::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return std::filesystem::path(home) / ".cache" / "fbmvar";
    return std::filesystem::temp_directory_path() / "fbmvar";
}

std::filesystem::path reference_file_path(const std::filesystem::path& dir,
                                          const ReferenceSpec& spec) {
    std::uint64_t hbits = 0;
    std::memcpy(&hbits, &spec.H, sizeof(hbits));
    std::ostringstream name;
    name << "ref-q" << spec.q << "-h" << std::hex << std::setfill('0')
         << std::setw(16) << hbits << std::dec << "-p" << spec.m_path << "-d"
         << spec.draws << "-s" << std::hex << std::setw(16) << spec.seed
         << ".bin";
    return dir / name.str();
}

EmpiricalSample reference_sample(const ReferenceSpec& spec,
                                 const std::filesystem::path& dir,
                                 unsigned workers) {
    validate_hurst(spec.H);
    if (regime_of(spec.q, spec.H) != Regime::hermite)
        throw RegimeError("reference_sample: the reference law exists only in the Hermite regime");
    if (spec.draws == 0)
        throw std::invalid_argument("reference_sample: draws must be >= 1");
    if (spec.m_path == 0 || spec.m_path > 0xFFFFFFFFull)
        throw std::invalid_argument("reference_sample: m_path must fit the header's 32-bit field");
    const auto file = reference_file_path(dir, spec);
    std::vector<double> cached;
    if (load_reference_payload(file, spec, cached)) {
        return EmpiricalSample(std::move(cached),
                               SampleProvenance{spec.q, spec.H, spec.m_path,
                                                spec.seed});
    }
    EmpiricalSample sample = draw_variation_sample(
        spec.q, spec.H, static_cast<std::size_t>(spec.m_path), spec.draws,
        spec.seed, workers);
    store_reference(file, spec, sample.values());
    return sample;
}

EmpiricalSample reference_sample(const ReferenceSpec& spec, unsigned workers) {
    return reference_sample(spec, reference_cache_dir(), workers);
}

double rate_exponent(unsigned q, double H) {
    if (q == 0)
        throw std::invalid_argument("rate_exponent: q must be >= 1");
    validate_hurst(H);
    if (regime_of(q, H) == Regime::hermite)
        return 1.0 - 1.0 / (2.0 * q) - H;
    if (H <= 0.5)
        return -0.5;
    // CLT regime with H > 1/2 forces q >= 2, so the join is well defined.
    const double join = (2.0 * q - 3.0) / (2.0 * q - 2.0);
    if (H < join)
        return H - 1.0;
    return q * H - q + 0.5;
}

SlopeFit fit_rate_slope(const std::map<std::uint64_t, double>& ks_by_n) {
    if (ks_by_n.size() < 4)
        throw DegenerateFit("fit_rate_slope: need at least 4 grid points");
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(ks_by_n.size());
    ys.reserve(ks_by_n.size());
    for (const auto& [n, ks] : ks_by_n) {
        if (n == 0)
            throw std::invalid_argument("fit_rate_slope: grid sizes must be >= 1");
        if (!std::isfinite(ks) || !(ks > 0.0))
            throw DegenerateFit("fit_rate_slope: every distance must be positive");
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(ks));
    }
    const auto m = static_cast<double>(xs.size());
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= m;
    ybar /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (!(sxx > 0.0))
        throw DegenerateFit("fit_rate_slope: grid sizes must be distinct");
    const double slope = sxy / sxx;
    const double intercept = ybar - slope * xbar;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - intercept - slope * xs[i];
        rss += r * r;
    }
    const double sigma_sq = rss / (m - 2.0);
    return SlopeFit{slope, std::sqrt(sigma_sq / sxx)};
}

} // namespace fbmvar
