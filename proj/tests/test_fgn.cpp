#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fbmvar/errors.hpp"
#include "fbmvar/fgn.hpp"
#include "fbmvar/rng.hpp"
#include "fft.hpp"

using namespace fbmvar;

namespace {

// Mean of per-replica lag-l autocovariance estimates plus its standard
// error across replicas.
struct LagStats {
    double mean;
    double se;
};

LagStats lag_autocovariance(double H, std::size_t n, std::size_t lag, int replicas,
                            std::uint64_t seed,
                            SynthesisMethod* force = nullptr) {
    std::vector<double> est(replicas);
    FgnSynthesizer synth = force ? FgnSynthesizer(H, n, *force) : FgnSynthesizer(H, n);
    for (int r = 0; r < replicas; ++r) {
        RandomStream stream(derive_key(seed, static_cast<std::uint64_t>(r)));
        const std::vector<double> x = synth.sample(stream);
        double acc = 0.0;
        for (std::size_t k = 0; k + lag < n; ++k) acc += x[k] * x[k + lag];
        est[r] = acc / static_cast<double>(n - lag);
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= replicas;
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    var /= (replicas - 1);
    return {mean, std::sqrt(var / replicas)};
}

} // namespace

TEST_SUITE("fgn") {

TEST_CASE("hurst validation") {
    CHECK_THROWS_AS(validate_hurst(0.0), std::invalid_argument);
    CHECK_THROWS_AS(validate_hurst(1.0), std::invalid_argument);
    CHECK_THROWS_AS(validate_hurst(-0.2), std::invalid_argument);
    CHECK_THROWS_AS(validate_hurst(1.5), std::invalid_argument);
    CHECK_NOTHROW(validate_hurst(0.001));
    CHECK_NOTHROW(validate_hurst(0.999));
}

TEST_CASE("autocovariance closed-form pins") {
    // Reference values from 30-digit mpmath evaluation of the closed form.
    CHECK(fgn_autocovariance(0.7, 1) == doctest::Approx(0.31950791077289425937).epsilon(1e-15));
    CHECK(fgn_autocovariance(0.75, 2) == doctest::Approx(0.26964908660712584269).epsilon(1e-15));
    CHECK(fgn_autocovariance(0.3, 1) == doctest::Approx(-0.24214171674480095883).epsilon(1e-15));
    CHECK(fgn_autocovariance(0.9, 1) == doctest::Approx(0.74110112659224827827).epsilon(1e-15));
    CHECK(fgn_autocovariance(0.7, 7) == doctest::Approx(0.08725940183447864).epsilon(1e-14));
}

TEST_CASE("autocovariance exact special cases") {
    CHECK(fgn_autocovariance(0.3, 0) == 1.0);
    CHECK(fgn_autocovariance(0.9, 0) == 1.0);
    for (std::uint64_t k = 1; k <= 50; ++k) {
        CHECK(fgn_autocovariance(0.5, k) == 0.0);
    }
}

TEST_CASE("autocovariance large-lag series pins") {
    // The closed form loses all precision out here; pins are 30-digit
    // mpmath values of the same closed form.
    CHECK(fgn_autocovariance(0.6, 100) == doctest::Approx(0.0030142998902590429).epsilon(1e-13));
    CHECK(fgn_autocovariance(0.75, 1000) == doctest::Approx(0.011858541966790465).epsilon(1e-13));
    CHECK(fgn_autocovariance(0.9, 1000000) == doctest::Approx(0.045428928802574854).epsilon(1e-13));
    CHECK(fgn_autocovariance(0.3, 1000000) ==
          doctest::Approx(-4.7772860466433033e-10).epsilon(1e-13));
    CHECK(fgn_autocovariance(0.3, 8) == doctest::Approx(-0.0065579189032012441).epsilon(1e-13));
}

TEST_CASE("series and closed form agree at the switchover") {
    for (double H : {0.1, 0.3, 0.45, 0.6, 0.75, 0.9}) {
        const double h2 = 2.0 * H;
        for (double k : {8.0, 9.0, 12.0, 16.0}) {
            const double direct =
                0.5 * (std::pow(k + 1.0, h2) + std::pow(k - 1.0, h2) - 2.0 * std::pow(k, h2));
            CHECK(fgn_autocovariance(H, static_cast<std::uint64_t>(k)) ==
                  doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("fbm covariance") {
    CHECK(fbm_covariance(0.5, 2.0, 3.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(fbm_covariance(0.3, 0.0, 5.0) == 0.0);
    CHECK(fbm_covariance(0.75, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fbm_covariance(0.8, 2.0, 7.0) == fbm_covariance(0.8, 7.0, 2.0));
    CHECK(fbm_covariance(0.8, 3.0, 3.0) == doctest::Approx(std::pow(3.0, 1.6)).epsilon(1e-15));
    CHECK_THROWS_AS(fbm_covariance(0.8, -1.0, 2.0), std::invalid_argument);
}

TEST_CASE("circulant eigenvalues match a direct cosine sum and stay nonnegative") {
    const std::size_t M = 64;
    for (double H : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        std::vector<double> row(M + 1);
        for (std::size_t k = 0; k <= M; ++k) row[k] = fgn_autocovariance(H, k);
        const std::vector<double> eig = detail::circulant_eigenvalues(row);
        REQUIRE(eig.size() == M + 1);
        double max_eig = 0.0;
        for (double l : eig) max_eig = std::max(max_eig, l);
        for (std::size_t j = 0; j <= M; ++j) {
            double direct = row[0] + ((j % 2 == 0) ? row[M] : -row[M]);
            for (std::size_t k = 1; k < M; ++k) {
                direct += 2.0 * row[k] *
                          std::cos(M_PI * static_cast<double>(j) * static_cast<double>(k) /
                                   static_cast<double>(M));
            }
            CHECK(eig[j] == doctest::Approx(direct).epsilon(1e-10));
            CHECK(eig[j] >= -1e-10 * max_eig);
        }
        // Inverting the transform recovers the covariance row.
        std::vector<double> back = detail::circulant_eigenvalues(eig);
        for (std::size_t k = 0; k <= M; ++k) {
            CHECK(back[k] / (2.0 * static_cast<double>(M)) ==
                  doctest::Approx(row[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("synthesizer reports its path and draw count") {
    FgnSynthesizer circ(0.7, 100);
    CHECK(circ.info().method == SynthesisMethod::circulant);
    CHECK(circ.info().embedding_size == 256);
    CHECK(circ.normals_per_sample() == 256);

    FgnSynthesizer iid(0.5, 7);
    CHECK(iid.info().method == SynthesisMethod::iid);
    CHECK(iid.normals_per_sample() == 7);

    FgnSynthesizer dense(0.7, 5, SynthesisMethod::cholesky);
    CHECK(dense.info().method == SynthesisMethod::cholesky);
    CHECK(dense.normals_per_sample() == 5);

    RandomStream s(11);
    std::vector<double> out(100);
    circ.sample(s, out.data());
    CHECK(s.position() == 256);

    CHECK_THROWS_AS(FgnSynthesizer(0.7, 4, SynthesisMethod::iid), std::invalid_argument);
    CHECK_THROWS_AS(FgnSynthesizer(0.7, 0), std::invalid_argument);
    CHECK(synthesis_method_name(SynthesisMethod::circulant) ==
          doctest::String("circulant-embedding"));
}

TEST_CASE("samples are bit-identical for a fixed spec") {
    const PathSpec spec{0.7, 300, 424242};
    const std::vector<double> a = sample_fgn(spec);
    const std::vector<double> b = sample_fgn(spec);
    REQUIRE(a.size() == 300);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

    FgnSynthesizer synth(0.7, 300);
    RandomStream s(424242);
    const std::vector<double> c = synth.sample(s);
    CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("single-increment sample is standard normal") {
    double sum = 0.0, sumsq = 0.0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        const std::vector<double> x = sample_fgn({0.3, 1, derive_key(77, r)});
        REQUIRE(x.size() == 1);
        sum += x[0];
        sumsq += x[0] * x[0];
    }
    const double mean = sum / reps;
    const double var = sumsq / reps - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(reps)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("lag-1 correlation matches the analytic value") {
    const LagStats ind = lag_autocovariance(0.5, 1024, 1, 200, 900);
    CHECK(std::abs(ind.mean - 0.0) < 4.0 * ind.se);
    const LagStats dep = lag_autocovariance(0.7, 1024, 1, 200, 901);
    CHECK(std::abs(dep.mean - 0.319508) < 4.0 * dep.se);
}

TEST_CASE("sample autocovariances match across H and lags") {
    for (double H : {0.3, 0.5, 0.7, 0.9}) {
        for (std::size_t lag = 0; lag <= 5; ++lag) {
            const LagStats st =
                lag_autocovariance(H, 512, lag, 200, 1000 + static_cast<std::uint64_t>(100 * H));
            const double target = fgn_autocovariance(H, lag);
            INFO("H=", H, " lag=", lag);
            CHECK(std::abs(st.mean - target) < 4.0 * st.se);
        }
    }
}

TEST_CASE("dense path reproduces the covariance too") {
    SynthesisMethod dense = SynthesisMethod::cholesky;
    for (std::size_t lag = 0; lag <= 2; ++lag) {
        const LagStats st = lag_autocovariance(0.8, 64, lag, 300, 55, &dense);
        const double target = fgn_autocovariance(0.8, lag);
        INFO("lag=", lag);
        CHECK(std::abs(st.mean - target) < 4.0 * st.se);
    }
}

TEST_CASE("circulant embedding admits every H up to length 2^20") {
    for (double H : {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95}) {
        FgnSynthesizer synth(H, std::size_t{1} << 20);
        INFO("H=", H);
        CHECK(synth.info().method == SynthesisMethod::circulant);
        CHECK(synth.info().embedding_size == (std::size_t{1} << 21));
    }
}

TEST_CASE("fbm paths start at zero and scale the increments") {
    const PathSpec spec{0.8, 64, 3141};
    const std::vector<double> path = sample_fbm(spec);
    REQUIRE(path.size() == 65);
    CHECK(path[0] == 0.0);
    const std::vector<double> incr = sample_fgn(spec);
    const double scale = std::pow(64.0, -0.8);
    for (std::size_t k = 0; k < 64; ++k) {
        CHECK(path[k + 1] - path[k] == doctest::Approx(scale * incr[k]).epsilon(1e-10));
    }
}

TEST_CASE("terminal and midpoint variances match self-similarity") {
    const int reps = 500;
    double sum_b1 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const std::vector<double> p = sample_fbm({0.5, 1024, derive_key(600, r)});
        sum_b1 += p[1024] * p[1024];
    }
    CHECK(std::abs(sum_b1 / reps - 1.0) < 4.0 * std::sqrt(2.0 / reps));

    double sum_bh = 0.0;
    for (int r = 0; r < reps; ++r) {
        const std::vector<double> p = sample_fbm({0.8, 1024, derive_key(601, r)});
        sum_bh += p[512] * p[512];
    }
    const double target = std::pow(0.5, 1.6);
    CHECK(std::abs(sum_bh / reps - target) < 4.0 * target * std::sqrt(2.0 / reps));
}

} // TEST_SUITE
