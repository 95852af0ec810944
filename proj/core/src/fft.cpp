#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace fbmvar::detail {
namespace {

// FFTW's planner mutates shared tables; plan creation and destruction must
// be serialized. Executing distinct plans concurrently is safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

std::vector<double> circulant_eigenvalues(std::vector<double> half_row) {
    const std::size_t np = half_row.size();
    if (np < 2) {
        throw std::invalid_argument("circulant_eigenvalues: need at least a_0 and a_1");
    }
    std::vector<double> eig(np);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_r2r_1d(static_cast<int>(np), half_row.data(), eig.data(),
                                FFTW_REDFT00, FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw std::runtime_error("circulant_eigenvalues: FFTW plan creation failed");
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return eig;
}

HalfSpectrumSynthesis::HalfSpectrumSynthesis(std::size_t m) : m_(m) {
    if (m == 0) {
        throw std::invalid_argument("HalfSpectrumSynthesis: m must be positive");
    }
    spectrum_ = reinterpret_cast<std::complex<double>*>(
        fftw_malloc(sizeof(fftw_complex) * (m + 1)));
    signal_ = static_cast<double*>(fftw_malloc(sizeof(double) * 2 * m));
    if (spectrum_ == nullptr || signal_ == nullptr) {
        fftw_free(spectrum_);
        fftw_free(signal_);
        throw std::bad_alloc();
    }
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(2 * m),
                                 reinterpret_cast<fftw_complex*>(spectrum_), signal_,
                                 FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    if (plan_ == nullptr) {
        fftw_free(spectrum_);
        fftw_free(signal_);
        throw std::runtime_error("HalfSpectrumSynthesis: FFTW plan creation failed");
    }
}

HalfSpectrumSynthesis::~HalfSpectrumSynthesis() {
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
    fftw_free(spectrum_);
    fftw_free(signal_);
}

const double* HalfSpectrumSynthesis::synthesize() {
    fftw_execute(static_cast<fftw_plan>(plan_));
    return signal_;
}

} // namespace fbmvar::detail
