#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fbmvar::detail {

// Eigenvalues of the symmetric circulant of order 2M whose first row is
// (a_0, ..., a_M, a_{M-1}, ..., a_1), given the half row a_0..a_M:
// lambda_j = a_0 + (-1)^j a_M + 2 sum_{k=1}^{M-1} a_k cos(pi j k / M)
// for j = 0..M; the remaining eigenvalues repeat by lambda_{2M-j} = lambda_j.
std::vector<double> circulant_eigenvalues(std::vector<double> half_row);

// Unnormalized inverse DFT from a half spectrum w_0..w_m to the real signal
// x_k = sum_{j=0}^{2m-1} w_j e^{2 pi i j k / (2m)}, k = 0..2m-1, where the
// upper half is the Hermitian extension w_{2m-j} = conj(w_j). Imaginary
// parts of w_0 and w_m are ignored. Holds FFTW buffers and a plan, so an
// instance must not be used from two threads at once.
class HalfSpectrumSynthesis {
public:
    explicit HalfSpectrumSynthesis(std::size_t m);
    ~HalfSpectrumSynthesis();
    HalfSpectrumSynthesis(const HalfSpectrumSynthesis&) = delete;
    HalfSpectrumSynthesis& operator=(const HalfSpectrumSynthesis&) = delete;

    std::size_t m() const { return m_; }

    // m+1 writable slots for w_0..w_m. Contents are clobbered by synthesize().
    std::complex<double>* spectrum() { return spectrum_; }

    // Executes the transform; the result stays valid until the next call.
    const double* synthesize();

private:
    std::size_t m_;
    std::complex<double>* spectrum_;
    double* signal_;
    void* plan_;
};

} // namespace fbmvar::detail
