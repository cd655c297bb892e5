#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mixlinear::numerics {

using Complex = std::complex<double>;
using RealVector = std::vector<double>;
using ComplexVector = std::vector<Complex>;

/// Dense row-major matrix. `data.size() == rows * cols` always holds for
/// matrices built through the constructor.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T{}) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const { return data.empty(); }
    bool operator==(const Matrix&) const = default;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;

/// Precomputed mixed-radix Cooley-Tukey transform for one length.
///
/// Lengths are factored into primes; radix-2 stages use a dedicated
/// butterfly and every other prime factor falls back to a direct small DFT,
/// so prime lengths degrade to O(N^2) but 36 = 2*2*3*3 stays fast.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    /// Unnormalized forward transform, X[k] = sum_t x[t] e^{-2 pi i k t / N}.
    void forward(std::span<const Complex> in, std::span<Complex> out) const;
    /// Unnormalized inverse transform (positive exponent, no 1/N factor).
    void inverse(std::span<const Complex> in, std::span<Complex> out) const;

    /// Complex multiplications one transform performs (trivial unit
    /// twiddles excluded). Used for MAC accounting.
    std::size_t complex_multiplies() const { return multiplies_; }

private:
    void transform(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                   std::size_t factor_index, bool inverse) const;

    std::size_t n_;
    std::vector<std::size_t> factors_;
    std::vector<Complex> roots_;  // e^{-2 pi i j / N}
    std::size_t multiplies_ = 0;
};

/// Cached per-thread plan for length `n`.
const FftPlan& plan_for(std::size_t n);

/// Half-spectrum real DFT: floor(N/2)+1 non-negative-frequency bins.
ComplexVector rfft(std::span<const double> x);

/// Inverse of rfft onto `n` real samples. The spectrum is extended by
/// Hermitian symmetry; imaginary parts of the DC and Nyquist bins do not
/// contribute.
RealVector irfft(std::span<const Complex> spectrum, std::size_t n);

/// Number of half-spectrum bins for a real signal of length n.
constexpr std::size_t half_spectrum_bins(std::size_t n) { return n / 2 + 1; }

/// Weight of bin k when the half spectrum of a length-n real signal is
/// folded back into the full spectrum: 1 for DC and Nyquist, 2 otherwise.
inline double hermitian_multiplicity(std::size_t k, std::size_t n) {
    return (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
}

/// Pruned real DFT for short transforms where only a few bins are needed.
///
/// analyze() returns the first `bins` entries of rfft(x) for a length-n
/// input; synthesize() is irfft onto n samples of a half spectrum whose
/// entries beyond `bins` are zero. Both run in O(n * bins) from cached
/// cos/sin tables and are exact counterparts of rfft/irfft up to round-off.
class RealDftBasis {
public:
    RealDftBasis(std::size_t n, std::size_t bins);

    std::size_t length() const { return n_; }
    std::size_t bins() const { return bins_; }

    ComplexVector analyze(std::span<const double> x) const;
    RealVector synthesize(std::span<const Complex> spectrum) const;

    /// Gradient of a loss w.r.t. x given its gradient w.r.t. the (re, im)
    /// components of analyze(x).
    RealVector analyze_adjoint(std::span<const Complex> spectrum_grad) const;
    /// Gradient w.r.t. the (re, im) components of the spectrum given the
    /// gradient w.r.t. synthesize(spectrum). Interior bins carry twice the
    /// sensitivity of DC and Nyquist.
    ComplexVector synthesize_adjoint(std::span<const double> signal_grad) const;

private:
    std::size_t n_;
    std::size_t bins_;
    std::vector<double> cos_;  // bins x n
    std::vector<double> sin_;  // bins x n
};

/// Cached per-thread basis.
const RealDftBasis& basis_for(std::size_t n, std::size_t bins);

ComplexVector complex_affine(const ComplexMatrix& w, std::span<const Complex> z,
                             std::optional<std::span<const Complex>> bias = std::nullopt);

RealVector real_affine(const RealMatrix& w, std::span<const double> x, std::span<const double> bias);

/// Length-preserving cross-correlation with zero padding of
/// floor((w-1)/2) leading and ceil((w-1)/2) trailing samples.
RealVector conv1d_same(std::span<const double> x, std::span<const double> kernel, double bias);

/// Leading zero count used by conv1d_same for a kernel of width w.
constexpr std::size_t conv_left_pad(std::size_t w) { return (w - 1) / 2; }

}  // namespace mixlinear::numerics
