#include "mixlinear/numerics.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mixlinear::numerics {

namespace {

std::vector<std::size_t> prime_factors(std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            out.push_back(p);
            n /= p;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

std::size_t count_multiplies(std::span<const std::size_t> factors, std::size_t n) {
    if (n == 1) return 0;
    const std::size_t p = factors.front();
    const std::size_t q = n / p;
    const std::size_t butterflies = p == 2 ? q : q * ((p - 1) + (p - 1) * (p - 1));
    return p * count_multiplies(factors.subspan(1), q) + butterflies;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: length must be positive");
    factors_ = prime_factors(n);
    roots_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        roots_[j] = Complex(std::cos(angle), std::sin(angle));
    }
    multiplies_ = count_multiplies(factors_, n);
}

void FftPlan::forward(std::span<const Complex> in, std::span<Complex> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("FftPlan::forward: length mismatch");
    transform(in.data(), 1, out.data(), n_, 0, false);
}

void FftPlan::inverse(std::span<const Complex> in, std::span<Complex> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("FftPlan::inverse: length mismatch");
    transform(in.data(), 1, out.data(), n_, 0, true);
}

void FftPlan::transform(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                        std::size_t factor_index, bool inverse) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = factors_[factor_index];
    const std::size_t q = n / p;
    for (std::size_t r = 0; r < p; ++r) {
        transform(in + r * stride, stride * p, out + r * q, q, factor_index + 1, inverse);
    }

    const std::size_t step = n_ / n;  // roots_ index stride for e^{-2 pi i / n}
    auto root = [&](std::size_t e) {
        const Complex w = roots_[(e % n) * step];
        return inverse ? std::conj(w) : w;
    };

    if (p == 2) {
        for (std::size_t k = 0; k < q; ++k) {
            const Complex a = out[k];
            const Complex b = out[q + k] * root(k);
            out[k] = a + b;
            out[q + k] = a - b;
        }
        return;
    }

    std::array<Complex, 16> small{};
    std::vector<Complex> large;
    Complex* t = small.data();
    if (p > small.size()) {
        large.resize(p);
        t = large.data();
    }
    for (std::size_t k = 0; k < q; ++k) {
        t[0] = out[k];
        for (std::size_t r = 1; r < p; ++r) t[r] = out[r * q + k] * root(r * k);
        for (std::size_t s = 0; s < p; ++s) {
            Complex acc = t[0];
            for (std::size_t r = 1; r < p; ++r) {
                const std::size_t e = (r * s) % p;
                acc += e == 0 ? t[r] : t[r] * root(e * q);
            }
            out[s * q + k] = acc;
        }
    }
}

const FftPlan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

ComplexVector rfft(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("rfft: empty input");
    const std::size_t n = x.size();
    ComplexVector buf(x.begin(), x.end());
    ComplexVector full(n);
    plan_for(n).forward(buf, full);
    full.resize(half_spectrum_bins(n));
    return full;
}

RealVector irfft(std::span<const Complex> spectrum, std::size_t n) {
    if (n == 0) throw std::invalid_argument("irfft: target length must be positive");
    if (spectrum.size() != half_spectrum_bins(n)) {
        throw std::invalid_argument("irfft: expected " + std::to_string(half_spectrum_bins(n)) +
                                    " bins for length " + std::to_string(n) + ", got " +
                                    std::to_string(spectrum.size()));
    }
    ComplexVector full(n);
    full[0] = spectrum[0].real();
    for (std::size_t k = 1; k < spectrum.size(); ++k) {
        if (n % 2 == 0 && k == n / 2) {
            full[k] = spectrum[k].real();
        } else {
            full[k] = spectrum[k];
            full[n - k] = std::conj(spectrum[k]);
        }
    }
    ComplexVector time(n);
    plan_for(n).inverse(full, time);
    RealVector out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = time[t].real() * scale;
    return out;
}

RealDftBasis::RealDftBasis(std::size_t n, std::size_t bins) : n_(n), bins_(bins) {
    if (n == 0) throw std::invalid_argument("RealDftBasis: length must be positive");
    if (bins == 0 || bins > half_spectrum_bins(n)) {
        throw std::invalid_argument("RealDftBasis: " + std::to_string(bins) + " bins requested, length " +
                                    std::to_string(n) + " has " + std::to_string(half_spectrum_bins(n)));
    }
    cos_.resize(bins * n);
    sin_.resize(bins * n);
    for (std::size_t k = 0; k < bins; ++k) {
        for (std::size_t t = 0; t < n; ++t) {
            // reduce k*t mod n first so large products keep full precision; the
            // real axis is exact so DC and Nyquist imaginary parts never leak
            const std::size_t e = (k * t) % n;
            if (e == 0 || 2 * e == n) {
                cos_[k * n + t] = e == 0 ? 1.0 : -1.0;
                sin_[k * n + t] = 0.0;
                continue;
            }
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n);
            cos_[k * n + t] = std::cos(angle);
            sin_[k * n + t] = std::sin(angle);
        }
    }
}

ComplexVector RealDftBasis::analyze(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("RealDftBasis::analyze: length mismatch");
    ComplexVector out(bins_);
    for (std::size_t k = 0; k < bins_; ++k) {
        const double* c = cos_.data() + k * n_;
        const double* s = sin_.data() + k * n_;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < n_; ++t) {
            re += x[t] * c[t];
            im -= x[t] * s[t];
        }
        out[k] = {re, im};
    }
    return out;
}

RealVector RealDftBasis::synthesize(std::span<const Complex> spectrum) const {
    if (spectrum.size() != bins_) throw std::invalid_argument("RealDftBasis::synthesize: bin count mismatch");
    RealVector out(n_, 0.0);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < bins_; ++k) {
        const double weight = hermitian_multiplicity(k, n_) * scale;
        const double re = spectrum[k].real() * weight;
        const double im = spectrum[k].imag() * weight;
        const double* c = cos_.data() + k * n_;
        const double* s = sin_.data() + k * n_;
        for (std::size_t t = 0; t < n_; ++t) out[t] += re * c[t] - im * s[t];
    }
    return out;
}

RealVector RealDftBasis::analyze_adjoint(std::span<const Complex> spectrum_grad) const {
    if (spectrum_grad.size() != bins_) throw std::invalid_argument("RealDftBasis::analyze_adjoint: bin count mismatch");
    RealVector out(n_, 0.0);
    for (std::size_t k = 0; k < bins_; ++k) {
        const double gr = spectrum_grad[k].real();
        const double gi = spectrum_grad[k].imag();
        const double* c = cos_.data() + k * n_;
        const double* s = sin_.data() + k * n_;
        for (std::size_t t = 0; t < n_; ++t) out[t] += gr * c[t] - gi * s[t];
    }
    return out;
}

ComplexVector RealDftBasis::synthesize_adjoint(std::span<const double> signal_grad) const {
    if (signal_grad.size() != n_) throw std::invalid_argument("RealDftBasis::synthesize_adjoint: length mismatch");
    ComplexVector out(bins_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < bins_; ++k) {
        const double weight = hermitian_multiplicity(k, n_) * scale;
        const double* c = cos_.data() + k * n_;
        const double* s = sin_.data() + k * n_;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < n_; ++t) {
            re += signal_grad[t] * c[t];
            im -= signal_grad[t] * s[t];
        }
        out[k] = {re * weight, im * weight};
    }
    return out;
}

const RealDftBasis& basis_for(std::size_t n, std::size_t bins) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<RealDftBasis>> cache;
    auto& slot = cache[n * 1'000'003 + bins];
    if (!slot) slot = std::make_unique<RealDftBasis>(n, bins);
    return *slot;
}

ComplexVector complex_affine(const ComplexMatrix& w, std::span<const Complex> z,
                             std::optional<std::span<const Complex>> bias) {
    if (z.size() != w.cols) {
        throw std::invalid_argument("complex_affine: matrix has " + std::to_string(w.cols) +
                                    " columns but input has " + std::to_string(z.size()) + " entries");
    }
    if (bias && bias->size() != w.rows) throw std::invalid_argument("complex_affine: bias length mismatch");
    ComplexVector out(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        Complex acc = bias ? (*bias)[i] : Complex{};
        const auto row = w.row(i);
        for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * z[j];
        out[i] = acc;
    }
    return out;
}

RealVector real_affine(const RealMatrix& w, std::span<const double> x, std::span<const double> bias) {
    if (x.size() != w.cols) {
        throw std::invalid_argument("real_affine: matrix has " + std::to_string(w.cols) +
                                    " columns but input has " + std::to_string(x.size()) + " entries");
    }
    if (bias.size() != w.rows) throw std::invalid_argument("real_affine: bias length mismatch");
    RealVector out(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        double acc = bias[i];
        const auto row = w.row(i);
        for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

RealVector conv1d_same(std::span<const double> x, std::span<const double> kernel, double bias) {
    const std::size_t len = x.size();
    const std::size_t width = kernel.size();
    if (width == 0 || width > len) {
        throw std::invalid_argument("conv1d_same: kernel width " + std::to_string(width) +
                                    " must lie in [1, " + std::to_string(len) + "]");
    }
    const std::size_t left = conv_left_pad(width);
    RealVector out(len, bias);
    for (std::size_t t = 0; t < len; ++t) {
        // padded index t+i maps to x[t+i-left]
        const std::size_t i_begin = t < left ? left - t : 0;
        const std::size_t i_end = std::min(width, len + left - t);
        double acc = 0.0;
        for (std::size_t i = i_begin; i < i_end; ++i) acc += kernel[i] * x[t + i - left];
        out[t] += acc;
    }
    return out;
}

}  // namespace mixlinear::numerics
