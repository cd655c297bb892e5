#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "mixlinear/numerics.hpp"

namespace mixlinear::model {

using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::RealMatrix;
using numerics::RealVector;

enum class Mode {
    Mix,             // time branch + frequency branch
    TimeOnly,        // frequency branch disabled
    FreqOnly,        // time branch disabled
    SparseBaseline,  // one pointwise n -> m map per phase row
};

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct ModelConfig {
    std::size_t lookback = 720;
    std::size_t horizon = 96;
    std::size_t period = 24;
    std::size_t lpf_cutoff = 5;
    std::size_t latent_width = 2;
    Mode mode = Mode::Mix;

    bool operator==(const ModelConfig&) const = default;
};

/// Every dimension derived from a ModelConfig.
struct ShapePlan {
    std::size_t n = 0;         // ceil(L / w)
    std::size_t m = 0;         // ceil(H / w)
    std::size_t n_hat = 0;     // ceil(sqrt(n))^2
    std::size_t m_hat = 0;     // ceil(sqrt(m))^2
    std::size_t s_in = 0;      // sqrt(n_hat)
    std::size_t s_out = 0;     // sqrt(m_hat)
    std::size_t bins_in = 0;   // n_hat / 2 + 1
    std::size_t bins_out = 0;  // m_hat / 2 + 1

    bool operator==(const ShapePlan&) const = default;
};

bool uses_time_branch(Mode mode);
bool uses_freq_branch(Mode mode);

/// Throws ConfigError when the config is not realizable.
void validate(const ModelConfig& config);

ShapePlan plan_shapes(const ModelConfig& config);

/// Complete learnable state. Arrays belonging to a branch the mode does not
/// use are left empty.
struct MixLinearParams {
    RealVector conv_kernel;  // w
    double conv_bias = 0.0;
    RealMatrix w_intra;      // s_out x s_in
    RealVector b_intra;      // s_out
    RealMatrix w_inter;      // s_out x s_in
    RealVector b_inter;      // s_out
    ComplexMatrix w_enc;     // n_z x n_lpf
    ComplexMatrix w_dec;     // bins_out x n_z
    RealMatrix w_sparse;     // m x n, SparseBaseline only

    bool operator==(const MixLinearParams&) const = default;
};

/// Structurally identical to the parameters it differentiates.
using GradientSet = MixLinearParams;

/// All-zero parameter set with the shapes `config` requires.
MixLinearParams zero_params(const ModelConfig& config);

MixLinearParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Visits every learned array as a flat span of real scalars. Complex
/// matrices are exposed with interleaved (re, im) components.
template <typename Params, typename Fn>
void for_each_array(Params& p, Fn&& fn) {
    using Scalar = std::conditional_t<std::is_const_v<Params>, const double, double>;
    auto as_reals = [](auto& cm) {
        return std::span<Scalar>(reinterpret_cast<Scalar*>(cm.data.data()), cm.data.size() * 2);
    };
    fn(std::string_view("conv_kernel"), std::span<Scalar>(p.conv_kernel));
    fn(std::string_view("conv_bias"), std::span<Scalar>(&p.conv_bias, 1));
    fn(std::string_view("w_intra"), std::span<Scalar>(p.w_intra.data));
    fn(std::string_view("b_intra"), std::span<Scalar>(p.b_intra));
    fn(std::string_view("w_inter"), std::span<Scalar>(p.w_inter.data));
    fn(std::string_view("b_inter"), std::span<Scalar>(p.b_inter));
    fn(std::string_view("w_enc"), as_reals(p.w_enc));
    fn(std::string_view("w_dec"), as_reals(p.w_dec));
    fn(std::string_view("w_sparse"), std::span<Scalar>(p.w_sparse.data));
}

std::size_t scalar_count(const MixLinearParams& params);

/// w rows (phase offsets) by n columns plus the removed window mean.
struct TrendDecomposition {
    RealMatrix trend;
    double window_mean = 0.0;
};

/// Mean removal, residual aggregation convolution, and de-interleaving into
/// phase rows. When n*w exceeds L the leading n*w-L slots are zero.
TrendDecomposition decompose_trend(std::span<const double> x, const MixLinearParams& params,
                                   const ModelConfig& config);

/// Row i, column j of the trend matrix reads aggregated[j*w + i - lead].
std::size_t trend_lead(const ModelConfig& config, const ShapePlan& plan);

/// Tail zero padding of a trend row to n_hat.
RealVector pad_row(std::span<const double> row, std::size_t length);

RealVector time_branch(std::span<const double> trend_row, const MixLinearParams& params, const ShapePlan& plan);

RealVector freq_branch(std::span<const double> trend_row_padded, const MixLinearParams& params,
                       const ShapePlan& plan, const ModelConfig& config);

RealVector sparse_branch(std::span<const double> trend_row, const MixLinearParams& params, const ShapePlan& plan);

RealVector forward(std::span<const double> x, const MixLinearParams& params, const ModelConfig& config);

/// Channel-independent evaluation of an L x C table; one shared parameter set.
RealMatrix forward_multichannel(const RealMatrix& x, const MixLinearParams& params, const ModelConfig& config);

/// Learned real scalars, complex entries counted twice.
std::size_t param_count(const ModelConfig& config);

}  // namespace mixlinear::model
