#include "mixlinear/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "mixlinear/errors.hpp"

namespace mixlinear::model {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t ceil_sqrt(std::size_t v) {
    std::size_t s = 0;
    while (s * s < v) ++s;
    return s;
}

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Mix: return "Mix";
        case Mode::TimeOnly: return "TimeOnly";
        case Mode::FreqOnly: return "FreqOnly";
        case Mode::SparseBaseline: return "SparseBaseline";
    }
    return "Unknown";
}

Mode parse_mode(std::string_view text) {
    std::string key(text);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key == "mix" || key == "mixlinear") return Mode::Mix;
    if (key == "timeonly" || key == "time" || key == "tlinear") return Mode::TimeOnly;
    if (key == "freqonly" || key == "freq" || key == "flinear") return Mode::FreqOnly;
    if (key == "sparsebaseline" || key == "sparse" || key == "sparsetsf") return Mode::SparseBaseline;
    throw ConfigError("unknown model mode '" + std::string(text) + "'");
}

bool uses_time_branch(Mode mode) { return mode == Mode::Mix || mode == Mode::TimeOnly; }
bool uses_freq_branch(Mode mode) { return mode == Mode::Mix || mode == Mode::FreqOnly; }

ShapePlan plan_shapes(const ModelConfig& config) {
    if (config.lookback == 0 || config.horizon == 0) throw ConfigError("look-back and horizon must be positive");
    if (config.period == 0 || config.period > config.lookback) {
        throw ConfigError("period " + std::to_string(config.period) + " must lie in [1, look-back " +
                          std::to_string(config.lookback) + "]");
    }
    ShapePlan p;
    p.n = ceil_div(config.lookback, config.period);
    p.m = ceil_div(config.horizon, config.period);
    p.s_in = ceil_sqrt(p.n);
    p.s_out = ceil_sqrt(p.m);
    p.n_hat = p.s_in * p.s_in;
    p.m_hat = p.s_out * p.s_out;
    p.bins_in = numerics::half_spectrum_bins(p.n_hat);
    p.bins_out = numerics::half_spectrum_bins(p.m_hat);
    return p;
}

void validate(const ModelConfig& config) {
    const ShapePlan plan = plan_shapes(config);
    if (!uses_freq_branch(config.mode)) return;
    if (config.latent_width == 0) throw ConfigError("latent width must be positive");
    if (config.lpf_cutoff == 0 || config.lpf_cutoff > plan.bins_in) {
        throw ConfigError("LPF cutoff " + std::to_string(config.lpf_cutoff) + " must lie in [1, " +
                          std::to_string(plan.bins_in) + "] for padded trend length " +
                          std::to_string(plan.n_hat));
    }
}

MixLinearParams zero_params(const ModelConfig& config) {
    validate(config);
    const ShapePlan plan = plan_shapes(config);
    MixLinearParams p;
    p.conv_kernel.assign(config.period, 0.0);
    if (uses_time_branch(config.mode)) {
        p.w_intra = RealMatrix(plan.s_out, plan.s_in);
        p.b_intra.assign(plan.s_out, 0.0);
        p.w_inter = RealMatrix(plan.s_out, plan.s_in);
        p.b_inter.assign(plan.s_out, 0.0);
    }
    if (uses_freq_branch(config.mode)) {
        p.w_enc = ComplexMatrix(config.latent_width, config.lpf_cutoff);
        p.w_dec = ComplexMatrix(plan.bins_out, config.latent_width);
    }
    if (config.mode == Mode::SparseBaseline) p.w_sparse = RealMatrix(plan.m, plan.n);
    return p;
}

MixLinearParams init_params(const ModelConfig& config, std::uint64_t seed) {
    MixLinearParams p = zero_params(config);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](std::span<double> values, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : values) v = dist(rng);
    };
    auto fill_complex = [&](ComplexMatrix& m) {
        fill({reinterpret_cast<double*>(m.data.data()), m.data.size() * 2}, m.cols);
    };
    fill(p.conv_kernel, config.period);
    fill(p.w_intra.data, p.w_intra.cols);
    fill(p.w_inter.data, p.w_inter.cols);
    fill_complex(p.w_enc);
    fill_complex(p.w_dec);
    fill(p.w_sparse.data, p.w_sparse.cols);
    return p;
}

std::size_t scalar_count(const MixLinearParams& params) {
    std::size_t total = 0;
    for_each_array(params, [&](std::string_view, std::span<const double> values) { total += values.size(); });
    return total;
}

std::size_t trend_lead(const ModelConfig& config, const ShapePlan& plan) {
    return plan.n * config.period - config.lookback;
}

TrendDecomposition decompose_trend(std::span<const double> x, const MixLinearParams& params,
                                   const ModelConfig& config) {
    if (x.size() != config.lookback) {
        throw std::invalid_argument("decompose_trend: input has " + std::to_string(x.size()) +
                                    " samples, look-back is " + std::to_string(config.lookback));
    }
    const ShapePlan plan = plan_shapes(config);
    const std::size_t w = config.period;

    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / static_cast<double>(x.size());

    RealVector centered(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) centered[t] = x[t] - mean;
    RealVector aggregated = numerics::conv1d_same(centered, params.conv_kernel, params.conv_bias);
    for (std::size_t t = 0; t < x.size(); ++t) aggregated[t] += centered[t];

    const std::size_t lead = trend_lead(config, plan);
    RealMatrix trend(w, plan.n);
    for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t j = 0; j < plan.n; ++j) {
            const std::size_t slot = j * w + i;
            trend(i, j) = slot < lead ? 0.0 : aggregated[slot - lead];
        }
    }
    return {std::move(trend), mean};
}

RealVector pad_row(std::span<const double> row, std::size_t length) {
    RealVector out(length, 0.0);
    std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(std::min(length, row.size())), out.begin());
    return out;
}

RealVector time_branch(std::span<const double> trend_row, const MixLinearParams& params, const ShapePlan& plan) {
    if (trend_row.size() != plan.n) {
        throw std::invalid_argument("time_branch: row length " + std::to_string(trend_row.size()) +
                                    " != n = " + std::to_string(plan.n));
    }
    if (params.w_intra.rows != plan.s_out || params.w_intra.cols != plan.s_in ||
        params.w_inter.rows != plan.s_out || params.w_inter.cols != plan.s_in) {
        throw std::invalid_argument("time_branch: weights " + dims(params.w_intra.rows, params.w_intra.cols) + "/" +
                                    dims(params.w_inter.rows, params.w_inter.cols) + " do not match plan " +
                                    dims(plan.s_out, plan.s_in));
    }
    const RealVector padded = pad_row(trend_row, plan.n_hat);
    const std::size_t s_in = plan.s_in;
    const std::size_t s_out = plan.s_out;

    // intra-segment: each length-s_in segment -> s_out values, stored transposed
    RealMatrix inter_in(s_out, s_in);
    for (std::size_t r = 0; r < s_in; ++r) {
        const auto seg = std::span<const double>(padded).subspan(r * s_in, s_in);
        const RealVector intra = numerics::real_affine(params.w_intra, seg, params.b_intra);
        for (std::size_t c = 0; c < s_out; ++c) inter_in(c, r) = intra[c];
    }

    RealVector out;
    out.reserve(plan.m_hat);
    for (std::size_t c = 0; c < s_out; ++c) {
        const RealVector row = numerics::real_affine(params.w_inter, inter_in.row(c), params.b_inter);
        out.insert(out.end(), row.begin(), row.end());
    }
    out.resize(plan.m);
    return out;
}

RealVector freq_branch(std::span<const double> trend_row_padded, const MixLinearParams& params,
                       const ShapePlan& plan, const ModelConfig& config) {
    if (trend_row_padded.size() != plan.n_hat) {
        throw std::invalid_argument("freq_branch: row length " + std::to_string(trend_row_padded.size()) +
                                    " != n_hat = " + std::to_string(plan.n_hat));
    }
    if (config.lpf_cutoff == 0 || config.lpf_cutoff > plan.bins_in) {
        throw ConfigError("freq_branch: LPF cutoff " + std::to_string(config.lpf_cutoff) + " exceeds " +
                          std::to_string(plan.bins_in) + " bins");
    }
    // only the retained low-pass bins are ever computed
    const numerics::ComplexVector filtered =
        numerics::basis_for(plan.n_hat, config.lpf_cutoff).analyze(trend_row_padded);
    const numerics::ComplexVector latent = numerics::complex_affine(params.w_enc, filtered);
    const numerics::ComplexVector rebuilt = numerics::complex_affine(params.w_dec, latent);
    if (rebuilt.size() != plan.bins_out) {
        throw std::invalid_argument("freq_branch: decoder yields " + std::to_string(rebuilt.size()) +
                                    " bins, expected " + std::to_string(plan.bins_out));
    }
    RealVector out = numerics::basis_for(plan.m_hat, plan.bins_out).synthesize(rebuilt);
    out.resize(plan.m);
    return out;
}

RealVector sparse_branch(std::span<const double> trend_row, const MixLinearParams& params, const ShapePlan& plan) {
    if (params.w_sparse.rows != plan.m || params.w_sparse.cols != plan.n) {
        throw std::invalid_argument("sparse_branch: weight " + dims(params.w_sparse.rows, params.w_sparse.cols) +
                                    " != " + dims(plan.m, plan.n));
    }
    const RealVector zero_bias(plan.m, 0.0);
    return numerics::real_affine(params.w_sparse, trend_row, zero_bias);
}

RealVector forward(std::span<const double> x, const MixLinearParams& params, const ModelConfig& config) {
    const ShapePlan plan = plan_shapes(config);
    const TrendDecomposition dec = decompose_trend(x, params, config);
    const std::size_t w = config.period;

    RealVector out(config.horizon, dec.window_mean);
    for (std::size_t i = 0; i < w; ++i) {
        const auto row = dec.trend.row(i);
        RealVector y(plan.m, 0.0);
        if (config.mode == Mode::SparseBaseline) {
            y = sparse_branch(row, params, plan);
        } else {
            if (uses_time_branch(config.mode)) y = time_branch(row, params, plan);
            if (uses_freq_branch(config.mode)) {
                const RealVector f = freq_branch(pad_row(row, plan.n_hat), params, plan, config);
                for (std::size_t j = 0; j < plan.m; ++j) y[j] += f[j];
            }
        }
        for (std::size_t j = 0; j < plan.m; ++j) {
            const std::size_t slot = j * w + i;
            if (slot < config.horizon) out[slot] += y[j];
        }
    }
    return out;
}

RealMatrix forward_multichannel(const RealMatrix& x, const MixLinearParams& params, const ModelConfig& config) {
    if (x.rows == 0 || x.cols == 0) throw std::invalid_argument("forward_multichannel: empty input table");
    if (x.rows != config.lookback) {
        throw std::invalid_argument("forward_multichannel: table has " + std::to_string(x.rows) +
                                    " rows, look-back is " + std::to_string(config.lookback));
    }
    RealMatrix out(config.horizon, x.cols);
    RealVector column(x.rows);
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (std::size_t t = 0; t < x.rows; ++t) column[t] = x(t, c);
        const RealVector y = forward(column, params, config);
        for (std::size_t t = 0; t < config.horizon; ++t) out(t, c) = y[t];
    }
    return out;
}

std::size_t param_count(const ModelConfig& config) {
    validate(config);
    const ShapePlan plan = plan_shapes(config);
    std::size_t total = config.period + 1;
    if (config.mode == Mode::SparseBaseline) return total + plan.n * plan.m;
    if (uses_time_branch(config.mode)) total += 2 * (plan.s_in * plan.s_out + plan.s_out);
    if (uses_freq_branch(config.mode)) {
        total += 2 * (config.latent_width * config.lpf_cutoff) + 2 * (plan.bins_out * config.latent_width);
    }
    return total;
}

}  // namespace mixlinear::model
