#include "mixlinear/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "mixlinear/errors.hpp"

namespace mixlinear::training {

namespace {

using numerics::Complex;
using numerics::ComplexVector;
using numerics::RealVector;

constexpr std::size_t kChunk = 32;  // samples per deterministic partial sum

std::vector<std::span<double>> flat_arrays(MixLinearParams& p) {
    std::vector<std::span<double>> out;
    model::for_each_array(p, [&out](std::string_view, std::span<double> v) { out.push_back(v); });
    return out;
}

/// Runs fn(chunk_index) for every chunk on up to worker_count() threads.
/// Callers store per-chunk results and reduce in index order, so results
/// never depend on the thread count.
template <typename Fn>
void for_each_chunk(std::size_t chunks, Fn&& fn) {
    const std::size_t workers = std::min(worker_count(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < chunks; c += workers) fn(c);
        });
    }
}

/// Forward pass of the fixed graph with every intermediate retained, and the
/// matching reverse sweep. One instance per thread.
class Graph {
public:
    Graph(const MixLinearParams& params, const ModelConfig& config)
        : p_(params),
          cfg_(config),
          plan_(model::plan_shapes(config)),
          lead_(model::trend_lead(config, plan_)),
          time_(model::uses_time_branch(config.mode)),
          freq_(model::uses_freq_branch(config.mode)),
          sparse_(config.mode == model::Mode::SparseBaseline) {
        if (freq_) {
            analysis_ = &numerics::basis_for(plan_.n_hat, cfg_.lpf_cutoff);
            synthesis_ = &numerics::basis_for(plan_.m_hat, plan_.bins_out);
        }
        const std::size_t w = cfg_.period;
        xp_.resize(cfg_.lookback + w - 1);
        agg_.resize(cfg_.lookback);
        padded_.resize(w * plan_.n_hat);
        inter_in_.resize(w * plan_.s_out * plan_.s_in);
        filtered_.resize(w * cfg_.lpf_cutoff);
        latent_.resize(w * cfg_.latent_width);
        pred_.resize(cfg_.horizon);
        g_agg_.resize(cfg_.lookback);
    }

    /// Sum of squared errors for one sample. When `grads` is set, adds the
    /// gradient of grad_scale * sse / 2; grad_scale = 2 / (N * H) therefore
    /// accumulates the gradient of the batch mean.
    double run(const Sample& s, double grad_scale, GradientSet* grads) {
        if (s.input.size() != cfg_.lookback || s.target.size() != cfg_.horizon) {
            throw std::invalid_argument("backward: sample shape " + std::to_string(s.input.size()) + "->" +
                                        std::to_string(s.target.size()) + " does not match look-back/horizon " +
                                        std::to_string(cfg_.lookback) + "->" + std::to_string(cfg_.horizon));
        }
        forward(s.input);
        double sse = 0.0;
        for (std::size_t t = 0; t < cfg_.horizon; ++t) {
            const double r = pred_[t] - s.target[t];
            sse += r * r;
            pred_[t] = r * grad_scale;  // reused as d(loss)/d(pred)
        }
        if (grads != nullptr) reverse(*grads);
        return sse;
    }

private:
    void forward(std::span<const double> x) {
        const std::size_t len = cfg_.lookback;
        const std::size_t w = cfg_.period;
        const std::size_t left = numerics::conv_left_pad(w);

        double sum = 0.0;
        for (double v : x) sum += v;
        mean_ = sum / static_cast<double>(len);

        std::fill(xp_.begin(), xp_.end(), 0.0);
        for (std::size_t t = 0; t < len; ++t) xp_[left + t] = x[t] - mean_;
        for (std::size_t t = 0; t < len; ++t) {
            double acc = p_.conv_bias;
            for (std::size_t i = 0; i < w; ++i) acc += p_.conv_kernel[i] * xp_[t + i];
            agg_[t] = acc + xp_[left + t];
        }

        std::fill(pred_.begin(), pred_.end(), mean_);
        std::fill(padded_.begin(), padded_.end(), 0.0);
        RealVector y(plan_.m);
        for (std::size_t i = 0; i < w; ++i) {
            double* row = padded_.data() + i * plan_.n_hat;
            for (std::size_t j = 0; j < plan_.n; ++j) {
                const std::size_t slot = j * w + i;
                row[j] = slot < lead_ ? 0.0 : agg_[slot - lead_];
            }
            std::fill(y.begin(), y.end(), 0.0);
            if (time_) time_forward(i, y);
            if (freq_) freq_forward(i, y);
            if (sparse_) sparse_forward(i, y);
            for (std::size_t j = 0; j < plan_.m; ++j) {
                const std::size_t slot = j * w + i;
                if (slot < cfg_.horizon) pred_[slot] += y[j];
            }
        }
    }

    void time_forward(std::size_t i, RealVector& y) {
        const std::size_t si = plan_.s_in;
        const std::size_t so = plan_.s_out;
        const double* row = padded_.data() + i * plan_.n_hat;
        double* inter_in = inter_in_.data() + i * so * si;
        for (std::size_t r = 0; r < si; ++r) {
            const double* seg = row + r * si;
            for (std::size_t c = 0; c < so; ++c) {
                double acc = p_.b_intra[c];
                for (std::size_t u = 0; u < si; ++u) acc += p_.w_intra(c, u) * seg[u];
                inter_in[c * si + r] = acc;
            }
        }
        for (std::size_t c = 0; c < so; ++c) {
            for (std::size_t q = 0; q < so; ++q) {
                const std::size_t flat = c * so + q;
                if (flat >= plan_.m) return;
                double acc = p_.b_inter[q];
                for (std::size_t r = 0; r < si; ++r) acc += p_.w_inter(q, r) * inter_in[c * si + r];
                y[flat] += acc;
            }
        }
    }

    void freq_forward(std::size_t i, RealVector& y) {
        const std::span<const double> row(padded_.data() + i * plan_.n_hat, plan_.n_hat);
        const ComplexVector spectrum = analysis_->analyze(row);
        std::copy(spectrum.begin(), spectrum.end(), filtered_.begin() + static_cast<std::ptrdiff_t>(i * cfg_.lpf_cutoff));
        const ComplexVector z = numerics::complex_affine(p_.w_enc, spectrum);
        std::copy(z.begin(), z.end(), latent_.begin() + static_cast<std::ptrdiff_t>(i * cfg_.latent_width));
        const ComplexVector rebuilt = numerics::complex_affine(p_.w_dec, z);
        const RealVector f = synthesis_->synthesize(rebuilt);
        for (std::size_t j = 0; j < plan_.m; ++j) y[j] += f[j];
    }

    void sparse_forward(std::size_t i, RealVector& y) {
        const double* row = padded_.data() + i * plan_.n_hat;
        for (std::size_t q = 0; q < plan_.m; ++q) {
            double acc = 0.0;
            for (std::size_t j = 0; j < plan_.n; ++j) acc += p_.w_sparse(q, j) * row[j];
            y[q] += acc;
        }
    }

    void reverse(GradientSet& g) {
        const std::size_t w = cfg_.period;
        std::fill(g_agg_.begin(), g_agg_.end(), 0.0);
        RealVector g_row(plan_.m_hat);
        RealVector g_padded(plan_.n_hat);
        for (std::size_t i = 0; i < w; ++i) {
            std::fill(g_row.begin(), g_row.end(), 0.0);
            for (std::size_t j = 0; j < plan_.m; ++j) {
                const std::size_t slot = j * w + i;
                if (slot < cfg_.horizon) g_row[j] = pred_[slot];
            }
            std::fill(g_padded.begin(), g_padded.end(), 0.0);
            if (time_) time_reverse(i, g_row, g_padded, g);
            if (freq_) freq_reverse(i, g_row, g_padded, g);
            if (sparse_) sparse_reverse(i, g_row, g_padded, g);
            // padding slots are dropped; leading zero-filled slots have no source
            for (std::size_t j = 0; j < plan_.n; ++j) {
                const std::size_t slot = j * w + i;
                if (slot >= lead_) g_agg_[slot - lead_] += g_padded[j];
            }
        }

        // aggregated = conv(centered) + centered; centered does not depend on theta
        double g_bias = 0.0;
        for (std::size_t t = 0; t < cfg_.lookback; ++t) g_bias += g_agg_[t];
        g.conv_bias += g_bias;
        for (std::size_t k = 0; k < w; ++k) {
            double acc = 0.0;
            for (std::size_t t = 0; t < cfg_.lookback; ++t) acc += g_agg_[t] * xp_[t + k];
            g.conv_kernel[k] += acc;
        }
    }

    void time_reverse(std::size_t i, const RealVector& g_row, RealVector& g_padded, GradientSet& g) {
        const std::size_t si = plan_.s_in;
        const std::size_t so = plan_.s_out;
        const double* row = padded_.data() + i * plan_.n_hat;
        const double* inter_in = inter_in_.data() + i * so * si;
        RealVector g_inter_in(so * si, 0.0);
        for (std::size_t c = 0; c < so; ++c) {
            for (std::size_t q = 0; q < so; ++q) {
                const double gv = g_row[c * so + q];
                if (gv == 0.0) continue;
                g.b_inter[q] += gv;
                for (std::size_t r = 0; r < si; ++r) {
                    g.w_inter(q, r) += gv * inter_in[c * si + r];
                    g_inter_in[c * si + r] += p_.w_inter(q, r) * gv;
                }
            }
        }
        for (std::size_t r = 0; r < si; ++r) {
            const double* seg = row + r * si;
            for (std::size_t c = 0; c < so; ++c) {
                const double gv = g_inter_in[c * si + r];
                if (gv == 0.0) continue;
                g.b_intra[c] += gv;
                for (std::size_t u = 0; u < si; ++u) {
                    g.w_intra(c, u) += gv * seg[u];
                    g_padded[r * si + u] += p_.w_intra(c, u) * gv;
                }
            }
        }
    }

    void freq_reverse(std::size_t i, const RealVector& g_row, RealVector& g_padded, GradientSet& g) {
        const std::size_t nz = cfg_.latent_width;
        const std::size_t nl = cfg_.lpf_cutoff;
        const Complex* filtered = filtered_.data() + i * nl;
        const Complex* latent = latent_.data() + i * nz;

        const ComplexVector g_spec = synthesis_->synthesize_adjoint(g_row);
        ComplexVector g_latent(nz);
        for (std::size_t k = 0; k < plan_.bins_out; ++k) {
            for (std::size_t z = 0; z < nz; ++z) {
                g.w_dec(k, z) += g_spec[k] * std::conj(latent[z]);
                g_latent[z] += std::conj(p_.w_dec(k, z)) * g_spec[k];
            }
        }
        ComplexVector g_filtered(nl);
        for (std::size_t z = 0; z < nz; ++z) {
            for (std::size_t b = 0; b < nl; ++b) {
                g.w_enc(z, b) += g_latent[z] * std::conj(filtered[b]);
                g_filtered[b] += std::conj(p_.w_enc(z, b)) * g_latent[z];
            }
        }
        const RealVector g_in = analysis_->analyze_adjoint(g_filtered);
        for (std::size_t t = 0; t < plan_.n_hat; ++t) g_padded[t] += g_in[t];
    }

    void sparse_reverse(std::size_t i, const RealVector& g_row, RealVector& g_padded, GradientSet& g) {
        const double* row = padded_.data() + i * plan_.n_hat;
        for (std::size_t q = 0; q < plan_.m; ++q) {
            const double gv = g_row[q];
            if (gv == 0.0) continue;
            for (std::size_t j = 0; j < plan_.n; ++j) {
                g.w_sparse(q, j) += gv * row[j];
                g_padded[j] += p_.w_sparse(q, j) * gv;
            }
        }
    }

    const MixLinearParams& p_;
    const ModelConfig& cfg_;
    model::ShapePlan plan_;
    std::size_t lead_;
    bool time_;
    bool freq_;
    bool sparse_;
    const numerics::RealDftBasis* analysis_ = nullptr;
    const numerics::RealDftBasis* synthesis_ = nullptr;

    double mean_ = 0.0;
    RealVector xp_;       // zero-padded centered input
    RealVector agg_;      // conv + residual
    RealVector padded_;   // w rows of n_hat
    RealVector inter_in_; // w blocks of s_out x s_in
    ComplexVector filtered_;
    ComplexVector latent_;
    RealVector pred_;
    RealVector g_agg_;
};

void add_into(GradientSet& into, GradientSet& from) {
    auto dst = flat_arrays(into);
    auto src = flat_arrays(from);
    for (std::size_t a = 0; a < dst.size(); ++a) {
        for (std::size_t k = 0; k < dst[a].size(); ++k) dst[a][k] += src[a][k];
    }
}

GradientSet zeros_like(const MixLinearParams& p) {
    GradientSet g = p;
    for (auto span : flat_arrays(g)) std::fill(span.begin(), span.end(), 0.0);
    return g;
}

}  // namespace

std::size_t worker_count() {
    if (const char* env = std::getenv("MIXLINEAR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t default_batch_size(std::size_t channels) {
    if (channels < 100) return 256;
    if (channels < 300) return 128;
    return 64;
}

void validate(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0) || config.max_epochs == 0 || config.patience == 0) {
        throw ConfigError("learning rate, epochs and patience must be positive");
    }
}

double mse_loss(const numerics::RealMatrix& pred, const numerics::RealMatrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols) {
        throw std::invalid_argument("mse_loss: shape mismatch");
    }
    if (pred.data.empty()) throw std::invalid_argument("mse_loss: empty tables");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.data.size());
}

LossAndGradient backward(std::span<const Sample> batch, const MixLinearParams& params, const ModelConfig& config) {
    if (batch.empty()) throw std::invalid_argument("backward: empty batch");
    model::validate(config);
    const double denom = static_cast<double>(batch.size() * config.horizon);
    const double scale = 2.0 / denom;

    const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
    std::vector<GradientSet> partial_grads(chunks);
    std::vector<double> partial_sse(chunks, 0.0);
    for_each_chunk(chunks, [&](std::size_t c) {
        Graph graph(params, config);
        GradientSet g = zeros_like(params);
        double sse = 0.0;
        const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
        for (std::size_t s = c * kChunk; s < end; ++s) sse += graph.run(batch[s], scale, &g);
        partial_grads[c] = std::move(g);
        partial_sse[c] = sse;
    });

    LossAndGradient out{0.0, zeros_like(params)};
    double sse = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        sse += partial_sse[c];
        add_into(out.grads, partial_grads[c]);
    }
    out.loss = sse / denom;
    return out;
}

double batch_loss(std::span<const Sample> batch, const MixLinearParams& params, const ModelConfig& config) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double sse = 0.0;
    for (const Sample& s : batch) {
        const RealVector pred = model::forward(s.input, params, config);
        for (std::size_t t = 0; t < pred.size(); ++t) {
            const double d = pred[t] - s.target[t];
            sse += d * d;
        }
    }
    return sse / static_cast<double>(batch.size() * config.horizon);
}

GradCheckResult grad_check(const MixLinearParams& params, std::span<const Sample> batch, const ModelConfig& config,
                           double step, const GradientSet& analytic) {
    if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
    MixLinearParams probe = params;
    GradientSet reference = analytic;
    auto probe_arrays = flat_arrays(probe);
    auto grad_arrays = flat_arrays(reference);
    std::vector<std::string_view> names;
    model::for_each_array(probe, [&names](std::string_view name, std::span<double>) { names.push_back(name); });
    if (grad_arrays.size() != probe_arrays.size()) throw std::invalid_argument("grad_check: gradient shape mismatch");

    GradCheckResult result;
    for (std::size_t a = 0; a < probe_arrays.size(); ++a) {
        if (grad_arrays[a].size() != probe_arrays[a].size()) {
            throw std::invalid_argument("grad_check: gradient for '" + std::string(names[a]) + "' has wrong length");
        }
        for (std::size_t k = 0; k < probe_arrays[a].size(); ++k) {
            double& theta = probe_arrays[a][k];
            const double saved = theta;
            theta = saved + step;
            const double up = batch_loss(batch, probe, config);
            theta = saved - step;
            const double down = batch_loss(batch, probe, config);
            theta = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double exact = grad_arrays[a][k];
            const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
            const double rel = std::abs(exact - numeric) / denom;
            ++result.checked;
            if (result.worst_parameter.empty() || rel > result.max_discrepancy) {
                result.max_discrepancy = rel;
                result.worst_parameter = std::string(names[a]);
                result.worst_index = k;
            }
        }
    }
    return result;
}

GradCheckResult grad_check(const MixLinearParams& params, std::span<const Sample> batch, const ModelConfig& config,
                           double step) {
    return grad_check(params, batch, config, step, backward(batch, params, config).grads);
}

AdamState::AdamState(const MixLinearParams& shape_like)
    : first_moment(zeros_like(shape_like)), second_moment(zeros_like(shape_like)) {}

void adam_step(MixLinearParams& params, const GradientSet& grads, AdamState& state, double learning_rate) {
    GradientSet g_copy = grads;
    auto theta = flat_arrays(params);
    auto g = flat_arrays(g_copy);
    auto m = flat_arrays(state.first_moment);
    auto v = flat_arrays(state.second_moment);
    if (g.size() != theta.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(state.beta1, t);
    const double correct2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t a = 0; a < theta.size(); ++a) {
        if (g[a].size() != theta[a].size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
        for (std::size_t k = 0; k < theta[a].size(); ++k) {
            m[a][k] = state.beta1 * m[a][k] + (1.0 - state.beta1) * g[a][k];
            v[a][k] = state.beta2 * v[a][k] + (1.0 - state.beta2) * g[a][k] * g[a][k];
            const double m_hat = m[a][k] / correct1;
            const double v_hat = v[a][k] / correct2;
            theta[a][k] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_mse,val_mse,seconds\n";
    char buf[128];
    for (const auto& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f\n", e.epoch, e.train_mse, e.val_mse, e.seconds);
        out << buf;
    }
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

TrainResult train(const data::WindowSet& train_windows, const data::WindowSet& val_windows,
                  const ModelConfig& model_config, const TrainConfig& train_config) {
    validate(train_config);
    model::validate(model_config);
    if (train_windows.size() == 0 || val_windows.size() == 0) throw std::invalid_argument("train: empty split");
    if (train_windows.lookback() != model_config.lookback || train_windows.horizon() != model_config.horizon) {
        throw ConfigError("train: window geometry does not match the model configuration");
    }
    const std::size_t channels = train_windows.channels();
    const std::size_t batch_windows =
        train_config.batch_size > 0 ? train_config.batch_size : default_batch_size(channels);

    MixLinearParams params = model::init_params(model_config, train_config.seed);
    AdamState adam(params);
    std::mt19937_64 shuffler(train_config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result{params, {}};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::vector<Sample> batch;
    batch.reserve(batch_windows * channels);

    using Clock = std::chrono::steady_clock;
    for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
        const auto start = Clock::now();
        std::shuffle(order.begin(), order.end(), shuffler);
        double weighted_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t first = 0; first < order.size(); first += batch_windows) {
            batch.clear();
            const std::size_t last = std::min(order.size(), first + batch_windows);
            for (std::size_t k = first; k < last; ++k) {
                for (std::size_t c = 0; c < channels; ++c) {
                    batch.push_back({train_windows.input(order[k], c), train_windows.target(order[k], c)});
                }
            }
            LossAndGradient lg = backward(batch, params, model_config);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            adam_step(params, lg.grads, adam, train_config.learning_rate);
            weighted_loss += lg.loss * static_cast<double>(batch.size());
            seen += batch.size();
        }
        const double train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        const Metrics val = evaluate(params, val_windows, model_config);
        if (!std::isfinite(val.mse)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
        const double total_seconds = std::chrono::duration<double>(Clock::now() - start).count();

        result.history.epochs.push_back(
            {epoch, weighted_loss / static_cast<double>(seen), val.mse, train_seconds, total_seconds});
        if (val.mse < best_val) {
            best_val = val.mse;
            result.params = params;
            result.history.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= train_config.patience) {
            break;
        }
    }
    return result;
}

Metrics evaluate(const MixLinearParams& params, const data::WindowSet& windows, const ModelConfig& config) {
    if (windows.size() == 0) throw std::invalid_argument("evaluate: empty window set");
    model::validate(config);
    if (windows.lookback() != config.lookback || windows.horizon() != config.horizon) {
        throw ConfigError("evaluate: window geometry " + std::to_string(windows.lookback()) + "->" +
                          std::to_string(windows.horizon()) + " does not match model " +
                          std::to_string(config.lookback) + "->" + std::to_string(config.horizon));
    }
    const std::size_t channels = windows.channels();
    const std::size_t total = windows.size() * channels;
    const std::size_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<double> sq(chunks, 0.0);
    std::vector<double> ab(chunks, 0.0);
    for_each_chunk(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(total, (c + 1) * kChunk);
        for (std::size_t s = c * kChunk; s < end; ++s) {
            const auto input = windows.input(s / channels, s % channels);
            const auto target = windows.target(s / channels, s % channels);
            const RealVector pred = model::forward(input, params, config);
            for (std::size_t t = 0; t < pred.size(); ++t) {
                const double d = pred[t] - target[t];
                sq[c] += d * d;
                ab[c] += std::abs(d);
            }
        }
    });
    const double n = static_cast<double>(total * config.horizon);
    return {std::accumulate(sq.begin(), sq.end(), 0.0) / n, std::accumulate(ab.begin(), ab.end(), 0.0) / n};
}

}  // namespace mixlinear::training
