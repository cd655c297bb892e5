#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlinear/data.hpp"
#include "mixlinear/model.hpp"

namespace mixlinear::training {

using model::GradientSet;
using model::MixLinearParams;
using model::ModelConfig;

struct TrainConfig {
    double learning_rate = 0.02;
    std::size_t max_epochs = 30;
    std::size_t patience = 10;
    std::size_t batch_size = 0;  // 0 selects by channel count
    std::uint64_t seed = 1;
};

/// 256 below 100 channels, 128 below 300, 64 otherwise.
std::size_t default_batch_size(std::size_t channels);

void validate(const TrainConfig& config);

/// One univariate (look-back, horizon) pair.
struct Sample {
    std::span<const double> input;
    std::span<const double> target;
};

double mse_loss(const numerics::RealMatrix& pred, const numerics::RealMatrix& target);

struct LossAndGradient {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean squared error over the batch and its exact gradient w.r.t. every
/// learned scalar (complex weights differentiated per real/imaginary part).
LossAndGradient backward(std::span<const Sample> batch, const MixLinearParams& params, const ModelConfig& config);

double batch_loss(std::span<const Sample> batch, const MixLinearParams& params, const ModelConfig& config);

struct GradCheckResult {
    double max_discrepancy = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// Compares `analytic` with central differences of batch_loss, one scalar
/// at a time. Relative error uses max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const MixLinearParams& params, std::span<const Sample> batch, const ModelConfig& config,
                           double step, const GradientSet& analytic);

/// Same, against backward()'s own gradient.
GradCheckResult grad_check(const MixLinearParams& params, std::span<const Sample> batch, const ModelConfig& config,
                           double step);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    GradientSet first_moment;
    GradientSet second_moment;

    explicit AdamState(const MixLinearParams& shape_like);
};

void adam_step(MixLinearParams& params, const GradientSet& grads, AdamState& state, double learning_rate);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
    double seconds = 0.0;        // training loop only
    double total_seconds = 0.0;  // including validation
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based index into epochs
};

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

struct TrainResult {
    MixLinearParams params;  // from the best validation epoch
    TrainHistory history;
};

TrainResult train(const data::WindowSet& train_windows, const data::WindowSet& val_windows,
                  const ModelConfig& model_config, const TrainConfig& train_config);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

/// Mean error over every window and channel of `windows`.
Metrics evaluate(const MixLinearParams& params, const data::WindowSet& windows, const ModelConfig& config);

/// Worker count from MIXLINEAR_THREADS, else hardware concurrency.
std::size_t worker_count();

}  // namespace mixlinear::training
