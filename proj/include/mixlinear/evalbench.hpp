#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixlinear/data.hpp"
#include "mixlinear/model.hpp"
#include "mixlinear/training.hpp"

namespace mixlinear::evalbench {

inline constexpr int kReportSchemaVersion = 1;

struct MacCount {
    std::size_t conv = 0;
    std::size_t time_branch = 0;
    std::size_t freq_branch = 0;
    std::size_t sparse_branch = 0;
    std::size_t total = 0;
};

/// Multiply-accumulates for one univariate L -> H prediction.
MacCount count_macs(const model::ModelConfig& config);

/// Human-readable statement of the convention count_macs follows.
std::string mac_convention();

struct RunReport {
    std::string dataset;
    model::ModelConfig model;
    std::uint64_t seed = 0;
    std::string split = "default";
    double test_mse = 0.0;
    double test_mae = 0.0;
    double best_val_mse = 0.0;
    std::size_t param_count = 0;
    std::size_t macs = 0;
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double epoch_seconds = 0.0;  // mean training-loop time per epoch
    double total_seconds = 0.0;  // whole train() call including validation
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::size_t test_windows = 0;
    std::string data_hash;  // hex digest of the train/val/test window sets
    training::TrainHistory history;
};

struct BenchmarkRun {
    RunReport report;
    model::MixLinearParams params;
};

/// split -> standardize -> window -> train -> evaluate on test.
/// Failures are rethrown with the stage name prefixed.
BenchmarkRun run_benchmark(const data::RawSeries& series, const std::string& dataset_id,
                           const model::ModelConfig& model_config, const training::TrainConfig& train_config,
                           const data::SplitSpec& split, const std::string& split_name = "default");

/// Mix, TimeOnly, FreqOnly on one shared data pipeline and seed. Throws if
/// the window hashes ever differ between modes.
std::array<BenchmarkRun, 3> run_ablation(const data::RawSeries& series, const std::string& dataset_id,
                                         const model::ModelConfig& base, const training::TrainConfig& train_config,
                                         const data::SplitSpec& split, const std::string& split_name = "default");

struct SweepResult {
    std::vector<std::pair<std::size_t, RunReport>> runs;  // strictly increasing cutoff
};

/// One full run per LPF cutoff. Cutoffs are sorted; duplicates and values
/// outside [1, bins_in] are configuration errors.
SweepResult run_lpf_sweep(const data::RawSeries& series, const std::string& dataset_id,
                          const model::ModelConfig& base, const training::TrainConfig& train_config,
                          const data::SplitSpec& split, std::vector<std::size_t> cutoffs,
                          const std::string& split_name = "default");

/// Stable key/value document (one `key = value` per line).
std::string render_report(const RunReport& report);
RunReport parse_report(const std::string& text);

std::string csv_header();
std::string csv_row(const RunReport& report);

/// Writes `<path>` (key/value document) and `<path>.csv` (one metrics row).
void write_report(const RunReport& report, const std::filesystem::path& path);
/// Writes `<path>` (document with one block per cutoff) and `<path>.csv`.
void write_report(const SweepResult& sweep, const std::filesystem::path& path);
/// Three-row comparison CSV.
void write_ablation_csv(const std::array<BenchmarkRun, 3>& runs, const std::filesystem::path& path);

RunReport read_report(const std::filesystem::path& path);

/// `<dataset>_<mode>_H<horizon>_s<seed>` for file naming.
std::string report_stem(const RunReport& report);

/// Published MSE for (model, dataset, horizon), when one exists.
std::optional<double> reference_mse(const std::string& model_name, const std::string& dataset, std::size_t horizon);

/// Published MSE for the LPF-cutoff study.
std::optional<double> reference_lpf_mse(std::size_t cutoff, const std::string& dataset, std::size_t horizon);

}  // namespace mixlinear::evalbench
