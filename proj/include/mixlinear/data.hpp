#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixlinear/numerics.hpp"

namespace mixlinear::data {

using numerics::RealMatrix;

/// Timestamped T x C table. Timestamps are opaque strings kept in file order.
struct RawSeries {
    std::string time_header = "date";
    std::vector<std::string> timestamps;
    std::vector<std::string> channel_names;
    RealMatrix values;  // T x C

    std::size_t length() const { return values.rows; }
    std::size_t channels() const { return values.cols; }
};

/// Reads a benchmark-layout CSV: header row, first column a timestamp,
/// every other column numeric. Errors name the 1-based file line and column.
RawSeries load_csv(const std::filesystem::path& path);

/// Writes the same layout with round-trip (17 significant digit) precision.
void save_csv(const std::filesystem::path& path, const RawSeries& series);

struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    static SplitSpec ett() { return {0.6, 0.2, 0.2}; }
    static SplitSpec standard() { return {0.7, 0.1, 0.2}; }
};

void validate(const SplitSpec& spec);

/// One chronological segment. `values` includes `overlap` leading rows
/// borrowed from the previous segment so the first window has a full
/// look-back; those rows are never targets.
struct Split {
    RealMatrix values;
    std::size_t first_row = 0;  // absolute index of values row 0
    std::size_t overlap = 0;
    bool standardized = false;

    std::size_t length() const { return values.rows; }
};

struct SplitSeries {
    Split train;
    Split val;
    Split test;
    std::size_t train_end = 0;  // first row after train
    std::size_t val_end = 0;    // first row after val
};

/// Chronological train/val/test cut at floor(T * cumulative fraction); val
/// and test reach back `lookback` rows. Each segment must hold at least
/// lookback + horizon rows.
SplitSeries split_series(const RawSeries& series, const SplitSpec& spec, std::size_t lookback,
                         std::size_t horizon);

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-channel mean and population standard deviation of the train split.
NormalizationStats fit_stats(const Split& train);

void apply_stats(Split& split, const NormalizationStats& stats);
void remove_stats(Split& split, const NormalizationStats& stats);

struct Standardized {
    SplitSeries splits;
    NormalizationStats stats;
};

/// z-scores every split with train-only statistics.
Standardized standardize(SplitSeries splits);

/// Sliding (look-back, horizon) windows with stride 1 over one split.
/// Data is held channel-major so each window/channel slice is contiguous.
class WindowSet {
public:
    WindowSet(const Split& split, std::size_t lookback, std::size_t horizon);

    std::size_t size() const { return count_; }
    std::size_t channels() const { return channels_; }
    std::size_t lookback() const { return lookback_; }
    std::size_t horizon() const { return horizon_; }

    std::span<const double> input(std::size_t window, std::size_t channel) const;
    std::span<const double> target(std::size_t window, std::size_t channel) const;

    /// FNV-1a digest of the window geometry and underlying values.
    std::uint64_t hash() const;

private:
    std::shared_ptr<const std::vector<double>> series_;  // C x T
    std::size_t rows_ = 0;
    std::size_t channels_ = 0;
    std::size_t lookback_ = 0;
    std::size_t horizon_ = 0;
    std::size_t count_ = 0;
};

WindowSet make_windows(const Split& split, std::size_t lookback, std::size_t horizon);

struct SynthSpec {
    std::size_t length = 2000;
    std::size_t period = 24;
    std::size_t channels = 1;
    std::vector<double> amplitudes{1.0};  // harmonic k+1 of the period
    double trend_slope = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

/// x_c[t] = sum_k a_k sin(2 pi (k+1) t / w + phase_{c,k}) + slope * t + noise.
/// Phases and noise are drawn from `seed`.
RawSeries synth_generate(const SynthSpec& spec);

}  // namespace mixlinear::data
