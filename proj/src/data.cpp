#include "mixlinear/data.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mixlinear/errors.hpp"

namespace mixlinear::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string location(const std::filesystem::path& path, std::size_t line, std::size_t col) {
    return path.string() + ": row " + std::to_string(line) + ", col " + std::to_string(col);
}

std::string format_hour(std::size_t offset) {
    using namespace std::chrono;
    const sys_days start = year{2016} / July / 1;
    const auto stamp = start + hours{static_cast<long>(offset)};
    const auto day = floor<days>(stamp);
    const year_month_day ymd{day};
    const auto hour = duration_cast<hours>(stamp - day).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02ld:00:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<long>(hour));
    return buf;
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

RawSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    RawSeries series;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_fields(line);
    if (header.size() < 2) throw DataError(path.string() + ": need a timestamp column and at least one channel");
    series.time_header = std::string(trim(header[0]));
    for (std::size_t c = 1; c < header.size(); ++c) series.channel_names.emplace_back(trim(header[c]));
    const std::size_t channels = series.channel_names.size();

    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != channels + 1) {
            throw DataError(location(path, line_no, fields.size()) + ": expected " + std::to_string(channels + 1) +
                            " fields, found " + std::to_string(fields.size()));
        }
        series.timestamps.emplace_back(trim(fields[0]));
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const auto cell = trim(fields[c]);
            if (cell.empty()) throw DataError(location(path, line_no, c + 1) + ": missing value");
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw DataError(location(path, line_no, c + 1) + ": non-numeric value '" + std::string(cell) + "'");
            }
            values.push_back(v);
        }
    }
    series.values.rows = series.timestamps.size();
    series.values.cols = channels;
    series.values.data = std::move(values);
    return series;
}

void save_csv(const std::filesystem::path& path, const RawSeries& series) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << series.time_header;
    for (const auto& name : series.channel_names) out << ',' << name;
    out << '\n';
    char buf[40];
    for (std::size_t t = 0; t < series.length(); ++t) {
        out << (t < series.timestamps.size() ? series.timestamps[t] : std::to_string(t));
        for (std::size_t c = 0; c < series.channels(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.values(t, c));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void validate(const SplitSpec& spec) {
    if (!(spec.train > 0 && spec.val > 0 && spec.test > 0) ||
        std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must be positive and sum to 1");
    }
}

SplitSeries split_series(const RawSeries& series, const SplitSpec& spec, std::size_t lookback,
                         std::size_t horizon) {
    validate(spec);
    const std::size_t total = series.length();
    const double t = static_cast<double>(total);
    const auto train_end = static_cast<std::size_t>(std::floor(t * spec.train + 1e-9));
    const auto val_end = static_cast<std::size_t>(std::floor(t * (spec.train + spec.val) + 1e-9));

    auto cut = [&](std::size_t begin, std::size_t end, std::size_t reach_back, const char* name) {
        const std::size_t overlap = std::min(reach_back, begin);
        const std::size_t first = begin - overlap;
        if (end - first < lookback + horizon) {
            throw ConfigError(std::string(name) + " split has " + std::to_string(end - first) +
                              " rows, needs at least look-back + horizon = " + std::to_string(lookback + horizon));
        }
        Split s;
        s.first_row = first;
        s.overlap = overlap;
        s.values = RealMatrix(end - first, series.channels());
        std::copy(series.values.data.begin() + static_cast<std::ptrdiff_t>(first * series.channels()),
                  series.values.data.begin() + static_cast<std::ptrdiff_t>(end * series.channels()),
                  s.values.data.begin());
        return s;
    };

    SplitSeries out;
    out.train_end = train_end;
    out.val_end = val_end;
    out.train = cut(0, train_end, 0, "train");
    out.val = cut(train_end, val_end, lookback, "validation");
    out.test = cut(val_end, total, lookback, "test");
    return out;
}

NormalizationStats fit_stats(const Split& train) {
    const std::size_t rows = train.length();
    const std::size_t cols = train.values.cols;
    if (rows == 0) throw DataError("cannot fit normalization on an empty split");
    NormalizationStats stats{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += train.values(r, c);
        const double mean = sum / static_cast<double>(rows);
        double sq = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = train.values(r, c) - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(rows));
        if (!(sd > 1e-12)) {
            throw DataError("channel " + std::to_string(c) + " is constant on the train split; cannot standardize");
        }
        stats.mean[c] = mean;
        stats.std[c] = sd;
    }
    return stats;
}

void apply_stats(Split& split, const NormalizationStats& stats) {
    if (split.standardized) throw std::logic_error("split is already standardized");
    if (stats.mean.size() != split.values.cols) throw std::invalid_argument("normalization stats channel mismatch");
    for (std::size_t r = 0; r < split.length(); ++r) {
        for (std::size_t c = 0; c < split.values.cols; ++c) {
            split.values(r, c) = (split.values(r, c) - stats.mean[c]) / stats.std[c];
        }
    }
    split.standardized = true;
}

void remove_stats(Split& split, const NormalizationStats& stats) {
    if (!split.standardized) throw std::logic_error("split is not standardized");
    if (stats.mean.size() != split.values.cols) throw std::invalid_argument("normalization stats channel mismatch");
    for (std::size_t r = 0; r < split.length(); ++r) {
        for (std::size_t c = 0; c < split.values.cols; ++c) {
            split.values(r, c) = split.values(r, c) * stats.std[c] + stats.mean[c];
        }
    }
    split.standardized = false;
}

Standardized standardize(SplitSeries splits) {
    NormalizationStats stats = fit_stats(splits.train);
    apply_stats(splits.train, stats);
    apply_stats(splits.val, stats);
    apply_stats(splits.test, stats);
    return {std::move(splits), std::move(stats)};
}

WindowSet::WindowSet(const Split& split, std::size_t lookback, std::size_t horizon)
    : rows_(split.length()), channels_(split.values.cols), lookback_(lookback), horizon_(horizon) {
    if (lookback == 0 || horizon == 0) throw ConfigError("look-back and horizon must be positive");
    if (rows_ < lookback + horizon) {
        throw ConfigError("split of " + std::to_string(rows_) + " rows is shorter than look-back + horizon = " +
                          std::to_string(lookback + horizon));
    }
    count_ = rows_ - lookback - horizon + 1;
    auto cm = std::make_shared<std::vector<double>>(rows_ * channels_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < channels_; ++c) (*cm)[c * rows_ + r] = split.values(r, c);
    }
    series_ = std::move(cm);
}

std::span<const double> WindowSet::input(std::size_t window, std::size_t channel) const {
    return {series_->data() + channel * rows_ + window, lookback_};
}

std::span<const double> WindowSet::target(std::size_t window, std::size_t channel) const {
    return {series_->data() + channel * rows_ + window + lookback_, horizon_};
}

std::uint64_t WindowSet::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::uint64_t geometry[4] = {rows_, channels_, lookback_, horizon_};
    fnv_mix(h, geometry, sizeof(geometry));
    fnv_mix(h, series_->data(), series_->size() * sizeof(double));
    return h;
}

WindowSet make_windows(const Split& split, std::size_t lookback, std::size_t horizon) {
    return WindowSet(split, lookback, horizon);
}

RawSeries synth_generate(const SynthSpec& spec) {
    if (spec.length == 0 || spec.period == 0 || spec.channels == 0) {
        throw ConfigError("synthetic series needs positive length, period and channel count");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);

    RawSeries s;
    s.values = RealMatrix(spec.length, spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c) s.channel_names.push_back("ch" + std::to_string(c));
    s.timestamps.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) s.timestamps.push_back(format_hour(t));

    const double w = static_cast<double>(spec.period);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        std::vector<double> phases(spec.amplitudes.size());
        for (double& p : phases) p = phase_dist(rng);
        for (std::size_t t = 0; t < spec.length; ++t) {
            const double cycle = static_cast<double>(t % spec.period);
            double v = spec.trend_slope * static_cast<double>(t);
            for (std::size_t k = 0; k < spec.amplitudes.size(); ++k) {
                v += spec.amplitudes[k] *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(k + 1) * cycle / w + phases[k]);
            }
            if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
            s.values(t, c) = v;
        }
    }
    return s;
}

}  // namespace mixlinear::data
