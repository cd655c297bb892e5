#include "mixlinear/evalbench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixlinear/errors.hpp"

namespace mixlinear::evalbench {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_seconds(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string reference_name(model::Mode mode) {
    switch (mode) {
        case model::Mode::Mix: return "MixLinear";
        case model::Mode::TimeOnly: return "TLinear";
        case model::Mode::FreqOnly: return "FLinear";
        case model::Mode::SparseBaseline: return "SparseTSF";
    }
    return "";
}

/// Runs `fn`, prefixing any error with the pipeline stage while keeping
/// its category.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    const std::string prefix = std::string(name) + ": ";
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const NumericError& e) {
        throw NumericError(prefix + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(prefix + e.what());
    }
}

struct Pipeline {
    data::WindowSet train;
    data::WindowSet val;
    data::WindowSet test;
    std::string hash;
};

Pipeline build_pipeline(const data::RawSeries& series, const model::ModelConfig& config,
                        const data::SplitSpec& split) {
    auto splits = stage("split", [&] { return data::split_series(series, split, config.lookback, config.horizon); });
    auto standardized = stage("standardize", [&] { return data::standardize(std::move(splits)); });
    return stage("window", [&] {
        const auto& s = standardized.splits;
        Pipeline p{data::make_windows(s.train, config.lookback, config.horizon),
                   data::make_windows(s.val, config.lookback, config.horizon),
                   data::make_windows(s.test, config.lookback, config.horizon),
                   {}};
        p.hash = hex(p.train.hash()) + hex(p.val.hash()) + hex(p.test.hash());
        return p;
    });
}

BenchmarkRun run_on(const Pipeline& pipe, const std::string& dataset_id, const model::ModelConfig& config,
                    const training::TrainConfig& train_config, const std::string& split_name) {
    stage("configure", [&] { model::validate(config); });
    auto trained = stage("train", [&] { return training::train(pipe.train, pipe.val, config, train_config); });
    const auto metrics = stage("evaluate", [&] { return training::evaluate(trained.params, pipe.test, config); });

    RunReport r;
    r.dataset = dataset_id;
    r.model = config;
    r.seed = train_config.seed;
    r.split = split_name;
    r.test_mse = metrics.mse;
    r.test_mae = metrics.mae;
    r.param_count = model::param_count(config);
    r.macs = count_macs(config).total;
    r.epochs_run = trained.history.epochs.size();
    r.best_epoch = trained.history.best_epoch;
    double train_seconds = 0.0;
    for (const auto& e : trained.history.epochs) {
        train_seconds += e.seconds;
        r.total_seconds += e.total_seconds;
        if (e.epoch == r.best_epoch) r.best_val_mse = e.val_mse;
    }
    r.epoch_seconds = r.epochs_run > 0 ? train_seconds / static_cast<double>(r.epochs_run) : 0.0;
    r.train_windows = pipe.train.size();
    r.val_windows = pipe.val.size();
    r.test_windows = pipe.test.size();
    r.data_hash = pipe.hash;
    r.history = std::move(trained.history);
    return {std::move(r), std::move(trained.params)};
}

}  // namespace

MacCount count_macs(const model::ModelConfig& config) {
    model::validate(config);
    const model::ShapePlan p = model::plan_shapes(config);
    const std::size_t w = config.period;
    MacCount m;
    m.conv = config.lookback * w;
    if (model::uses_time_branch(config.mode)) m.time_branch = w * p.s_in * p.s_out * (p.s_in + p.s_out);
    if (model::uses_freq_branch(config.mode)) {
        const std::size_t analysis = 2 * p.n_hat * config.lpf_cutoff;
        const std::size_t latent = 4 * (config.lpf_cutoff * config.latent_width + config.latent_width * p.bins_out);
        const std::size_t synthesis = 2 * p.m_hat * p.bins_out;
        m.freq_branch = w * (analysis + latent + synthesis);
    }
    if (config.mode == model::Mode::SparseBaseline) m.sparse_branch = w * p.n * p.m;
    m.total = m.conv + m.time_branch + m.freq_branch + m.sparse_branch;
    return m;
}

std::string mac_convention() {
    return "per univariate prediction; conv L*w; time w*s_in*s_out*(s_in+s_out); "
           "freq w*(2*n_hat*n_lpf pruned real DFT + 4*(n_lpf*n_z + n_z*bins_out) complex-as-4-real + "
           "2*m_hat*bins_out direct real synthesis); sparse w*n*m";
}

BenchmarkRun run_benchmark(const data::RawSeries& series, const std::string& dataset_id,
                           const model::ModelConfig& model_config, const training::TrainConfig& train_config,
                           const data::SplitSpec& split, const std::string& split_name) {
    const Pipeline pipe = build_pipeline(series, model_config, split);
    return run_on(pipe, dataset_id, model_config, train_config, split_name);
}

std::array<BenchmarkRun, 3> run_ablation(const data::RawSeries& series, const std::string& dataset_id,
                                         const model::ModelConfig& base, const training::TrainConfig& train_config,
                                         const data::SplitSpec& split, const std::string& split_name) {
    constexpr std::array<model::Mode, 3> modes{model::Mode::Mix, model::Mode::TimeOnly, model::Mode::FreqOnly};
    std::array<BenchmarkRun, 3> out;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        model::ModelConfig cfg = base;
        cfg.mode = modes[i];
        const Pipeline pipe = build_pipeline(series, cfg, split);
        out[i] = run_on(pipe, dataset_id, cfg, train_config, split_name);
        if (out[i].report.data_hash != out[0].report.data_hash) {
            throw std::logic_error("ablation: data pipeline differs between modes");
        }
    }
    return out;
}

SweepResult run_lpf_sweep(const data::RawSeries& series, const std::string& dataset_id,
                          const model::ModelConfig& base, const training::TrainConfig& train_config,
                          const data::SplitSpec& split, std::vector<std::size_t> cutoffs,
                          const std::string& split_name) {
    if (cutoffs.empty()) throw ConfigError("sweep: no cutoffs given");
    std::sort(cutoffs.begin(), cutoffs.end());
    if (std::adjacent_find(cutoffs.begin(), cutoffs.end()) != cutoffs.end()) {
        throw ConfigError("sweep: duplicate cutoff values");
    }
    const model::ShapePlan plan = model::plan_shapes(base);
    for (const std::size_t c : cutoffs) {
        if (c == 0 || c > plan.bins_in) {
            throw ConfigError("sweep: cutoff " + std::to_string(c) + " outside [1, " + std::to_string(plan.bins_in) +
                              "]");
        }
    }
    const Pipeline pipe = build_pipeline(series, base, split);
    SweepResult out;
    for (const std::size_t c : cutoffs) {
        model::ModelConfig cfg = base;
        cfg.lpf_cutoff = c;
        out.runs.emplace_back(c, run_on(pipe, dataset_id, cfg, train_config, split_name).report);
    }
    return out;
}

std::string render_report(const RunReport& r) {
    std::ostringstream out;
    out << "schema_version = " << kReportSchemaVersion << '\n'
        << "dataset = " << r.dataset << '\n'
        << "mode = " << model::to_string(r.model.mode) << '\n'
        << "lookback = " << r.model.lookback << '\n'
        << "horizon = " << r.model.horizon << '\n'
        << "period = " << r.model.period << '\n'
        << "lpf_cutoff = " << r.model.lpf_cutoff << '\n'
        << "latent_width = " << r.model.latent_width << '\n'
        << "seed = " << r.seed << '\n'
        << "split = " << r.split << '\n'
        << "test_mse = " << fmt_double(r.test_mse) << '\n'
        << "test_mae = " << fmt_double(r.test_mae) << '\n'
        << "best_val_mse = " << fmt_double(r.best_val_mse) << '\n'
        << "param_count = " << r.param_count << '\n'
        << "macs = " << r.macs << '\n'
        << "mac_convention = " << mac_convention() << '\n'
        << "epochs_run = " << r.epochs_run << '\n'
        << "best_epoch = " << r.best_epoch << '\n'
        << "train_windows = " << r.train_windows << '\n'
        << "val_windows = " << r.val_windows << '\n'
        << "test_windows = " << r.test_windows << '\n'
        << "data_hash = " << r.data_hash << '\n'
        << "epoch_seconds = " << fmt_seconds(r.epoch_seconds) << '\n'
        << "total_seconds = " << fmt_seconds(r.total_seconds) << '\n';
    if (const auto ref = reference_mse(reference_name(r.model.mode), r.dataset, r.model.horizon)) {
        out << "reference_mse = " << fmt_double(*ref) << '\n';
    }
    return out.str();
}

RunReport parse_report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    auto get = [&kv](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw DataError("report: missing field '" + key + "'");
        return it->second;
    };
    auto size = [&](const std::string& key) { return static_cast<std::size_t>(std::stoull(get(key))); };
    auto real = [&](const std::string& key) { return std::stod(get(key)); };

    if (std::stoi(get("schema_version")) != kReportSchemaVersion) throw DataError("report: unsupported schema");
    RunReport r;
    r.dataset = get("dataset");
    r.model.mode = model::parse_mode(get("mode"));
    r.model.lookback = size("lookback");
    r.model.horizon = size("horizon");
    r.model.period = size("period");
    r.model.lpf_cutoff = size("lpf_cutoff");
    r.model.latent_width = size("latent_width");
    r.seed = std::stoull(get("seed"));
    r.split = get("split");
    r.test_mse = real("test_mse");
    r.test_mae = real("test_mae");
    r.best_val_mse = real("best_val_mse");
    r.param_count = size("param_count");
    r.macs = size("macs");
    r.epochs_run = size("epochs_run");
    r.best_epoch = size("best_epoch");
    r.train_windows = size("train_windows");
    r.val_windows = size("val_windows");
    r.test_windows = size("test_windows");
    r.data_hash = get("data_hash");
    r.epoch_seconds = real("epoch_seconds");
    r.total_seconds = real("total_seconds");
    return r;
}

std::string csv_header() {
    return "dataset,mode,lookback,horizon,period,lpf_cutoff,latent_width,seed,test_mse,test_mae,best_val_mse,"
           "param_count,macs,epochs_run,best_epoch,epoch_seconds,data_hash,reference_mse";
}

std::string csv_row(const RunReport& r) {
    std::ostringstream out;
    out << r.dataset << ',' << model::to_string(r.model.mode) << ',' << r.model.lookback << ',' << r.model.horizon
        << ',' << r.model.period << ',' << r.model.lpf_cutoff << ',' << r.model.latent_width << ',' << r.seed << ','
        << fmt_double(r.test_mse) << ',' << fmt_double(r.test_mae) << ',' << fmt_double(r.best_val_mse) << ','
        << r.param_count << ',' << r.macs << ',' << r.epochs_run << ',' << r.best_epoch << ','
        << fmt_seconds(r.epoch_seconds) << ',' << r.data_hash << ',';
    if (const auto ref = reference_mse(reference_name(r.model.mode), r.dataset, r.model.horizon)) {
        out << fmt_double(*ref);
    }
    return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::filesystem::path csv_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".csv";
    return p;
}

}  // namespace

void write_report(const RunReport& report, const std::filesystem::path& path) {
    write_text(path, render_report(report));
    write_text(csv_path(path), csv_header() + '\n' + csv_row(report) + '\n');
}

void write_report(const SweepResult& sweep, const std::filesystem::path& path) {
    std::ostringstream doc;
    std::ostringstream csv;
    doc << "schema_version = " << kReportSchemaVersion << '\n' << "sweep = lpf_cutoff\n"
        << "runs = " << sweep.runs.size() << '\n';
    csv << "cutoff," << csv_header() << ",reference_lpf_mse\n";
    for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
        const auto& [cutoff, report] = sweep.runs[i];
        doc << "\n# run " << i << " cutoff " << cutoff << '\n' << render_report(report);
        csv << cutoff << ',' << csv_row(report) << ',';
        if (const auto ref = reference_lpf_mse(cutoff, report.dataset, report.model.horizon)) csv << fmt_double(*ref);
        csv << '\n';
    }
    write_text(path, doc.str());
    write_text(csv_path(path), csv.str());
}

void write_ablation_csv(const std::array<BenchmarkRun, 3>& runs, const std::filesystem::path& path) {
    std::string text = csv_header() + '\n';
    for (const auto& run : runs) text += csv_row(run.report) + '\n';
    write_text(path, text);
}

RunReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_report(buf.str());
}

std::string report_stem(const RunReport& report) {
    return report.dataset + "_" + std::string(model::to_string(report.model.mode)) + "_H" +
           std::to_string(report.model.horizon) + "_s" + std::to_string(report.seed);
}

}  // namespace mixlinear::evalbench
