#include "mixlinear/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "mixlinear/checkpoint.hpp"
#include "mixlinear/data.hpp"
#include "mixlinear/errors.hpp"
#include "mixlinear/evalbench.hpp"
#include "mixlinear/model.hpp"
#include "mixlinear/training.hpp"

namespace mixlinear::cli {

namespace {

struct Key {
    const char* name;
    const char* fallback;  // nullptr: required, "": optional and empty
    const char* help;
};

const std::vector<Key> kModelKeys = {
    {"data", nullptr, "dataset CSV"},
    {"out", "runs", "output directory"},
    {"lookback", "720", "look-back length L"},
    {"horizon", "96", "forecast horizon H"},
    {"period", nullptr, "period w"},
    {"cutoff", "5", "low-pass cutoff bins"},
    {"latent", "2", "latent spectral width"},
    {"mode", "mix", "mix | time | freq | sparse"},
    {"lr", "0.02", "Adam learning rate"},
    {"epochs", "30", "maximum epochs"},
    {"patience", "10", "early-stopping patience"},
    {"batch", "0", "windows per batch (0 picks by channel count)"},
    {"seed", "1", "random seed"},
    {"split", "auto", "ett | default | auto (ett for ETT* files)"},
};

std::vector<Key> keys_for(const std::string& command) {
    if (command == "train" || command == "ablate") return kModelKeys;
    if (command == "sweep") {
        std::vector<Key> keys = kModelKeys;
        keys.push_back({"cutoffs", nullptr, "comma-separated cutoff list"});
        return keys;
    }
    if (command == "eval") {
        return {{"checkpoint", nullptr, "checkpoint file"},
                {"data", nullptr, "dataset CSV"},
                {"out", "", "directory for the report (optional)"},
                {"split", "auto", "ett | default | auto"}};
    }
    if (command == "gradcheck") {
        return {{"trials", "20", "number of random configurations"},
                {"seed", "1", "random seed"},
                {"lookback", "", "fix L instead of drawing it"},
                {"horizon", "", "fix H"},
                {"period", "", "fix w"},
                {"cutoff", "", "fix the cutoff"},
                {"latent", "", "fix the latent width"},
                {"mode", "", "fix the mode"},
                {"corrupt", "", "perturb the analytic gradient of this parameter"}};
    }
    if (command == "synth") {
        return {{"out", nullptr, "output CSV path"},
                {"length", "2000", "number of rows T"},
                {"period", "24", "period w"},
                {"channels", "1", "number of channels"},
                {"amplitudes", "1", "comma-separated harmonic amplitudes"},
                {"trend", "0", "linear trend slope per step"},
                {"noise", "0", "Gaussian noise std"},
                {"seed", "1", "random seed"}};
    }
    return {};
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& text = cfg.at(key);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("--" + key + ": expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

double to_double(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& text = cfg.at(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw ConfigError("--" + key + ": expected a number, got '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::string dataset_id(const std::filesystem::path& path) { return path.stem().string(); }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Resolves `auto` against the dataset name.
std::string resolve_split(const std::string& requested, const std::string& dataset) {
    if (requested == "ett" || requested == "default") return requested;
    if (requested != "auto") throw ConfigError("--split: expected ett, default or auto, got '" + requested + "'");
    return lower(dataset).rfind("ett", 0) == 0 ? "ett" : "default";
}

data::SplitSpec split_spec(const std::string& name) {
    return name == "ett" ? data::SplitSpec::ett() : data::SplitSpec::standard();
}

model::ModelConfig model_config(const std::map<std::string, std::string>& cfg) {
    model::ModelConfig m;
    m.lookback = to_size(cfg, "lookback");
    m.horizon = to_size(cfg, "horizon");
    m.period = to_size(cfg, "period");
    m.lpf_cutoff = to_size(cfg, "cutoff");
    m.latent_width = to_size(cfg, "latent");
    m.mode = model::parse_mode(cfg.at("mode"));
    return m;
}

training::TrainConfig train_config(const std::map<std::string, std::string>& cfg) {
    training::TrainConfig t;
    t.learning_rate = to_double(cfg, "lr");
    t.max_epochs = to_size(cfg, "epochs");
    t.patience = to_size(cfg, "patience");
    t.batch_size = to_size(cfg, "batch");
    t.seed = to_size(cfg, "seed");
    training::validate(t);
    return t;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
}

void print_summary(std::ostream& out, const evalbench::RunReport& r) {
    out << model::to_string(r.model.mode) << " H=" << r.model.horizon << " cutoff=" << r.model.lpf_cutoff
        << ": test_mse = " << r.test_mse << ", test_mae = " << r.test_mae << ", params = " << r.param_count
        << ", epochs = " << r.epochs_run << " (best " << r.best_epoch << ")\n";
}

int cmd_train(RunManifest& m, std::ostream& out) {
    auto& cfg = m.effective;
    const model::ModelConfig mc = model_config(cfg);
    const training::TrainConfig tc = train_config(cfg);
    model::validate(mc);
    const data::RawSeries series = data::load_csv(cfg.at("data"));
    const std::string id = dataset_id(cfg.at("data"));
    const std::string split = resolve_split(cfg.at("split"), id);
    auto run = evalbench::run_benchmark(series, id, mc, tc, split_spec(split), split);

    ensure_dir(m.out_dir);
    checkpoint::save(m.out_dir / "checkpoint.bin", mc, run.params);
    training::write_history_csv(m.out_dir / "history.csv", run.report.history);
    evalbench::write_report(run.report, m.out_dir / (evalbench::report_stem(run.report) + ".report"));
    print_summary(out, run.report);
    return 0;
}

int cmd_eval(RunManifest& m, std::ostream& out) {
    auto& cfg = m.effective;
    const checkpoint::Checkpoint ck = checkpoint::load(cfg.at("checkpoint"));
    const data::RawSeries series = data::load_csv(cfg.at("data"));
    const std::string id = dataset_id(cfg.at("data"));
    const std::string split = resolve_split(cfg.at("split"), id);
    const model::ModelConfig& mc = ck.config;

    auto shapes = [&] {
        return "checkpoint expects L=" + std::to_string(mc.lookback) + ", H=" + std::to_string(mc.horizon) +
               ", w=" + std::to_string(mc.period) + "; dataset has T=" + std::to_string(series.length()) +
               ", C=" + std::to_string(series.channels());
    };
    data::WindowSet test = [&] {
        try {
            auto s = data::standardize(data::split_series(series, split_spec(split), mc.lookback, mc.horizon));
            return data::make_windows(s.splits.test, mc.lookback, mc.horizon);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (" + shapes() + ")");
        }
    }();
    const training::Metrics metrics = training::evaluate(ck.params, test, mc);

    evalbench::RunReport r;
    r.dataset = id;
    r.model = mc;
    r.split = split;
    r.test_mse = metrics.mse;
    r.test_mae = metrics.mae;
    r.param_count = model::param_count(mc);
    r.macs = evalbench::count_macs(mc).total;
    r.test_windows = test.size();
    r.data_hash = [&] {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(test.hash()));
        return std::string(buf);
    }();
    char line[96];
    std::snprintf(line, sizeof(line), "test_mse = %.17g\ntest_mae = %.17g\n", metrics.mse, metrics.mae);
    out << id << " (" << test.size() << " windows x " << test.channels() << " channels)\n" << line;
    if (!m.out_dir.empty()) {
        ensure_dir(m.out_dir);
        evalbench::write_report(r, m.out_dir / ("eval_" + evalbench::report_stem(r) + ".report"));
    }
    return 0;
}

int cmd_sweep(RunManifest& m, std::ostream& out) {
    auto& cfg = m.effective;
    const model::ModelConfig mc = model_config(cfg);
    const training::TrainConfig tc = train_config(cfg);
    std::vector<std::size_t> cutoffs;
    for (const auto& item : split_list(cfg.at("cutoffs"))) {
        std::map<std::string, std::string> one{{"cutoffs", item}};
        cutoffs.push_back(to_size(one, "cutoffs"));
    }
    const data::RawSeries series = data::load_csv(cfg.at("data"));
    const std::string id = dataset_id(cfg.at("data"));
    const std::string split = resolve_split(cfg.at("split"), id);
    const auto sweep = evalbench::run_lpf_sweep(series, id, mc, tc, split_spec(split), cutoffs, split);

    ensure_dir(m.out_dir);
    const std::string stem = evalbench::report_stem(sweep.runs.front().second);
    evalbench::write_report(sweep, m.out_dir / (stem + "_lpf_sweep.report"));
    for (const auto& [cutoff, report] : sweep.runs) print_summary(out, report);
    return 0;
}

int cmd_ablate(RunManifest& m, std::ostream& out) {
    auto& cfg = m.effective;
    const model::ModelConfig mc = model_config(cfg);
    const training::TrainConfig tc = train_config(cfg);
    const data::RawSeries series = data::load_csv(cfg.at("data"));
    const std::string id = dataset_id(cfg.at("data"));
    const std::string split = resolve_split(cfg.at("split"), id);
    const auto runs = evalbench::run_ablation(series, id, mc, tc, split_spec(split), split);

    ensure_dir(m.out_dir);
    evalbench::write_ablation_csv(runs, m.out_dir / (id + "_H" + std::to_string(mc.horizon) + "_s" +
                                                     std::to_string(tc.seed) + "_ablation.csv"));
    for (const auto& run : runs) {
        evalbench::write_report(run.report, m.out_dir / (evalbench::report_stem(run.report) + ".report"));
        print_summary(out, run.report);
    }
    return 0;
}

std::vector<std::string> parameter_names() {
    std::vector<std::string> names;
    model::MixLinearParams p;
    model::for_each_array(p, [&names](std::string_view name, std::span<double>) { names.emplace_back(name); });
    return names;
}

int cmd_gradcheck(RunManifest& m, std::ostream& out, std::ostream& err) {
    auto& cfg = m.effective;
    const std::size_t trials = to_size(cfg, "trials");
    const std::uint64_t seed = to_size(cfg, "seed");
    const std::string corrupt = cfg.at("corrupt");
    if (!corrupt.empty()) {
        const auto names = parameter_names();
        if (std::find(names.begin(), names.end(), corrupt) == names.end()) {
            throw ConfigError("--corrupt: unknown parameter '" + corrupt + "'");
        }
    }
    auto fixed = [&cfg](const char* key) -> std::optional<std::size_t> {
        if (cfg.at(key).empty()) return std::nullopt;
        return to_size(cfg, key);
    };

    std::mt19937_64 rng(seed);
    auto draw = [&rng](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    constexpr std::array<model::Mode, 4> modes{model::Mode::Mix, model::Mode::TimeOnly, model::Mode::FreqOnly,
                                               model::Mode::SparseBaseline};
    training::GradCheckResult worst;
    model::ModelConfig worst_config;
    std::size_t checked = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        model::ModelConfig mc;
        mc.period = fixed("period").value_or(draw(1, 4));
        mc.lookback = fixed("lookback").value_or(draw(mc.period, 16));
        mc.horizon = fixed("horizon").value_or(draw(1, 16));
        mc.mode = cfg.at("mode").empty() ? modes[draw(0, modes.size() - 1)] : model::parse_mode(cfg.at("mode"));
        mc.lpf_cutoff = 1;
        const model::ShapePlan plan = model::plan_shapes(mc);
        mc.lpf_cutoff = fixed("cutoff").value_or(draw(1, plan.bins_in));
        mc.latent_width = fixed("latent").value_or(draw(1, 3));
        model::validate(mc);

        model::MixLinearParams params = model::init_params(mc, seed * 1000 + trial);
        std::normal_distribution<double> normal(0.0, 1.0);
        params.conv_bias = 0.1 * normal(rng);
        for (double& b : params.b_intra) b = 0.1 * normal(rng);
        for (double& b : params.b_inter) b = 0.1 * normal(rng);

        const std::size_t count = draw(1, 4);
        std::vector<double> storage(count * (mc.lookback + mc.horizon));
        for (double& v : storage) v = normal(rng);
        std::vector<training::Sample> batch;
        for (std::size_t k = 0; k < count; ++k) {
            const double* base = storage.data() + k * (mc.lookback + mc.horizon);
            batch.push_back({{base, mc.lookback}, {base + mc.lookback, mc.horizon}});
        }

        auto analytic = training::backward(batch, params, mc).grads;
        if (!corrupt.empty()) {
            model::for_each_array(analytic, [&corrupt](std::string_view name, std::span<double> values) {
                if (name == corrupt && !values.empty()) values[0] += 1.0;
            });
        }
        const auto result = training::grad_check(params, batch, mc, 1e-5, analytic);
        checked += result.checked;
        if (trial == 0 || result.max_discrepancy > worst.max_discrepancy) {
            worst = result;
            worst_config = mc;
        }
    }

    out << "trials = " << trials << "\nscalars_checked = " << checked << "\nmax_discrepancy = " << worst.max_discrepancy
        << "\nworst_parameter = " << worst.worst_parameter << "[" << worst.worst_index << "]\n";
    if (worst.max_discrepancy < 1e-4) {
        out << "gradcheck passed\n";
        return 0;
    }
    err << "gradcheck failed: parameter '" << worst.worst_parameter << "' index " << worst.worst_index
        << " discrepancy " << worst.max_discrepancy << " (mode " << model::to_string(worst_config.mode)
        << ", L=" << worst_config.lookback << ", H=" << worst_config.horizon << ", w=" << worst_config.period
        << ")\n";
    return 1;
}

int cmd_synth(RunManifest& m, std::ostream& out) {
    auto& cfg = m.effective;
    data::SynthSpec spec;
    spec.length = to_size(cfg, "length");
    spec.period = to_size(cfg, "period");
    spec.channels = to_size(cfg, "channels");
    spec.trend_slope = to_double(cfg, "trend");
    spec.noise_std = to_double(cfg, "noise");
    spec.seed = to_size(cfg, "seed");
    spec.amplitudes.clear();
    for (const auto& item : split_list(cfg.at("amplitudes"))) {
        std::map<std::string, std::string> one{{"amplitudes", item}};
        spec.amplitudes.push_back(to_double(one, "amplitudes"));
    }
    const data::RawSeries series = data::synth_generate(spec);
    const std::filesystem::path path = cfg.at("out");
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    data::save_csv(path, series);
    out << "wrote " << path.string() << " (T=" << series.length() << ", C=" << series.channels() << ")\n";
    return 0;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, trim(std::string_view(line).substr(eq + 1))).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string render_manifest(const RunManifest& manifest) {
    std::ostringstream out;
    out << "# command: " << manifest.command << '\n';
    if (!manifest.config_path.empty()) out << "# config file: " << manifest.config_path << '\n';
    for (const auto& [key, value] : manifest.effective) out << key << " = " << value << '\n';
    return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MixLinear forecaster: train, evaluate and benchmark"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"train", "train a model and write checkpoint, history and report"},
        {"eval", "evaluate a checkpoint on a dataset's test split"},
        {"sweep", "train once per low-pass cutoff"},
        {"ablate", "compare mix, time-only and frequency-only modes"},
        {"gradcheck", "check analytic gradients against finite differences"},
        {"synth", "write a synthetic periodic dataset"},
    };
    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, std::string> config_path;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path[name], "flat key = value config file");
        for (const Key& key : keys_for(name)) {
            std::string desc = key.help;
            if (key.fallback == nullptr) desc += " (required)";
            else if (*key.fallback != '\0') desc += std::string(" [") + key.fallback + "]";
            sub->add_option(std::string("--") + key.name, raw[name][key.name], desc);
        }
    }
    app.get_subcommand("sweep")->get_option("--cutoff")->description("unused; see --cutoffs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    CLI::App* sub = app.get_subcommand(command);
    try {
        RunManifest manifest;
        manifest.command = command;
        manifest.config_path = config_path[command];
        std::map<std::string, std::string> from_file;
        if (!manifest.config_path.empty()) from_file = read_config_file(manifest.config_path);

        const auto keys = keys_for(command);
        for (const auto& [key, value] : from_file) {
            const bool known = std::any_of(keys.begin(), keys.end(), [&](const Key& k) { return key == k.name; });
            if (!known) throw ConfigError("config file: unknown key '" + key + "' for command " + command);
        }
        for (const Key& key : keys) {
            if (sub->get_option(std::string("--") + key.name)->count() > 0) {
                manifest.effective[key.name] = raw[command][key.name];
            } else if (const auto it = from_file.find(key.name); it != from_file.end()) {
                manifest.effective[key.name] = it->second;
            } else if (key.fallback != nullptr) {
                manifest.effective[key.name] = key.fallback;
            } else {
                throw ConfigError(std::string("missing required option --") + key.name);
            }
        }
        if (command != "synth" && manifest.effective.count("out")) manifest.out_dir = manifest.effective.at("out");
        out << render_manifest(manifest) << std::flush;

        if (command == "train") return cmd_train(manifest, out);
        if (command == "eval") return cmd_eval(manifest, out);
        if (command == "sweep") return cmd_sweep(manifest, out);
        if (command == "ablate") return cmd_ablate(manifest, out);
        if (command == "gradcheck") return cmd_gradcheck(manifest, out, err);
        return cmd_synth(manifest, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mixlinear::cli
