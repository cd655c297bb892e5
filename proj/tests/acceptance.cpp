// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixlinear/cli.hpp"
#include "mixlinear/data.hpp"
#include "mixlinear/evalbench.hpp"
#include "mixlinear/numerics.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
namespace nx = mixlinear::numerics;
namespace md = mixlinear::model;
namespace dt = mixlinear::data;
namespace eb = mixlinear::evalbench;
namespace tr = mixlinear::training;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
}

fs::path work_dir() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "mixlinear_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

int cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
    std::ostringstream out, err;
    const int code = mixlinear::cli::run(args, out, err);
    if (captured) *captured = out.str() + err.str();
    if (code != 0) std::cerr << err.str();
    return code;
}

std::optional<fs::path> etth1_path() {
    if (const char* env = std::getenv("MIXLINEAR_ETTH1")) {
        if (fs::exists(env)) return fs::path(env);
    }
    if (fs::exists("data/ETTh1.csv")) return fs::path("data/ETTh1.csv");
    return std::nullopt;
}

const std::string kNoData = "ETTh1 not found (set MIXLINEAR_ETTH1 or place data/ETTh1.csv)";

Outcome dft_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(4, 128);
    double worst = 0.0;
    bool saw36 = false;
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = i == 0 ? 36 : len(rng);
        saw36 = saw36 || n == 36;
        const auto x = oracle::random_vector(rng, n);
        worst = std::max(worst, oracle::relative_error(nx::rfft(x), oracle::dft(x)));
        const auto spec = oracle::random_complex(rng, n / 2 + 1);
        worst = std::max(worst, oracle::relative_error(nx::irfft(spec, n), oracle::idft(spec, n)));
    }
    const double secs = seconds_since(start);
    return {saw36 && worst < 1e-10 && secs < 5.0,
            fmt("max relative error %.3g", worst) + fmt(" over 200 vectors, %.2f s", secs)};
}

Outcome roundtrip() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (std::size_t n = 1; n <= 1024; ++n) {
        const auto x = oracle::random_vector(rng, n);
        const auto back = nx::irfft(nx::rfft(x), n);
        for (std::size_t t = 0; t < n; ++t) worst = std::max(worst, std::abs(back[t] - x[t]));
    }
    return {worst < 1e-9, fmt("max abs error %.3g for N = 1..1024", worst)};
}

Outcome gradcheck() {
    const auto start = Clock::now();
    std::string text;
    const int code = cli({"gradcheck", "--trials", "20"}, &text);
    const double secs = seconds_since(start);
    double discrepancy = NAN;
    const auto pos = text.find("max_discrepancy = ");
    if (pos != std::string::npos) discrepancy = std::strtod(text.c_str() + pos + 18, nullptr);
    return {code == 0 && discrepancy < 1e-4 && secs < 30.0,
            fmt("max relative discrepancy %.3g", discrepancy) + fmt(" over 20 configs, %.2f s", secs)};
}

Outcome synthetic_oracle() {
    const auto start = Clock::now();
    const fs::path data = work_dir() / "periodic.csv";
    const fs::path out = work_dir() / "periodic_run";
    if (cli({"synth", "--out", data.string(), "--length", "5000", "--period", "24", "--channels", "2",
             "--amplitudes", "1", "--noise", "0", "--seed", "1"}) != 0) {
        return {false, "synth command failed"};
    }
    if (cli({"train", "--data", data.string(), "--period", "24", "--out", out.string()}) != 0) {
        return {false, "train command failed"};
    }
    const double secs = seconds_since(start);
    const auto report = eb::read_report(out / "periodic_Mix_H96_s1.report");
    return {report.test_mse < 1e-2 && secs < 120.0, fmt("test MSE %.3g", report.test_mse) + fmt(", %.1f s", secs)};
}

struct EtthRuns {
    std::optional<eb::RunReport> mix96, mix720, time96, freq96, lpf1;
};

md::ModelConfig benchmark_config(std::size_t horizon, md::Mode mode = md::Mode::Mix, std::size_t lpf = 5) {
    md::ModelConfig c;
    c.lookback = 720;
    c.horizon = horizon;
    c.period = 24;
    c.lpf_cutoff = lpf;
    c.latent_width = 2;
    c.mode = mode;
    return c;
}

EtthRuns etth1_runs(const fs::path& path) {
    const auto series = dt::load_csv(path);
    const tr::TrainConfig tc;
    const auto split = dt::SplitSpec::ett();
    EtthRuns r;
    auto timed = [&](md::ModelConfig c) {
        const auto start = Clock::now();
        auto rep = eb::run_benchmark(series, "ETTh1", c, tc, split, "ett").report;
        std::cerr << "  ETTh1 " << md::to_string(c.mode) << " H=" << c.horizon << " cutoff=" << c.lpf_cutoff
                  << ": MSE " << rep.test_mse << " (" << seconds_since(start) << " s)\n";
        return rep;
    };
    r.mix96 = timed(benchmark_config(96));
    r.mix720 = timed(benchmark_config(720));
    const auto ablation = eb::run_ablation(series, "ETTh1", benchmark_config(96), tc, split, "ett");
    r.time96 = ablation[1].report;
    r.freq96 = ablation[2].report;
    const auto sweep = eb::run_lpf_sweep(series, "ETTh1", benchmark_config(96), tc, split, {1, 5}, "ett");
    r.lpf1 = sweep.runs[0].second;
    return r;
}

Outcome reproduction(const std::optional<EtthRuns>& runs) {
    if (!runs) return {false, kNoData};
    const double a = runs->mix96->test_mse, b = runs->mix720->test_mse;
    return {std::abs(a - 0.351) <= 0.02 && std::abs(b - 0.423) <= 0.02,
            fmt("H=96 MSE %.4f (target 0.351 +/- 0.02)", a) + fmt(", H=720 MSE %.4f (target 0.423 +/- 0.02)", b)};
}

Outcome ablation(const std::optional<EtthRuns>& runs) {
    if (!runs) return {false, kNoData};
    const double m = runs->mix96->test_mse, t = runs->time96->test_mse, f = runs->freq96->test_mse;
    return {m <= t + 0.005 && m <= f + 0.005,
            fmt("Mix %.4f", m) + fmt(", TimeOnly %.4f", t) + fmt(", FreqOnly %.4f", f)};
}

Outcome parameter_budget() {
    auto base = benchmark_config(720);
    const std::size_t count = md::param_count(base);
    auto big = base;
    big.lookback = big.horizon = 2880;
    const double growth = double(md::param_count(big)) / double(count);
    auto sb = base, sg = big;
    sb.mode = sg.mode = md::Mode::SparseBaseline;
    const double sparse_growth = double(md::param_count(sg)) / double(md::param_count(sb));
    return {count >= 150 && count <= 250 && growth < 3.0 && sparse_growth > 10.0,
            std::to_string(count) + " parameters" + fmt(", x4 growth %.2f", growth) +
                fmt(", sparse baseline growth %.2f", sparse_growth)};
}

Outcome lpf_trend(const std::optional<EtthRuns>& runs) {
    if (!runs) return {false, kNoData};
    const double one = runs->lpf1->test_mse, five = runs->mix96->test_mse;
    return {one >= five - 0.005, fmt("cutoff 1 MSE %.4f", one) + fmt(", cutoff 5 MSE %.4f", five)};
}

Outcome determinism() {
    const fs::path data = work_dir() / "determinism.csv";
    if (cli({"synth", "--out", data.string(), "--length", "2000", "--channels", "3", "--amplitudes", "1,0.5",
             "--noise", "0.1", "--seed", "9"}) != 0) {
        return {false, "synth command failed"};
    }
    std::vector<std::string> args{"train", "--data", data.string(), "--lookback", "336", "--horizon", "96",
                                  "--period", "24", "--epochs", "5", "--seed", "11"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", (work_dir() / "det_a").string()});
    b.insert(b.end(), {"--out", (work_dir() / "det_b").string()});
    if (cli(a) != 0 || cli(b) != 0) return {false, "train command failed"};
    auto bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool same_bytes = bytes(work_dir() / "det_a" / "checkpoint.bin") == bytes(work_dir() / "det_b" / "checkpoint.bin");
    const auto ra = eb::read_report(work_dir() / "det_a" / "determinism_Mix_H96_s11.report");
    const auto rb = eb::read_report(work_dir() / "det_b" / "determinism_Mix_H96_s11.report");
    const double diff = std::max(std::abs(ra.test_mse - rb.test_mse), std::abs(ra.test_mae - rb.test_mae));
    return {same_bytes && diff <= 1e-9,
            std::string(same_bytes ? "checkpoints byte-identical" : "checkpoints differ") +
                fmt(", metric difference %.3g", diff)};
}

}  // namespace

int main() {
    std::optional<EtthRuns> etth1;
    if (const auto path = etth1_path()) {
        try {
            etth1 = etth1_runs(*path);
        } catch (const std::exception& e) {
            std::cerr << "ETTh1 runs failed: " << e.what() << '\n';
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"DFT oracle equivalence", dft_oracle},
        {"rfft/irfft roundtrip", roundtrip},
        {"gradient correctness", gradcheck},
        {"synthetic periodic oracle", synthetic_oracle},
        {"ETTh1 reproduction", [&] { return reproduction(etth1); }},
        {"ablation ordering", [&] { return ablation(etth1); }},
        {"parameter budget", parameter_budget},
        {"LPF sweep trend", [&] { return lpf_trend(etth1); }},
        {"determinism", determinism},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << "criterion " << (i + 1) << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first
                  << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed;
}
