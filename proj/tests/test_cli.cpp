#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mixlinear/cli.hpp"
#include "mixlinear/data.hpp"
#include "mixlinear/errors.hpp"
#include "mixlinear/evalbench.hpp"

namespace fs = std::filesystem;
namespace eb = mixlinear::evalbench;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = mixlinear::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path dir() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "mixlinear_test_cli";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string str(const fs::path& p) { return p.string(); }

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

const std::vector<std::string> kSmall = {"--lookback", "96", "--horizon", "48", "--period", "24", "--cutoff", "3",
                                         "--epochs", "8", "--batch", "64"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail = kSmall) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

fs::path synth_file() {
    static const fs::path p = [] {
        const fs::path f = dir() / "synth.csv";
        REQUIRE(run({"synth", "--out", str(f), "--length", "2000", "--channels", "2", "--seed", "5"}).code == 0);
        return f;
    }();
    return p;
}

}  // namespace

TEST_CASE("synth") {
    const auto a = dir() / "a.csv";
    const auto b = dir() / "b.csv";
    CHECK(run({"synth", "--out", str(a), "--length", "300", "--period", "12", "--channels", "3"}).code == 0);
    CHECK(run({"synth", "--out", str(b), "--length", "300", "--period", "12", "--channels", "3"}).code == 0);
    CHECK(slurp(a) == slurp(b));
    const auto s = mixlinear::data::load_csv(a);
    CHECK(s.length() == 300);
    CHECK(s.channels() == 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t + 12 < 300; ++t) CHECK(std::abs(s.values(t + 12, c) - s.values(t, c)) <= 1e-12);

    CHECK(run({"synth", "--out", str(b), "--length", "300", "--seed", "9"}).code == 0);
    CHECK(slurp(a) != slurp(b));
    CHECK(run({"synth", "--out", "/proc/forbidden/x.csv"}).code == 3);
    CHECK(run({"synth"}).code == 2);
}

TEST_CASE("train writes its artifacts and eval reproduces the test metric") {
    const auto data = synth_file();
    const std::string before = slurp(data);
    const auto out = dir() / "train";
    const auto r = run(with({"train", "--data", str(data), "--out", str(out), "--seed", "1"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("lookback = 96") != std::string::npos);
    CHECK(r.out.find("patience = 10") != std::string::npos);
    CHECK(fs::exists(out / "checkpoint.bin"));
    CHECK(fs::exists(out / "history.csv"));
    const auto report_path = out / "synth_Mix_H48_s1.report";
    REQUIRE(fs::exists(report_path));
    CHECK(fs::exists(fs::path(report_path.string() + ".csv")));
    CHECK(slurp(data) == before);
    const auto report = eb::read_report(report_path);
    CHECK(report.test_mse < 1e-2);

    const auto eval_out = dir() / "eval";
    const auto e = run({"eval", "--checkpoint", str(out / "checkpoint.bin"), "--data", str(data), "--out",
                        str(eval_out)});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const auto evaluated = eb::read_report(eval_out / "eval_synth_Mix_H48_s0.report");
    CHECK(evaluated.test_mse == report.test_mse);
    CHECK(evaluated.test_mae == report.test_mae);

    const auto short_data = dir() / "short.csv";
    REQUIRE(run({"synth", "--out", str(short_data), "--length", "150"}).code == 0);
    const auto bad = run({"eval", "--checkpoint", str(out / "checkpoint.bin"), "--data", str(short_data)});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("L=96") != std::string::npos);
    CHECK(bad.err.find("T=150") != std::string::npos);

    const auto second = dir() / "train2";
    REQUIRE(run(with({"train", "--data", str(data), "--out", str(second), "--seed", "1"})).code == 0);
    CHECK(slurp(second / "checkpoint.bin") == slurp(out / "checkpoint.bin"));
}

TEST_CASE("argument and configuration errors") {
    const auto data = synth_file();
    auto missing = run({"train", "--data", str(data)});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--period") != std::string::npos);
    CHECK(run({"train", "--data", str(data), "--period", "abc"}).code == 2);
    CHECK(run({"train", "--data", str(data), "--period", "24", "--mode", "bogus"}).code == 2);
    CHECK(run({"train", "--data", str(data), "--period", "24", "--nonsense", "1"}).code == 2);
    CHECK(run({"train", "--data", str(dir() / "absent.csv"), "--period", "24"}).code == 3);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);

    const auto bad_csv = dir() / "bad.csv";
    std::ofstream(bad_csv) << "date,a\nt0,1\nt1,oops\n";
    CHECK(run({"train", "--data", str(bad_csv), "--period", "1", "--lookback", "1", "--horizon", "1",
               "--cutoff", "1"}).code == 3);

    const auto cfg = dir() / "unknown.cfg";
    std::ofstream(cfg) << "period = 24\nwidth = 3\n";
    const auto unknown = run({"train", "--data", str(data), "--config", str(cfg)});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("width") != std::string::npos);
}

TEST_CASE("numeric failure exits 4") {
    const auto r = run(with({"train", "--data", str(synth_file()), "--out", str(dir() / "nan"), "--lr", "1e200"}));
    CHECK(r.code == 4);
    CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("config precedence and closure") {
    const auto data = synth_file();
    const auto cfg = dir() / "run.cfg";
    std::ofstream(cfg) << "# small run\nlookback = 96\nhorizon = 48\nperiod = 24\ncutoff = 3\nepochs = 2\n"
                          "batch = 64\nseed = 4\n";
    const auto a = run({"train", "--data", str(data), "--config", str(cfg), "--epochs", "3", "--out",
                        str(dir() / "cfg_a")});
    REQUIRE_MESSAGE(a.code == 0, a.err);
    CHECK(a.out.find("epochs = 3") != std::string::npos);
    CHECK(a.out.find("seed = 4") != std::string::npos);
    CHECK(a.out.find("latent = 2") != std::string::npos);

    std::string echoed;
    std::istringstream lines(a.out);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find(" = ") == std::string::npos || line.find(':') != std::string::npos) continue;
        if (line.rfind("out = ", 0) == 0) continue;
        echoed += line + '\n';
    }
    const auto replay_cfg = dir() / "replay.cfg";
    std::ofstream(replay_cfg) << echoed;
    const auto b = run({"train", "--config", str(replay_cfg), "--out", str(dir() / "cfg_b")});
    REQUIRE_MESSAGE(b.code == 0, b.err);
    CHECK(slurp(dir() / "cfg_a" / "checkpoint.bin") == slurp(dir() / "cfg_b" / "checkpoint.bin"));
    CHECK(eb::read_report(dir() / "cfg_a" / "synth_Mix_H48_s4.report").test_mse ==
          eb::read_report(dir() / "cfg_b" / "synth_Mix_H48_s4.report").test_mse);

    CHECK_THROWS_AS(mixlinear::cli::parse_config_text("a = 1\na = 2\n"), mixlinear::ConfigError);
    CHECK_THROWS_AS(mixlinear::cli::parse_config_text("just words\n"), mixlinear::ConfigError);
    const auto kv = mixlinear::cli::parse_config_text("  x=1 # note\n\n# comment\ny = two words\n");
    CHECK(kv.at("x") == "1");
    CHECK(kv.at("y") == "two words");
}

TEST_CASE("sweep") {
    const auto data = synth_file();
    const auto out = dir() / "sweep";
    const auto r = run(with({"sweep", "--data", str(data), "--out", str(out), "--cutoffs", "3,1"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rows = csv_rows(out / "synth_Mix_H48_s1_lpf_sweep.report.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == "1");
    CHECK(rows[1][0] == "3");

    const auto single = run(with({"sweep", "--data", str(data), "--out", str(dir() / "sweep1"), "--cutoffs", "3"}));
    REQUIRE(single.code == 0);
    const auto trained = run(with({"train", "--data", str(data), "--out", str(dir() / "sweep_train")}));
    REQUIRE(trained.code == 0);
    const auto train_rows = csv_rows(dir() / "sweep_train" / "synth_Mix_H48_s1.report.csv");
    const auto single_rows = csv_rows(dir() / "sweep1" / "synth_Mix_H48_s1_lpf_sweep.report.csv");
    REQUIRE(train_rows.size() == 1);
    REQUIRE(single_rows.size() == 1);
    CHECK(single_rows[0][9] == train_rows[0][8]);
    CHECK(rows[1][9] == train_rows[0][8]);
}

TEST_CASE("ablate") {
    const auto data = synth_file();
    const auto out = dir() / "ablate";
    const auto r = run(with({"ablate", "--data", str(data), "--out", str(out), "--seed", "6"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::vector<std::string> modes;
    for (const auto& cells : csv_rows(out / "synth_H48_s6_ablation.csv")) {
        modes.push_back(cells[1]);
        CHECK(cells[7] == "6");
    }
    CHECK(modes == std::vector<std::string>{"Mix", "TimeOnly", "FreqOnly"});
}

TEST_CASE("gradcheck") {
    const auto ok = run({"gradcheck"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("max_discrepancy") != std::string::npos);

    const auto fifty = run({"gradcheck", "--trials", "50"});
    CHECK(fifty.code == 0);
    CHECK(fifty.out.find("trials = 50") != std::string::npos);

    const auto corrupted = run({"gradcheck", "--corrupt", "b_intra"});
    CHECK(corrupted.code == 1);
    CHECK(corrupted.err.find("'b_intra'") != std::string::npos);

    CHECK(run({"gradcheck", "--corrupt", "nothing"}).code == 2);
    CHECK(run({"gradcheck", "--lookback", "8", "--horizon", "8", "--period", "2", "--cutoff", "2", "--latent", "1"})
              .code == 0);
}
