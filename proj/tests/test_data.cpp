#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mixlinear/data.hpp"
#include "mixlinear/errors.hpp"
#include "oracles.hpp"

namespace dt = mixlinear::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mixlinear_test_data";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

dt::RawSeries ramp(std::size_t rows, std::size_t channels) {
    dt::RawSeries s;
    s.values = mixlinear::numerics::RealMatrix(rows, channels);
    for (std::size_t c = 0; c < channels; ++c) s.channel_names.push_back("c" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        s.timestamps.push_back(std::to_string(r));
        for (std::size_t c = 0; c < channels; ++c) s.values(r, c) = double(r) * (c + 1) + std::sin(double(r * 7 + c));
    }
    return s;
}

}  // namespace

TEST_CASE("load_csv echo") {
    const auto path = scratch("echo.csv");
    write_file(path, "date,OT,HUFL\n2016-07-01 00:00:00,1.5,-2\n2016-07-01 01:00:00,3,4.25\n"
                     "2016-07-01 02:00:00,1e-3,7\n");
    const auto s = dt::load_csv(path);
    CHECK(s.length() == 3);
    CHECK(s.channels() == 2);
    CHECK(s.time_header == "date");
    CHECK(s.channel_names == std::vector<std::string>{"OT", "HUFL"});
    CHECK(s.timestamps[1] == "2016-07-01 01:00:00");
    CHECK(s.values(0, 0) == 1.5);
    CHECK(s.values(0, 1) == -2.0);
    CHECK(s.values(1, 1) == 4.25);
    CHECK(s.values(2, 0) == 1e-3);
}

TEST_CASE("load_csv errors carry row and column") {
    const auto path = scratch("bad.csv");
    write_file(path, "date,a,b\nt1,1,2\nt2,1,2\nt3,1,2\nt4,x,2\n");
    try {
        dt::load_csv(path);
        FAIL("expected an error");
    } catch (const mixlinear::DataError& e) {
        CHECK(std::string(e.what()).find("row 5, col 2") != std::string::npos);
    }
    write_file(path, "date,a,b\nt1,1,2\nt2,1\n");
    CHECK_THROWS_AS(dt::load_csv(path), mixlinear::DataError);
    write_file(path, "date,a,b\nt1,1,\n");
    CHECK_THROWS_AS(dt::load_csv(path), mixlinear::DataError);
    CHECK_THROWS_AS(dt::load_csv(scratch("does_not_exist.csv")), mixlinear::DataError);
}

TEST_CASE("save_csv then load_csv is the identity") {
    const auto s = ramp(50, 3);
    const auto path = scratch("roundtrip.csv");
    dt::save_csv(path, s);
    const auto back = dt::load_csv(path);
    CHECK(back.channel_names == s.channel_names);
    CHECK(back.timestamps == s.timestamps);
    for (std::size_t i = 0; i < s.values.data.size(); ++i) CHECK(std::abs(back.values.data[i] - s.values.data[i]) <= 1e-12);
}

TEST_CASE("split boundaries") {
    SUBCASE("tiny") {
        const auto sp = dt::split_series(ramp(10, 1), dt::SplitSpec::ett(), 0, 0);
        CHECK(sp.train.length() == 6);
        CHECK(sp.val.length() == 2);
        CHECK(sp.test.length() == 2);
    }
    SUBCASE("ETT preset") {
        const auto sp = dt::split_series(ramp(17420, 1), dt::SplitSpec::ett(), 720, 96);
        CHECK(sp.train_end == 10452);
        CHECK(sp.val_end == 13936);
        CHECK(sp.val.first_row == 10452 - 720);
        CHECK(sp.test.first_row == 13936 - 720);
        CHECK(sp.test.length() == 17420 - 13936 + 720);
        CHECK(sp.val.overlap == 720);
    }
    SUBCASE("default preset") {
        const auto sp = dt::split_series(ramp(26304, 1), dt::SplitSpec::standard(), 96, 96);
        CHECK(sp.train_end == 18412);
        CHECK(sp.val_end == 21043);
    }
    SUBCASE("no leakage") {
        const auto sp = dt::split_series(ramp(1000, 2), dt::SplitSpec::standard(), 24, 12);
        CHECK(sp.train.first_row == 0);
        CHECK(sp.train.length() == sp.train_end);
        CHECK(sp.val.first_row + sp.val.length() == sp.val_end);
        CHECK(sp.test.first_row + sp.test.length() == 1000);
        CHECK(sp.test.first_row + sp.test.overlap >= sp.train_end);
        CHECK(sp.val.values(sp.val.overlap, 0) == ramp(1000, 2).values(sp.train_end, 0));
    }
    CHECK_THROWS_AS(dt::split_series(ramp(100, 1), dt::SplitSpec::ett(), 50, 20), mixlinear::ConfigError);
    CHECK_THROWS_AS(dt::split_series(ramp(100, 1), dt::SplitSpec{0.5, 0.5, 0.5}, 1, 1), mixlinear::ConfigError);
}

TEST_CASE("standardization") {
    auto sp = dt::split_series(ramp(500, 3), dt::SplitSpec::standard(), 10, 5);
    const auto original = sp;
    auto st = dt::standardize(sp);
    const auto& train = st.splits.train;
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < train.length(); ++r) mean += train.values(r, c);
        mean /= double(train.length());
        for (std::size_t r = 0; r < train.length(); ++r) sq += std::pow(train.values(r, c) - mean, 2);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(sq / double(train.length())) - 1.0) < 1e-9);
    }
    CHECK(train.standardized);
    CHECK_THROWS_AS(dt::apply_stats(st.splits.test, st.stats), std::logic_error);

    dt::remove_stats(st.splits.test, st.stats);
    for (std::size_t i = 0; i < original.test.values.data.size(); ++i) {
        CHECK(std::abs(st.splits.test.values.data[i] - original.test.values.data[i]) < 1e-10 * (1 + std::abs(original.test.values.data[i])));
    }

    auto perturbed = original;
    for (double& v : perturbed.test.values.data) v += 100.0;
    const auto st2 = dt::standardize(perturbed);
    CHECK(st2.stats.mean == st.stats.mean);
    CHECK(st2.stats.std == st.stats.std);

    auto flat = ramp(100, 1);
    for (double& v : flat.values.data) v = 4.0;
    CHECK_THROWS_AS(dt::standardize(dt::split_series(flat, dt::SplitSpec::standard(), 2, 2)), mixlinear::DataError);
}

TEST_CASE("windows") {
    dt::Split split;
    split.values = mixlinear::numerics::RealMatrix(10, 2);
    for (std::size_t r = 0; r < 10; ++r) {
        split.values(r, 0) = double(r);
        split.values(r, 1) = 100.0 + double(r);
    }
    const auto ws = dt::make_windows(split, 4, 3);
    CHECK(ws.size() == 4);
    CHECK(ws.channels() == 2);
    CHECK(ws.target(0, 0)[0] == 4.0);
    std::vector<double> joined(ws.input(0, 1).begin(), ws.input(0, 1).end());
    joined.insert(joined.end(), ws.target(0, 1).begin(), ws.target(0, 1).end());
    for (std::size_t r = 0; r < 7; ++r) CHECK(joined[r] == 100.0 + double(r));
    CHECK(ws.input(3, 0)[0] == 3.0);
    CHECK(ws.target(3, 0)[2] == 9.0);
    CHECK(ws.hash() == dt::make_windows(split, 4, 3).hash());
    CHECK(ws.hash() != dt::make_windows(split, 3, 3).hash());
    CHECK_THROWS_AS(dt::make_windows(split, 8, 3), mixlinear::ConfigError);

    for (std::size_t len = 2; len <= 40; len += 3)
        for (std::size_t L = 1; L < len; ++L)
            for (std::size_t H = 1; L + H <= len; H += 2) {
                dt::Split s;
                s.values = mixlinear::numerics::RealMatrix(len, 1);
                CHECK(dt::make_windows(s, L, H).size() == len - L - H + 1);
            }
}

TEST_CASE("synthetic generator") {
    dt::SynthSpec spec;
    spec.length = 500;
    spec.period = 24;
    spec.channels = 3;
    spec.amplitudes = {1.0, 0.5, 0.25};
    spec.seed = 4;
    const auto s = dt::synth_generate(spec);
    CHECK(s.length() == 500);
    CHECK(s.channels() == 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t + 24 < 500; ++t) CHECK(std::abs(s.values(t + 24, c) - s.values(t, c)) <= 1e-12);
    CHECK(dt::synth_generate(spec).values == s.values);
    spec.seed = 5;
    CHECK_FALSE(dt::synth_generate(spec).values == s.values);

    dt::SynthSpec line;
    line.length = 50;
    line.amplitudes.clear();
    line.trend_slope = 1.0;
    const auto l = dt::synth_generate(line);
    for (std::size_t t = 0; t < 50; ++t) CHECK(l.values(t, 0) == double(t));

    dt::SynthSpec noisy = spec;
    noisy.noise_std = 0.1;
    CHECK(dt::synth_generate(noisy).values == dt::synth_generate(noisy).values);
    CHECK_FALSE(dt::synth_generate(noisy).values == dt::synth_generate(spec).values);
}

TEST_CASE("ETTh1 layout when the file is present") {
    const char* env = std::getenv("MIXLINEAR_ETTH1");
    const fs::path path = env ? fs::path(env) : fs::path("data/ETTh1.csv");
    if (!fs::exists(path)) {
        MESSAGE("ETTh1 not available; skipping layout check");
        return;
    }
    const auto s = dt::load_csv(path);
    CHECK(s.length() == 17420);
    CHECK(s.channels() == 7);
}
