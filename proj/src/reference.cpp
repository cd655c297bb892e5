// Published MSE values (multivariate, look-back 720) used only for
// side-by-side rendering in reports. Never recomputed.

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>

#include "mixlinear/evalbench.hpp"

namespace mixlinear::evalbench {

namespace {

struct Row {
    const char* model;
    // ETTh1, ETTh2, Electricity, Traffic; horizons 96, 192, 336, 720
    std::array<double, 16> mse;
};

constexpr std::array<Row, 9> kMain = {{
    {"FEDformer", {0.375, 0.427, 0.459, 0.484, 0.340, 0.433, 0.508, 0.480, 0.188, 0.197, 0.212, 0.244, 0.573, 0.611, 0.621, 0.630}},
    {"TimesNet", {0.384, 0.436, 0.491, 0.521, 0.340, 0.402, 0.452, 0.462, 0.168, 0.184, 0.198, 0.220, 0.593, 0.617, 0.629, 0.640}},
    {"PatchTST", {0.385, 0.413, 0.440, 0.456, 0.274, 0.338, 0.367, 0.391, 0.129, 0.149, 0.166, 0.210, 0.366, 0.388, 0.398, 0.457}},
    {"DLinear", {0.384, 0.443, 0.446, 0.504, 0.282, 0.340, 0.414, 0.588, 0.140, 0.153, 0.169, 0.204, 0.413, 0.423, 0.437, 0.466}},
    {"FITS", {0.382, 0.417, 0.436, 0.433, 0.272, 0.333, 0.355, 0.378, 0.145, 0.159, 0.175, 0.212, 0.398, 0.409, 0.421, 0.457}},
    {"SparseTSF", {0.362, 0.403, 0.434, 0.426, 0.294, 0.339, 0.359, 0.383, 0.138, 0.151, 0.166, 0.205, 0.389, 0.398, 0.411, 0.448}},
    {"MixLinear", {0.351, 0.395, 0.411, 0.423, 0.283, 0.337, 0.356, 0.380, 0.138, 0.154, 0.170, 0.209, 0.389, 0.403, 0.416, 0.452}},
    // ablations
    {"TLinear", {0.376, 0.398, 0.412, 0.425, 0.317, 0.366, 0.369, 0.389, 0.181, 0.192, 0.209, 0.245, 0.485, 0.483, 0.520, 0.528}},
    {"FLinear", {0.434, 0.438, 0.473, 0.474, 0.364, 0.381, 0.383, 0.411, 0.171, 0.179, 0.191, 0.248, 0.397, 0.436, 0.442, 0.478}},
}};

struct LpfRow {
    std::size_t cutoff;
    std::array<double, 16> mse;
};

constexpr std::array<LpfRow, 5> kLpf = {{
    {1, {0.351, 0.399, 0.412, 0.440, 0.289, 0.353, 0.373, 0.386, 0.170, 0.184, 0.202, 0.238, 0.449, 0.450, 0.469, 0.510}},
    {5, {0.356, 0.395, 0.412, 0.426, 0.290, 0.349, 0.360, 0.389, 0.151, 0.163, 0.179, 0.243, 0.407, 0.422, 0.430, 0.473}},
    {10, {0.376, 0.397, 0.413, 0.425, 0.294, 0.341, 0.357, 0.387, 0.171, 0.155, 0.171, 0.210, 0.396, 0.411, 0.417, 0.454}},
    {15, {0.358, 0.398, 0.413, 0.427, 0.284, 0.343, 0.356, 0.383, 0.139, 0.154, 0.171, 0.209, 0.392, 0.404, 0.421, 0.454}},
    {19, {0.360, 0.396, 0.413, 0.423, 0.283, 0.337, 0.359, 0.380, 0.139, 0.154, 0.171, 0.209, 0.390, 0.406, 0.416, 0.452}},
}};

std::optional<std::size_t> column(const std::string& dataset, std::size_t horizon) {
    std::string key = dataset;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    std::size_t block = 0;
    if (key == "etth1") block = 0;
    else if (key == "etth2") block = 1;
    else if (key == "electricity" || key == "ecl") block = 2;
    else if (key == "traffic") block = 3;
    else return std::nullopt;

    constexpr std::array<std::size_t, 4> horizons{96, 192, 336, 720};
    const auto it = std::find(horizons.begin(), horizons.end(), horizon);
    if (it == horizons.end()) return std::nullopt;
    return block * 4 + static_cast<std::size_t>(it - horizons.begin());
}

}  // namespace

std::optional<double> reference_mse(const std::string& model_name, const std::string& dataset, std::size_t horizon) {
    const auto col = column(dataset, horizon);
    if (!col) return std::nullopt;
    for (const auto& row : kMain) {
        if (model_name == row.model) return row.mse[*col];
    }
    return std::nullopt;
}

std::optional<double> reference_lpf_mse(std::size_t cutoff, const std::string& dataset, std::size_t horizon) {
    const auto col = column(dataset, horizon);
    if (!col) return std::nullopt;
    for (const auto& row : kLpf) {
        if (row.cutoff == cutoff) return row.mse[*col];
    }
    return std::nullopt;
}

}  // namespace mixlinear::evalbench
