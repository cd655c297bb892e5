#include "mixlinear/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mixlinear/errors.hpp"

namespace mixlinear::checkpoint {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'X', 'L', 'I', 'N', 'C', 'K'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        bits = std::bit_cast<std::uint64_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) bits |= std::uint64_t{bytes_[pos_ + b]} << (8 * b);
        pos_ += sizeof(T);
        if constexpr (std::is_same_v<T, double>) {
            return std::bit_cast<double>(bits);
        } else {
            return static_cast<T>(bits);
        }
    }

    std::string get_string(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t count) const {
        if (bytes_.size() - pos_ < count) throw DataError("checkpoint: truncated container");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
const T& lookup(const Container& c, const std::string& key) {
    const auto it = c.entries.find(key);
    if (it == c.entries.end()) throw DataError("checkpoint: missing key '" + key + "'");
    const T* value = std::get_if<T>(&it->second);
    if (value == nullptr) throw DataError("checkpoint: key '" + key + "' has the wrong type");
    return *value;
}

void put_matrix(Container& c, const std::string& key, const numerics::RealMatrix& m) {
    c.entries[key] = m.data;
    c.entries[key + ".shape"] = std::vector<std::int64_t>{static_cast<std::int64_t>(m.rows),
                                                          static_cast<std::int64_t>(m.cols)};
}

void put_complex(Container& c, const std::string& key, const numerics::ComplexMatrix& m) {
    std::vector<double> re;
    std::vector<double> im;
    for (const auto& z : m.data) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    c.entries[key + "_re"] = std::move(re);
    c.entries[key + "_im"] = std::move(im);
    c.entries[key + ".shape"] = std::vector<std::int64_t>{static_cast<std::int64_t>(m.rows),
                                                          static_cast<std::int64_t>(m.cols)};
}

void expect_shape(const Container& c, const std::string& key, std::size_t rows, std::size_t cols) {
    const auto& shape = c.ints(key + ".shape");
    if (shape.size() != 2 || shape[0] != static_cast<std::int64_t>(rows) ||
        shape[1] != static_cast<std::int64_t>(cols)) {
        throw ConfigError("checkpoint: array '" + key + "' does not match the stored configuration (expected " +
                          std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
}

void expect_length(const std::string& key, std::size_t got, std::size_t want) {
    if (got != want) {
        throw ConfigError("checkpoint: array '" + key + "' has " + std::to_string(got) + " values, expected " +
                          std::to_string(want));
    }
}

}  // namespace

const std::vector<double>& Container::floats(const std::string& key) const {
    return lookup<std::vector<double>>(*this, key);
}
const std::vector<std::int64_t>& Container::ints(const std::string& key) const {
    return lookup<std::vector<std::int64_t>>(*this, key);
}
const std::string& Container::text(const std::string& key) const { return lookup<std::string>(*this, key); }

std::vector<std::uint8_t> encode(const Container& c) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_le<std::uint32_t>(out, c.version);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.entries.size()));
    for (const auto& [key, value] : c.entries) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
        out.insert(out.end(), key.begin(), key.end());
        std::visit(
            [&out](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, std::string>) {
                    out.push_back('s');
                    put_le<std::uint64_t>(out, v.size());
                    out.insert(out.end(), v.begin(), v.end());
                } else {
                    out.push_back(std::is_same_v<V, std::vector<double>> ? 'f' : 'i');
                    put_le<std::uint64_t>(out, v.size());
                    for (const auto x : v) put_le(out, x);
                }
            },
            value);
    }
    return out;
}

Container decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("checkpoint: bad magic, not a MixLinear checkpoint");
    }
    const std::vector<std::uint8_t> body(bytes.begin() + sizeof(kMagic), bytes.end());
    Reader r(body);
    Container c;
    c.version = r.get<std::uint32_t>();
    if (c.version != kFormatVersion) {
        throw DataError("checkpoint: unsupported format version " + std::to_string(c.version));
    }
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto key = r.get_string(r.get<std::uint32_t>());
        const auto kind = r.get<std::uint8_t>();
        const auto n = r.get<std::uint64_t>();
        switch (kind) {
            case 's': c.entries[key] = r.get_string(n); break;
            case 'f': {
                std::vector<double> v(n);
                for (auto& x : v) x = r.get<double>();
                c.entries[key] = std::move(v);
                break;
            }
            case 'i': {
                std::vector<std::int64_t> v(n);
                for (auto& x : v) x = r.get<std::int64_t>();
                c.entries[key] = std::move(v);
                break;
            }
            default: throw DataError("checkpoint: unknown value kind for key '" + key + "'");
        }
    }
    if (!r.done()) throw DataError("checkpoint: trailing bytes after last entry");
    return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
    const auto bytes = encode(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

Container to_container(const model::ModelConfig& config, const model::MixLinearParams& params) {
    const model::ShapePlan plan = model::plan_shapes(config);
    Container c;
    auto put_int = [&c](const std::string& key, std::size_t v) {
        c.entries[key] = std::vector<std::int64_t>{static_cast<std::int64_t>(v)};
    };
    put_int("lookback", config.lookback);
    put_int("horizon", config.horizon);
    put_int("period", config.period);
    put_int("lpf_cutoff", config.lpf_cutoff);
    put_int("latent_width", config.latent_width);
    c.entries["mode"] = std::string(model::to_string(config.mode));
    put_int("plan.n", plan.n);
    put_int("plan.m", plan.m);
    put_int("plan.n_hat", plan.n_hat);
    put_int("plan.m_hat", plan.m_hat);
    put_int("plan.s_in", plan.s_in);
    put_int("plan.s_out", plan.s_out);
    put_int("plan.bins_in", plan.bins_in);
    put_int("plan.bins_out", plan.bins_out);

    c.entries["conv_kernel"] = params.conv_kernel;
    c.entries["conv_bias"] = std::vector<double>{params.conv_bias};
    put_matrix(c, "w_intra", params.w_intra);
    c.entries["b_intra"] = params.b_intra;
    put_matrix(c, "w_inter", params.w_inter);
    c.entries["b_inter"] = params.b_inter;
    put_complex(c, "w_enc", params.w_enc);
    put_complex(c, "w_dec", params.w_dec);
    put_matrix(c, "w_sparse", params.w_sparse);
    return c;
}

Checkpoint from_container(const Container& c) {
    auto get_size = [&c](const std::string& key) {
        const auto& v = c.ints(key);
        if (v.size() != 1 || v[0] < 0) throw DataError("checkpoint: key '" + key + "' is not a count");
        return static_cast<std::size_t>(v[0]);
    };
    Checkpoint out;
    out.config.lookback = get_size("lookback");
    out.config.horizon = get_size("horizon");
    out.config.period = get_size("period");
    out.config.lpf_cutoff = get_size("lpf_cutoff");
    out.config.latent_width = get_size("latent_width");
    out.config.mode = model::parse_mode(c.text("mode"));

    // shapes come from the config; the stored arrays must agree with them
    model::MixLinearParams p = model::zero_params(out.config);
    const auto& kernel = c.floats("conv_kernel");
    expect_length("conv_kernel", kernel.size(), p.conv_kernel.size());
    p.conv_kernel = kernel;
    const auto& bias = c.floats("conv_bias");
    expect_length("conv_bias", bias.size(), 1);
    p.conv_bias = bias[0];

    auto load_real = [&c](const std::string& key, numerics::RealMatrix& m) {
        expect_shape(c, key, m.rows, m.cols);
        const auto& v = c.floats(key);
        expect_length(key, v.size(), m.data.size());
        m.data = v;
    };
    auto load_vec = [&c](const std::string& key, numerics::RealVector& v) {
        const auto& stored = c.floats(key);
        expect_length(key, stored.size(), v.size());
        v = stored;
    };
    auto load_complex = [&c](const std::string& key, numerics::ComplexMatrix& m) {
        expect_shape(c, key, m.rows, m.cols);
        const auto& re = c.floats(key + "_re");
        const auto& im = c.floats(key + "_im");
        expect_length(key + "_re", re.size(), m.data.size());
        expect_length(key + "_im", im.size(), m.data.size());
        for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = {re[i], im[i]};
    };
    load_real("w_intra", p.w_intra);
    load_vec("b_intra", p.b_intra);
    load_real("w_inter", p.w_inter);
    load_vec("b_inter", p.b_inter);
    load_complex("w_enc", p.w_enc);
    load_complex("w_dec", p.w_dec);
    load_real("w_sparse", p.w_sparse);
    out.params = std::move(p);
    return out;
}

void save(const std::filesystem::path& path, const model::ModelConfig& config, const model::MixLinearParams& params) {
    write_container(path, to_container(config, params));
}

Checkpoint load(const std::filesystem::path& path) { return from_container(read_container(path)); }

}  // namespace mixlinear::checkpoint
