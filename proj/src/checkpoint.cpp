#include "pcw/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pcw/error.hpp"

namespace pcw {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'W', 'N', 'E', 'T', '1', '\n'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
  public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::size_t offset() const { return pos_; }

    void expect_magic() {
        if (bytes_.size() < sizeof(kMagic) ||
            std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
            throw ParseError(path_ + ": not a weight snapshot (bad magic)", 0);
        }
        pos_ = sizeof(kMagic);
    }

    std::uint32_t u32() {
        need(4, "truncated integer");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8, "truncated value");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    std::string str(std::size_t n) {
        need(n, "truncated name");
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_end() {
        if (pos_ != bytes_.size()) {
            throw ParseError(path_ + ": trailing bytes after last parameter", pos_);
        }
    }

  private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(path_ + ": " + what, pos_);
        }
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Parameter>& params) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Parameter& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.append(p.name);
        put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
        for (std::size_t d = 0; d < p.value.rank(); ++d) {
            put_u32(out, static_cast<std::uint32_t>(p.value.dim(d)));
        }
        for (double v : p.value.values()) put_f64(out, v);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ConfigError("short write to " + path);
}

std::vector<Parameter> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(std::move(bytes), path);
    r.expect_magic();
    const std::uint32_t count = r.u32();
    std::vector<Parameter> params;
    params.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        if (name.empty()) throw ParseError(path + ": empty parameter name", r.offset());
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw ParseError(path + ": implausible rank", r.offset());
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = r.u32();
            if (shape[d] == 0) throw ParseError(path + ": zero dimension", r.offset());
        }
        Tensor value(shape);
        for (double& v : value.values()) v = r.f64();
        params.push_back(Parameter(std::move(name), std::move(value)));
    }
    r.expect_end();
    return params;
}

void restore_parameters(const std::vector<Parameter>& loaded, std::vector<Parameter>& params) {
    check_contract(loaded.size() == params.size(),
                   "snapshot has " + std::to_string(loaded.size()) + " parameters, network has " +
                       std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        check_contract(loaded[i].name == params[i].name,
                       "parameter " + std::to_string(i) + " is '" + loaded[i].name +
                           "' in snapshot but '" + params[i].name + "' in network");
        check_contract(loaded[i].value.same_shape(params[i].value),
                       "shape mismatch for parameter '" + params[i].name + "'");
        params[i].value = loaded[i].value;
        params[i].zero_grad();
    }
}

}  // namespace pcw
