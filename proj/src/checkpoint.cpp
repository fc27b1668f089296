#include "rlvc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::nn {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'L', 'V', 'C'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated at byte " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const char* to_string(NetKind kind) {
    switch (kind) {
        case NetKind::Generic: return "generic";
        case NetKind::Generator: return "generator";
        case NetKind::CriticX0: return "critic-x0";
        case NetKind::CriticXt: return "critic-xt";
        case NetKind::RewardModel: return "reward-model";
    }
    return "unknown";
}

std::vector<std::uint8_t> encode_checkpoint(const DenseNet& net, NetKind kind) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(kind));
    put_u32(out, static_cast<std::uint32_t>(net.num_layers()));
    for (int d : net.layer_dims()) put_u32(out, static_cast<std::uint32_t>(d));
    put_f64(out, net.slope());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const Matrix& w = net.weight(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
        const Matrix& b = net.bias(l);
        for (Eigen::Index c = 0; c < b.cols(); ++c) put_f64(out, b(0, c));
    }
    return out;
}

DecodedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    auto magic = in.raw(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw IoError("not an RLVC checkpoint (bad magic)");
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t kind = in.u32();
    if (kind > static_cast<std::uint32_t>(NetKind::RewardModel))
        throw IoError("unknown checkpoint kind " + std::to_string(kind));
    const std::uint32_t layers = in.u32();
    if (layers == 0 || layers > 1024) throw IoError("implausible layer count " + std::to_string(layers));
    std::vector<int> dims;
    for (std::uint32_t i = 0; i <= layers; ++i) {
        const std::uint32_t d = in.u32();
        if (d == 0 || d > (1u << 24)) throw IoError("implausible layer width " + std::to_string(d));
        dims.push_back(static_cast<int>(d));
    }
    const double slope = in.f64();
    DecodedCheckpoint out{static_cast<NetKind>(kind), DenseNet(dims, slope)};
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix& w = out.net.weight(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = in.f64();
        Matrix& b = out.net.bias(l);
        for (Eigen::Index c = 0; c < b.cols(); ++c) b(0, c) = in.f64();
    }
    if (!in.done()) throw IoError("trailing bytes after checkpoint payload");
    return out;
}

void save_checkpoint(const DenseNet& net, NetKind kind, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(net, kind);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path, NetKind expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    DecodedCheckpoint d = decode_checkpoint(bytes);
    if (d.kind != expected)
        throw ConfigError(path.string() + " holds a " + to_string(d.kind) + " checkpoint, expected " +
                          to_string(expected));
    return std::move(d.net);
}

}  // namespace rlvc::nn
