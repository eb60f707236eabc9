#include "jad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "jad/error.hpp"

namespace jad {

namespace {

constexpr char kMagic[4] = {'J', 'A', 'D', 'N'};
constexpr std::uint8_t kVersion = 0x01;

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes a little-endian host");

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    void bytes(void* p, std::size_t n) {
        if (in_.size() - pos_ < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u8(kVersion);
    w.u32(static_cast<std::uint32_t>(net.depth()));
    for (const auto& l : net.layers()) {
        w.u32(static_cast<std::uint32_t>(l.spec.out_dim));
        w.u32(static_cast<std::uint32_t>(l.spec.in_dim));
        w.u8(static_cast<std::uint8_t>(l.spec.activation));
        w.f64(l.spec.alpha);
        for (double v : l.weight) w.f64(v);
        for (double v : l.bias) w.f64(v);
    }
    return w.take();
}

Network decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a JADN checkpoint (bad magic)");
    if (const auto v = r.u8(); v != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(v));
    const std::uint32_t n = r.u32();
    if (n == 0) throw FormatError("checkpoint has no layers");
    std::vector<Layer> layers;
    for (std::uint32_t i = 0; i < n; ++i) {
        Layer l;
        l.spec.out_dim = r.u32();
        l.spec.in_dim = r.u32();
        const auto tag = r.u8();
        if (tag > 1) throw FormatError("unknown activation tag " + std::to_string(tag));
        l.spec.activation = static_cast<Activation>(tag);
        l.spec.alpha = r.f64();
        const std::size_t count = std::size_t{l.spec.out_dim} * l.spec.in_dim;
        if (count == 0) throw FormatError("layer " + std::to_string(i + 1) + " has a zero dimension");
        if (r.remaining() / sizeof(double) < count + l.spec.out_dim) throw FormatError("checkpoint payload truncated");
        l.weight.resize(count);
        for (auto& v : l.weight) v = r.f64();
        l.bias.resize(l.spec.out_dim);
        for (auto& v : l.bias) v = r.f64();
        layers.push_back(std::move(l));
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint payload");
    try {
        return Network(std::move(layers));
    } catch (const Error& e) {
        throw FormatError(std::string("invalid network in checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(net);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw FormatError("failed writing " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace jad
