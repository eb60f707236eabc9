#include "jad/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "jad/error.hpp"
#include "jad/rng.hpp"

namespace jad {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr double kSynthNoise = 0.05;

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off) {
    if (b.size() < off + 4) throw FormatError("IDX header truncated");
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw FormatError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

void Dataset::validate() const {
    if (images.empty()) throw DimensionError("dataset is empty");
    if (images.size() != labels.size()) throw DimensionError("dataset image and label counts differ");
    const auto& shape = images.front().shape();
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape() != shape) throw DimensionError("dataset images differ in shape");
        for (double v : images[i].values()) {
            if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("dataset pixel outside [0, 1]");
        }
        if (labels[i] >= num_classes) throw ParameterError("dataset label out of range");
    }
}

Dataset parse_idx(std::span<const std::uint8_t> ib, std::span<const std::uint8_t> lb) {
    if (be32(ib, 0) != kImageMagic) throw FormatError("image file does not carry the IDX u8 3-D magic 0x00000803");
    if (be32(lb, 0) != kLabelMagic) throw FormatError("label file does not carry the IDX u8 1-D magic 0x00000801");
    const std::size_t n = be32(ib, 4), h = be32(ib, 8), w = be32(ib, 12);
    const std::size_t nl = be32(lb, 4);
    if (n != nl) throw FormatError("IDX image count " + std::to_string(n) + " != label count " + std::to_string(nl));
    if (n == 0 || h == 0 || w == 0) throw FormatError("IDX file has a zero dimension");
    if (ib.size() < 16 + n * h * w) throw FormatError("IDX image payload truncated");
    if (lb.size() < 8 + n) throw FormatError("IDX label payload truncated");

    Dataset d;
    d.images.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> px(h * w);
        const auto* src = ib.data() + 16 + k * h * w;
        for (std::size_t i = 0; i < h * w; ++i) px[i] = src[i] / 255.0;
        d.images.emplace_back(Shape{h, w, 1}, std::move(px));
        d.labels.push_back(lb[8 + k]);
    }
    d.num_classes = *std::max_element(d.labels.begin(), d.labels.end()) + 1;
    return d;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto ib = read_file(images);
    const auto lb = read_file(labels);
    return parse_idx(ib, lb);
}

Dataset synth_dataset(std::size_t n, std::size_t side, std::uint64_t seed) {
    if (n < 2) throw ParameterError("synth_dataset needs n >= 2");
    if (side < 8) throw ParameterError("synth_dataset needs side >= 8");
    Dataset d;
    d.num_classes = 2;
    const double denom = static_cast<double>(side - 1);
    for (std::size_t k = 0; k < n; ++k) {
        SplitMix64 rng(stream_seed(seed, k));
        const std::size_t label = k % 2;
        std::vector<double> px(side * side);
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
                const double ramp = (label == 0 ? j : i) / denom;
                px[i * side + j] = std::clamp(ramp + kSynthNoise * rng.normal(), 0.0, 1.0);
            }
        d.images.emplace_back(Shape{side, side, 1}, std::move(px));
        d.labels.push_back(label);
    }
    return d;
}

std::pair<Dataset, Dataset> split_tail(Dataset data, std::size_t n_tail) {
    if (n_tail >= data.size()) throw ParameterError("split_tail: tail must leave at least one sample");
    Dataset tail;
    tail.num_classes = data.num_classes;
    const std::size_t cut = data.size() - n_tail;
    tail.images.assign(std::make_move_iterator(data.images.begin() + cut), std::make_move_iterator(data.images.end()));
    tail.labels.assign(data.labels.begin() + cut, data.labels.end());
    data.images.resize(cut);
    data.labels.resize(cut);
    return {std::move(data), std::move(tail)};
}

Dataset head(const Dataset& data, std::size_t n) {
    Dataset out;
    out.num_classes = data.num_classes;
    n = std::min(n, data.size());
    out.images.assign(data.images.begin(), data.images.begin() + n);
    out.labels.assign(data.labels.begin(), data.labels.begin() + n);
    return out;
}

}  // namespace jad
