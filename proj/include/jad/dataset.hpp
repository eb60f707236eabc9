#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jad/tensor.hpp"

namespace jad {

/// Labelled images, each H x W x C with values in [0, 1].
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return images.size(); }
    std::size_t input_dim() const { return images.empty() ? 0 : images.front().size(); }

    /// Checks pixel range, label range and non-emptiness.
    void validate() const;
};

/// Parses big-endian IDX files: images with magic 0x00000803 (u8, N x H x W)
/// scaled by 1/255, labels with magic 0x00000801 (u8, N).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);

/// Two-class side x side grayscale ramps. Sample k has class k % 2: class 0 is
/// a horizontal 0 -> 1 ramp, class 1 the vertical one; both get N(0, 0.05)
/// pixel noise from the stream seeded with seed ^ k, then are clamped to [0,1].
Dataset synth_dataset(std::size_t n, std::size_t side, std::uint64_t seed);

/// Moves the last `n_tail` samples into a second dataset.
std::pair<Dataset, Dataset> split_tail(Dataset data, std::size_t n_tail);

/// First `n` samples (or all, if fewer).
Dataset head(const Dataset& data, std::size_t n);

}  // namespace jad
