#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oscnet/tensor.hpp"

namespace oscnet {

// Immutable after load; images are [N,C,H,W] in [0,1].
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    std::string name;
    int num_classes = 10;

    int64_t size() const { return images.defined() ? images.shape()[0] : 0; }
    void validate() const;
};

// IDX (MNIST layout): big-endian magic 0x803 for images, 0x801 for labels.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, 1 label byte + 3072 CHW pixels.
Dataset load_cifar10_bin(const std::vector<std::string>& paths);

// Uniform sample of n without replacement; deterministic under seed.
Dataset sample_subset(const Dataset& ds, int64_t n, uint64_t seed);

// Procedurally rendered 28x28 ten-class digit glyphs with affine jitter and
// pixel noise. Per-sample streams derive from (seed, index), so prefixes of
// the same seed agree.
Dataset synth_digits(int64_t n, uint64_t seed);

// Writes a dataset back out in IDX format (pixels quantized to uint8).
void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path);

// Rows of ds.images/labels selected by index, as a batch.
std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int64_t>& idx);

} // namespace oscnet
