#include "oscnet/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace oscnet {

void Dataset::validate() const {
    if (!images.defined() || images.shape().size() != 4)
        throw InvalidInputError("dataset: images must be NxCxHxW");
    if (static_cast<int64_t>(labels.size()) != size())
        throw InvalidInputError("dataset: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(size()) + " images");
    for (double v : images.data())
        if (v < 0.0 || v > 1.0) throw InvalidInputError("dataset: pixel out of [0,1]");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw InvalidInputError("dataset: label " + std::to_string(y) + " out of range");
}

// ---- IDX -----------------------------------------------------------------

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path, size_t& offset) {
    unsigned char buf[4];
    f.read(reinterpret_cast<char*>(buf), 4);
    if (f.gcount() != 4)
        throw FormatError(path + ": truncated at byte " + std::to_string(offset));
    offset += 4;
    return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) | (uint32_t(buf[2]) << 8) |
           uint32_t(buf[3]);
}

std::vector<unsigned char> read_bytes(std::ifstream& f, size_t count, const std::string& path,
                                      size_t& offset) {
    std::vector<unsigned char> buf(count);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(f.gcount()) != count)
        throw FormatError(path + ": truncated at byte " +
                          std::to_string(offset + static_cast<size_t>(f.gcount())));
    offset += count;
    return buf;
}

void write_be32(std::ofstream& f, uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(buf), 4);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError(images_path + ": cannot open");
    size_t off = 0;
    const uint32_t img_magic = read_be32(imgs, images_path, off);
    if (img_magic != 0x00000803u)
        throw FormatError(images_path + ": bad magic at byte 0 (expected 0x00000803)");
    const uint32_t n = read_be32(imgs, images_path, off);
    const uint32_t rows = read_be32(imgs, images_path, off);
    const uint32_t cols = read_be32(imgs, images_path, off);
    auto pixels = read_bytes(imgs, size_t(n) * rows * cols, images_path, off);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw FormatError(labels_path + ": cannot open");
    size_t loff = 0;
    const uint32_t lab_magic = read_be32(labs, labels_path, loff);
    if (lab_magic != 0x00000801u)
        throw FormatError(labels_path + ": bad magic at byte 0 (expected 0x00000801)");
    const uint32_t ln = read_be32(labs, labels_path, loff);
    if (ln != n)
        throw FormatError(labels_path + ": " + std::to_string(ln) + " labels for " +
                          std::to_string(n) + " images");
    auto lab_bytes = read_bytes(labs, ln, labels_path, loff);

    Dataset ds;
    ds.name = "idx";
    ds.num_classes = 10;
    ds.images = Tensor::zeros({int64_t(n), 1, int64_t(rows), int64_t(cols)});
    for (size_t i = 0; i < pixels.size(); ++i) ds.images.data()[i] = pixels[i] / 255.0;
    ds.labels.assign(lab_bytes.begin(), lab_bytes.end());
    ds.validate();
    return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path) {
    const int64_t n = ds.size();
    const int64_t rows = ds.images.shape()[2], cols = ds.images.shape()[3];
    if (ds.images.shape()[1] != 1)
        throw InvalidInputError("write_idx: only single-channel images");
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError(images_path + ": cannot open for writing");
    write_be32(imgs, 0x00000803u);
    write_be32(imgs, static_cast<uint32_t>(n));
    write_be32(imgs, static_cast<uint32_t>(rows));
    write_be32(imgs, static_cast<uint32_t>(cols));
    for (double v : ds.images.data()) {
        const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
        imgs.put(static_cast<char>(b));
    }
    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw FormatError(labels_path + ": cannot open for writing");
    write_be32(labs, 0x00000801u);
    write_be32(labs, static_cast<uint32_t>(n));
    for (int y : ds.labels) labs.put(static_cast<char>(y));
}

// ---- CIFAR-10 --------------------------------------------------------------

Dataset load_cifar10_bin(const std::vector<std::string>& paths) {
    constexpr int64_t kRecord = 3073; // label + 3*32*32
    std::vector<unsigned char> all;
    for (const auto& path : paths) {
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        if (!f) throw FormatError(path + ": cannot open");
        const std::streamoff len = f.tellg();
        if (len % kRecord != 0)
            throw FormatError(path + ": length " + std::to_string(len) +
                              " not a multiple of 3073");
        f.seekg(0);
        const size_t prev = all.size();
        all.resize(prev + static_cast<size_t>(len));
        f.read(reinterpret_cast<char*>(all.data() + prev), len);
        if (f.gcount() != len) throw FormatError(path + ": short read");
    }
    const int64_t n = static_cast<int64_t>(all.size()) / kRecord;
    Dataset ds;
    ds.name = "cifar10";
    ds.num_classes = 10;
    ds.images = Tensor::zeros({n, 3, 32, 32});
    ds.labels.resize(n);
    for (int64_t i = 0; i < n; ++i) {
        const unsigned char* rec = all.data() + i * kRecord;
        if (rec[0] > 9)
            throw FormatError("cifar10: label byte " + std::to_string(int(rec[0])) +
                              " at record " + std::to_string(i));
        ds.labels[i] = rec[0];
        for (int64_t j = 0; j < 3072; ++j) ds.images.data()[i * 3072 + j] = rec[1 + j] / 255.0;
    }
    ds.validate();
    return ds;
}

// ---- subsetting --------------------------------------------------------------

Dataset sample_subset(const Dataset& ds, int64_t n, uint64_t seed) {
    if (n > ds.size())
        throw InvalidInputError("sample_subset: n=" + std::to_string(n) + " > N=" +
                                std::to_string(ds.size()));
    std::vector<int64_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, Stream::Subset));
    for (int64_t i = 0; i < n; ++i) {
        const int64_t j = i + static_cast<int64_t>(rng.below(uint64_t(ds.size() - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    auto [images, labels] = gather(ds, idx);
    Dataset out;
    out.images = images;
    out.labels = labels;
    out.name = ds.name;
    out.num_classes = ds.num_classes;
    return out;
}

std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int64_t>& idx) {
    Shape shape = ds.images.shape();
    shape[0] = static_cast<int64_t>(idx.size());
    const int64_t per = numel(shape) / std::max<int64_t>(1, shape[0]);
    Tensor images = Tensor::zeros(shape);
    std::vector<int> labels(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        std::memcpy(images.data().data() + int64_t(i) * per,
                    ds.images.data().data() + idx[i] * per, sizeof(double) * size_t(per));
        labels[i] = ds.labels[static_cast<size_t>(idx[i])];
    }
    return {std::move(images), std::move(labels)};
}

// ---- synthetic digits ----------------------------------------------------------

namespace {

struct Seg {
    double x0, y0, x1, y1;
};

// seven-segment skeletons in unit coordinates (y grows downward)
const std::array<Seg, 7> kSegs = {{
    {0.25, 0.12, 0.75, 0.12}, // A top
    {0.75, 0.12, 0.75, 0.50}, // B top-right
    {0.75, 0.50, 0.75, 0.88}, // C bottom-right
    {0.25, 0.88, 0.75, 0.88}, // D bottom
    {0.25, 0.50, 0.25, 0.88}, // E bottom-left
    {0.25, 0.12, 0.25, 0.50}, // F top-left
    {0.25, 0.50, 0.75, 0.50}, // G middle
}};

const std::array<uint8_t, 10> kDigitMask = {
    0b0111111, // 0: ABCDEF
    0b0000110, // 1: BC
    0b1011011, // 2: ABGED
    0b1001111, // 3: ABGCD
    0b1100110, // 4: FGBC
    0b1101101, // 5: AFGCD
    0b1111101, // 6: AFGECD
    0b0000111, // 7: ABC
    0b1111111, // 8
    0b1101111, // 9: ABCDFG
};

double seg_dist(double px, double py, const Seg& s) {
    const double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
    const double wx = px - s.x0, wy = py - s.y0;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = px - (s.x0 + t * vx), dy = py - (s.y0 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

void render_digit(double* out, int label, Rng& rng) {
    const double theta = rng.uniform(-0.22, 0.22);
    const double sx = rng.uniform(0.82, 1.12);
    const double sy = rng.uniform(0.82, 1.12);
    const double shear = rng.uniform(-0.15, 0.15);
    const double tx = rng.uniform(-0.09, 0.09);
    const double ty = rng.uniform(-0.09, 0.09);
    const double thick = rng.uniform(0.035, 0.055);
    const double ink = rng.uniform(0.85, 1.0);
    const double bg = rng.uniform(0.0, 0.02);
    const double cosv = std::cos(theta), sinv = std::sin(theta);
    const uint8_t mask = kDigitMask[static_cast<size_t>(label)];
    constexpr double kAA = 0.03;

    for (int py = 0; py < 28; ++py) {
        for (int px = 0; px < 28; ++px) {
            // map pixel center back into glyph coordinates
            double ux = (px + 0.5) / 28.0 - 0.5 - tx;
            double uy = (py + 0.5) / 28.0 - 0.5 - ty;
            double rx = (cosv * ux + sinv * uy);
            double ry = (-sinv * ux + cosv * uy);
            rx -= shear * ry;
            rx /= sx;
            ry /= sy;
            const double gx = rx + 0.5, gy = ry + 0.5;
            double dist = 1e9;
            for (size_t s = 0; s < kSegs.size(); ++s)
                if (mask & (1u << s)) dist = std::min(dist, seg_dist(gx, gy, kSegs[s]));
            double v = ink * std::min(1.0, std::max(0.0, (thick - dist) / kAA + 1.0));
            v += bg + 0.05 * rng.uniform01() * rng.uniform01();
            out[py * 28 + px] = std::min(1.0, std::max(0.0, v));
        }
    }
}

} // namespace

Dataset synth_digits(int64_t n, uint64_t seed) {
    Dataset ds;
    ds.name = "synth";
    ds.num_classes = 10;
    ds.images = Tensor::zeros({n, 1, 28, 28});
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, Stream::SynthData, static_cast<uint64_t>(i)));
        const int label = static_cast<int>(rng.below(10));
        ds.labels[static_cast<size_t>(i)] = label;
        render_digit(ds.images.data().data() + i * 784, label, rng);
    }
    return ds;
}

} // namespace oscnet
