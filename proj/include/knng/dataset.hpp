#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <new>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knng/permutation.hpp"

namespace knng {

// Project-wide seedable generator. Every stochastic operation takes an
// explicit seed; nothing is ever seeded from the clock.
using Rng = std::mt19937_64;

inline constexpr std::size_t kRowAlignment = 32; // bytes
inline constexpr std::uint32_t kRowChunk = 8;    // floats per aligned chunk

template <typename T, std::size_t Alignment>
struct AlignedAllocator {
    using value_type = T;

    template <typename U>
    struct rebind {
        using other = AlignedAllocator<U, Alignment>;
    };

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Alignment>&) {}

    T* allocate(std::size_t count) {
        return static_cast<T*>(::operator new(count * sizeof(T), std::align_val_t(Alignment)));
    }
    void deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t(Alignment));
    }

    template <typename U>
    bool operator==(const AlignedAllocator<U, Alignment>&) const { return true; }
};

using AlignedFloats = std::vector<float, AlignedAllocator<float, kRowAlignment>>;

struct ClusterLabels {
    std::vector<std::uint32_t> labels;
    std::uint32_t cluster_count = 0;
};

// Smallest multiple of 8 that is >= d. Rows are padded to this length so every
// row starts on a 32-byte boundary and kernels can run in whole 8-float chunks.
inline std::uint32_t padded_row_stride(std::uint32_t d) {
    return (d + kRowChunk - 1) / kRowChunk * kRowChunk;
}

// n points in d dimensions, row-major 32-bit floats. Rows are zero-padded to
// row_stride elements; padding lanes contribute nothing to squared distances,
// so kernels may always run over the full stride.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::uint32_t n, std::uint32_t d)
        : n_(n), d_(d), row_stride_(padded_row_stride(d)) {
        if (n < 2) throw std::invalid_argument("Dataset: need at least 2 points");
        if (d < 1) throw std::invalid_argument("Dataset: need at least 1 dimension");
        values_.assign(static_cast<std::size_t>(n) * row_stride_, 0.0f);
    }

    std::uint32_t n() const { return n_; }
    std::uint32_t d() const { return d_; }
    std::uint32_t row_stride() const { return row_stride_; }

    const float* row(std::uint32_t i) const { return values_.data() + std::size_t(i) * row_stride_; }
    float* row(std::uint32_t i) { return values_.data() + std::size_t(i) * row_stride_; }

    std::span<const float> point(std::uint32_t i) const { return {row(i), d_}; }
    const AlignedFloats& values() const { return values_; }

private:
    std::uint32_t n_ = 0;
    std::uint32_t d_ = 0;
    std::uint32_t row_stride_ = 0;
    AlignedFloats values_;
};

// All points drawn from N(0, 2 I_d) when single is set; otherwise point i is
// drawn from the component centered on the canonical basis vector e_{i mod d},
// also with covariance 2 I_d.
inline Dataset gen_gaussian(std::uint32_t n, std::uint32_t d, bool single, std::uint64_t seed) {
    Dataset out(n, d);
    Rng rng(seed);
    std::normal_distribution<float> gauss(0.0f, std::sqrt(2.0f));
    for (std::uint32_t i = 0; i < n; ++i) {
        float* r = out.row(i);
        for (std::uint32_t j = 0; j < d; ++j) r[j] = gauss(rng);
        if (!single) r[i % d] += 1.0f;
    }
    return out;
}

// Clustered generator. Points are split evenly among c Gaussians (remainder
// goes to the last cluster) whose means sit on scaled canonical basis vectors,
// scale 10*sqrt(d), with unit covariance; when c > d the axes are reused at
// doubled scale so all means stay pairwise far apart. The returned point order
// is a seed-derived shuffle, so memory order reveals nothing about clusters.
inline std::pair<Dataset, ClusterLabels> gen_clustered(std::uint32_t n, std::uint32_t d,
                                                       std::uint32_t c, std::uint64_t seed) {
    if (c < 2) throw std::invalid_argument("gen_clustered: need at least 2 clusters");
    if (n < 2 * c) throw std::invalid_argument("gen_clustered: need at least 2 points per cluster");

    Rng rng(seed);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    const float scale = 10.0f * std::sqrt(static_cast<float>(d));

    Dataset staged(n, d);
    std::vector<std::uint32_t> staged_labels(n);
    const std::uint32_t per_cluster = n / c;
    std::uint32_t next = 0;
    for (std::uint32_t cl = 0; cl < c; ++cl) {
        const std::uint32_t count = (cl + 1 == c) ? n - next : per_cluster;
        const std::uint32_t axis = cl % d;
        const float mean = scale * static_cast<float>(1 + cl / d);
        for (std::uint32_t i = 0; i < count; ++i, ++next) {
            float* r = staged.row(next);
            for (std::uint32_t j = 0; j < d; ++j) r[j] = gauss(rng);
            r[axis] += mean;
            staged_labels[next] = cl;
        }
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);

    Dataset out(n, d);
    ClusterLabels labels;
    labels.cluster_count = c;
    labels.labels.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::memcpy(out.row(i), staged.row(order[i]), sizeof(float) * staged.row_stride());
        labels.labels[i] = staged_labels[order[i]];
    }
    return {std::move(out), std::move(labels)};
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return true;
}

inline bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return true;
}

} // namespace detail

inline constexpr char kDatasetMagic[4] = {'K', 'N', 'N', 'G'};
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

// Binary dataset format (little-endian): magic "KNNG", format version u32,
// n u64, d u64, then n*d IEEE-754 floats row-major with no padding.
inline void save_binary(const Dataset& data, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_binary: cannot open " + path);
    os.write(kDatasetMagic, 4);
    detail::put_u32(os, kDatasetFormatVersion);
    detail::put_u64(os, data.n());
    detail::put_u64(os, data.d());
    for (std::uint32_t i = 0; i < data.n(); ++i) {
        const float* r = data.row(i);
        for (std::uint32_t j = 0; j < data.d(); ++j)
            detail::put_u32(os, std::bit_cast<std::uint32_t>(r[j]));
    }
    if (!os) throw std::runtime_error("save_binary: write failed for " + path);
}

inline Dataset load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_binary: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw std::runtime_error("load_binary: bad magic in " + path);
    std::uint32_t version;
    if (!detail::get_u32(is, version) || version != kDatasetFormatVersion)
        throw std::runtime_error("load_binary: unsupported format version in " + path);
    std::uint64_t n, d;
    if (!detail::get_u64(is, n) || !detail::get_u64(is, d))
        throw std::runtime_error("load_binary: truncated header in " + path);
    if (n < 2 || d == 0 || n > 0xffffffffull || d > 0xffffffffull)
        throw std::runtime_error("load_binary: invalid dimensions in " + path);
    Dataset out(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(d));
    for (std::uint32_t i = 0; i < out.n(); ++i) {
        float* r = out.row(i);
        for (std::uint32_t j = 0; j < out.d(); ++j) {
            std::uint32_t bits;
            if (!detail::get_u32(is, bits))
                throw std::runtime_error("load_binary: truncated payload in " + path);
            r[j] = std::bit_cast<float>(bits);
        }
    }
    return out;
}

// Row sigma[i] of the output is row i of the input: one bulk copy, alignment
// and padding invariants preserved.
inline Dataset apply_permutation(const Dataset& data, const Permutation& perm) {
    if (perm.size() != data.n())
        throw std::invalid_argument("apply_permutation: permutation size mismatch");
    Dataset out(data.n(), data.d());
    const std::size_t row_bytes = sizeof(float) * data.row_stride();
    for (std::uint32_t i = 0; i < data.n(); ++i)
        std::memcpy(out.row(perm.sigma[i]), data.row(i), row_bytes);
    return out;
}

} // namespace knng
