#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace knng {

// Completed squared-L2 evaluations for one run. One evaluation over d valid
// dimensions costs d subtractions, d multiplications and d-1 additions.
struct EvalCounter {
    std::uint64_t dist_evals = 0;

    void add(std::uint64_t evals) { dist_evals += evals; }
};

inline std::uint64_t flop_count(const EvalCounter& counter, std::uint32_t d) {
    return counter.dist_evals * (3ull * d - 1ull);
}

inline constexpr std::size_t kBlockRows = 5; // tile edge, in vectors

namespace detail {

inline constexpr std::size_t kLanes = 8;

inline float reduce_lanes(const float* acc) {
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Squared L2 over the first d elements, accumulated in 8 independent lanes so
// the loop maps onto one 8-wide register per accumulator.
inline float l2_sq_core(const float* a, const float* b, std::size_t d) {
    const std::size_t chunks = d / kLanes;
    float acc[kLanes] = {};
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t j = c * kLanes;
        for (std::size_t l = 0; l < kLanes; ++l) {
            const float diff = a[j + l] - b[j + l];
            acc[l] += diff * diff;
        }
    }
    float tail = 0.0f;
    for (std::size_t j = chunks * kLanes; j < d; ++j) {
        const float diff = a[j] - b[j];
        tail += diff * diff;
    }
    return reduce_lanes(acc) + tail;
}

// Fixed-size tile: one accumulator vector per pair, each input chunk loaded
// once and reused across all NA*NB pairs.
template <std::size_t NA, std::size_t NB>
void block_core(const float* const* rows_a, const float* const* rows_b, std::size_t d,
                float* out) {
    const std::size_t chunks = d / kLanes;
    float acc[NA * NB][kLanes] = {};
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t j = c * kLanes;
        float av[NA][kLanes];
        float bv[NB][kLanes];
        for (std::size_t i = 0; i < NA; ++i)
            for (std::size_t l = 0; l < kLanes; ++l) av[i][l] = rows_a[i][j + l];
        for (std::size_t i = 0; i < NB; ++i)
            for (std::size_t l = 0; l < kLanes; ++l) bv[i][l] = rows_b[i][j + l];
        for (std::size_t i = 0; i < NA; ++i) {
            for (std::size_t jj = 0; jj < NB; ++jj) {
                float* pair = acc[i * NB + jj];
                for (std::size_t l = 0; l < kLanes; ++l) {
                    const float diff = av[i][l] - bv[jj][l];
                    pair[l] += diff * diff;
                }
            }
        }
    }
    float tail[NA * NB] = {};
    for (std::size_t j = chunks * kLanes; j < d; ++j) {
        for (std::size_t i = 0; i < NA; ++i) {
            for (std::size_t jj = 0; jj < NB; ++jj) {
                const float diff = rows_a[i][j] - rows_b[jj][j];
                tail[i * NB + jj] += diff * diff;
            }
        }
    }
    for (std::size_t p = 0; p < NA * NB; ++p) out[p] = reduce_lanes(acc[p]) + tail[p];
}

// Diagonal tile: the 10 mutual distances among 5 rows, pairs (i<j) packed in
// lexicographic order.
inline constexpr std::array<std::pair<std::uint8_t, std::uint8_t>, 10> kTriPairs = {{
    {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4},
}};

inline void tri_core5(const float* const* rows, std::size_t d, float* out) {
    const std::size_t chunks = d / kLanes;
    float acc[10][kLanes] = {};
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t j = c * kLanes;
        float v[kBlockRows][kLanes];
        for (std::size_t i = 0; i < kBlockRows; ++i)
            for (std::size_t l = 0; l < kLanes; ++l) v[i][l] = rows[i][j + l];
        for (std::size_t p = 0; p < kTriPairs.size(); ++p) {
            const auto [x, y] = kTriPairs[p];
            for (std::size_t l = 0; l < kLanes; ++l) {
                const float diff = v[x][l] - v[y][l];
                acc[p][l] += diff * diff;
            }
        }
    }
    float tail[10] = {};
    for (std::size_t j = chunks * kLanes; j < d; ++j) {
        for (std::size_t p = 0; p < kTriPairs.size(); ++p) {
            const auto [x, y] = kTriPairs[p];
            const float diff = rows[x][j] - rows[y][j];
            tail[p] += diff * diff;
        }
    }
    for (std::size_t p = 0; p < kTriPairs.size(); ++p) out[p] = reduce_lanes(acc[p]) + tail[p];
}

} // namespace detail

// Plain squared L2 between two rows; counts as one evaluation.
inline float l2_sq(const float* a, const float* b, std::size_t d, EvalCounter& counter) {
    counter.add(1);
    return detail::l2_sq_core(a, b, d);
}

// Tile of pairwise squared distances, up to 5x5 rows. out is row-major
// |rows_a| x |rows_b|; entry (i,j) equals l2_sq(rows_a[i], rows_b[j], d) up to
// accumulation order. Counts |rows_a|*|rows_b| evaluations.
inline void block_l2_sq(std::span<const float* const> rows_a,
                        std::span<const float* const> rows_b, std::size_t d, float* out,
                        EvalCounter& counter) {
    const std::size_t na = rows_a.size();
    const std::size_t nb = rows_b.size();
    if (na == 0 || nb == 0) throw std::invalid_argument("block_l2_sq: empty tile");
    if (na > kBlockRows || nb > kBlockRows)
        throw std::invalid_argument("block_l2_sq: tile larger than 5x5");
    counter.add(na * nb);
    if (na == kBlockRows && nb == kBlockRows) {
        detail::block_core<kBlockRows, kBlockRows>(rows_a.data(), rows_b.data(), d, out);
        return;
    }
    // flexible path for partial tiles
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            out[i * nb + j] = detail::l2_sq_core(rows_a[i], rows_b[j], d);
}

// All mutual distances among the given rows. The consumer is invoked exactly
// once per unordered pair (i < j) with indices into rows. Full 5-row groups go
// through the blocked tiles; leftover rows when the count is not divisible by
// 5 take the flexible scalar path, which produces identical values.
template <typename PairConsumer>
void mutual_block_distances(std::span<const float* const> rows, std::size_t d,
                            EvalCounter& counter, PairConsumer&& consume) {
    const std::size_t m = rows.size();
    if (m < 2) return;
    const std::size_t full = m - m % kBlockRows;

    float tile[kBlockRows * kBlockRows];
    for (std::size_t gi = 0; gi < full; gi += kBlockRows) {
        detail::tri_core5(rows.data() + gi, d, tile);
        counter.add(detail::kTriPairs.size());
        for (std::size_t p = 0; p < detail::kTriPairs.size(); ++p) {
            const auto [x, y] = detail::kTriPairs[p];
            consume(static_cast<std::uint32_t>(gi + x), static_cast<std::uint32_t>(gi + y),
                    tile[p]);
        }
        for (std::size_t gj = gi + kBlockRows; gj < full; gj += kBlockRows) {
            detail::block_core<kBlockRows, kBlockRows>(rows.data() + gi, rows.data() + gj, d,
                                                       tile);
            counter.add(kBlockRows * kBlockRows);
            for (std::size_t x = 0; x < kBlockRows; ++x)
                for (std::size_t y = 0; y < kBlockRows; ++y)
                    consume(static_cast<std::uint32_t>(gi + x),
                            static_cast<std::uint32_t>(gj + y), tile[x * kBlockRows + y]);
        }
    }
    for (std::size_t r = full; r < m; ++r) {
        for (std::size_t q = 0; q < r; ++q) {
            counter.add(1);
            consume(static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(r),
                    detail::l2_sq_core(rows[q], rows[r], d));
        }
    }
}

} // namespace knng
