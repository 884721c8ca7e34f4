#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace knng {

// A bijection on [0,n) together with its inverse. sigma[i] is the target
// position of element i; sigma_inv[p] is the element occupying position p.
// Both arrays are kept consistent at all times: sigma_inv[sigma[i]] == i.
struct Permutation {
    std::vector<std::uint32_t> sigma;
    std::vector<std::uint32_t> sigma_inv;

    Permutation() = default;

    static Permutation identity(std::uint32_t n) {
        Permutation p;
        p.sigma.resize(n);
        p.sigma_inv.resize(n);
        std::iota(p.sigma.begin(), p.sigma.end(), 0u);
        std::iota(p.sigma_inv.begin(), p.sigma_inv.end(), 0u);
        return p;
    }

    std::uint32_t size() const { return static_cast<std::uint32_t>(sigma.size()); }

    bool is_valid() const {
        if (sigma.size() != sigma_inv.size()) return false;
        const std::uint32_t n = size();
        std::vector<bool> seen(n, false);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t s = sigma[i];
            if (s >= n || seen[s]) return false;
            if (sigma_inv[s] != i) return false;
            seen[s] = true;
        }
        return true;
    }
};

} // namespace knng
