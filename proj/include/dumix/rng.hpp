// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace dumix {

// Fixed-width generator used for every random decision in the toolkit.
// std::mt19937/std::shuffle are avoided on purpose: their output is not
// pinned down by the standard, and streams here must be reproducible
// bit-for-bit across platforms and library versions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform draw in [0, bound) via the multiply-shift reduction.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
};

// FNV-1a over raw bytes; the stable-hash primitive for seed derivation.
inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_init() { return 14695981039346656037ULL; }

inline std::uint64_t fnv1a_u64(std::uint64_t h, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    return fnv1a(h, bytes, 8);
}

inline std::uint64_t fnv1a_str(std::uint64_t h, std::string_view s) {
    return fnv1a(h, s.data(), s.size());
}

// Seed for the per-epoch permutation of one source: a stable hash of
// (global seed, source name, epoch index).
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view source_name,
                                 std::uint64_t epoch) {
    std::uint64_t h = fnv1a_init();
    h = fnv1a_u64(h, global_seed);
    h = fnv1a_str(h, source_name);
    h = fnv1a_u64(h, epoch);
    return h;
}

// In-place Fisher-Yates driven by SplitMix64.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// The permutation of a source's sequence-aligned blocks for one epoch.
inline std::vector<std::uint32_t> epoch_permutation(std::uint64_t global_seed,
                                                    std::string_view source_name,
                                                    std::uint64_t epoch,
                                                    std::uint32_t num_blocks) {
    std::vector<std::uint32_t> perm(num_blocks);
    for (std::uint32_t i = 0; i < num_blocks; ++i) perm[i] = i;
    SplitMix64 rng(derive_seed(global_seed, source_name, epoch));
    deterministic_shuffle(perm, rng);
    return perm;
}

}  // namespace dumix
