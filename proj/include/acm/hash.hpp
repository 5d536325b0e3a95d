#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace acm {

// 64-bit FNV-1a; stable across platforms, used for file checksums and digests.
class Fnv1a {
public:
    void update(std::span<const std::byte> bytes) noexcept {
        for (std::byte b : bytes) {
            state_ ^= static_cast<std::uint64_t>(b);
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::span<const std::byte> bytes) noexcept {
    Fnv1a h;
    h.update(bytes);
    return h.digest();
}

// splitmix64 finalizer over (seed, tag); derives independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace acm
