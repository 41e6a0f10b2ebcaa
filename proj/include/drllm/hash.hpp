#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace drllm {

// splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic counter-free stream: successive draws are mix64 of an
// advancing state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // uniform in [0, bound)
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

inline std::uint64_t hash_bytes(std::string_view data, std::uint64_t seed = 0) {
    std::uint64_t h = mix64(seed ^ 0x51'7c'c1'b7'27'22'0a'95ULL);
    for (unsigned char c : data) {
        h = mix64(h ^ c);
    }
    return mix64(h ^ static_cast<std::uint64_t>(data.size()));
}

// 128-bit content hash rendered as 32 lowercase hex chars.
std::string hash128_hex(std::string_view data);

}  // namespace drllm
