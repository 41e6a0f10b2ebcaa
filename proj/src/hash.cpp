#include "drllm/hash.hpp"

#include <cstdio>

namespace drllm {

std::string hash128_hex(std::string_view data) {
    std::uint64_t lo = hash_bytes(data, 0x0ddc0ffeebadf00dULL);
    std::uint64_t hi = hash_bytes(data, 0x1234567890abcdefULL);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return buf;
}

}  // namespace drllm
