#include "drllm/cache.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace drllm {

namespace {

bool read_u32(std::istream& in, std::uint32_t& value) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) return false;
    value = static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
            (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
    return true;
}

void write_u32(std::ostream& out, std::uint32_t value) {
    const unsigned char buf[4] = {
        static_cast<unsigned char>(value & 0xff),
        static_cast<unsigned char>((value >> 8) & 0xff),
        static_cast<unsigned char>((value >> 16) & 0xff),
        static_cast<unsigned char>((value >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (in) {
        while (true) {
            std::uint32_t klen = 0, vlen = 0;
            if (!read_u32(in, klen)) break;
            std::string key(klen, '\0');
            if (!in.read(key.data(), klen)) break;
            if (!read_u32(in, vlen)) break;
            std::string value(vlen, '\0');
            if (!in.read(value.data(), vlen)) break;
            index_[std::move(key)] = std::move(value);
        }
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw std::runtime_error("cannot open cache file for append: " + path_);
}

std::optional<std::string> ResponseCache::lookup(const std::string& fingerprint) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(fingerprint);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& fingerprint, const std::string& text) {
    std::lock_guard lock(mutex_);
    if (!index_.emplace(fingerprint, text).second) return;  // already persisted
    write_u32(out_, static_cast<std::uint32_t>(fingerprint.size()));
    out_.write(fingerprint.data(), static_cast<std::streamsize>(fingerprint.size()));
    write_u32(out_, static_cast<std::uint32_t>(text.size()));
    out_.write(text.data(), static_cast<std::streamsize>(text.size()));
    out_.flush();
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return index_.size();
}

}  // namespace drllm
