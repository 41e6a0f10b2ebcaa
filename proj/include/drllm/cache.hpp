#pragma once

#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace drllm {

// Append-only fingerprint -> completion-text store backed by a single
// file of length-prefixed entries. The in-memory index is rebuilt on
// open; a truncated trailing entry (crashed writer) is ignored.
class ResponseCache {
public:
    explicit ResponseCache(std::string path);

    std::optional<std::string> lookup(const std::string& fingerprint) const;
    void store(const std::string& fingerprint, const std::string& text);

    std::size_t size() const;
    const std::string& path() const { return path_; }

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> index_;
    std::ofstream out_;
};

}  // namespace drllm
