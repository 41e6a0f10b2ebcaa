#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "drllm/flow_data.hpp"
#include "drllm/prompts.hpp"

namespace drllm {

enum class BackendKind { Http, Mock };

struct MockParams {
    double accuracy = 1.0;  // P(argmax matches truth) when output is well formed
    double l1_rate = 0.0;   // P(pair whose probabilities do not sum to 1)
    double l2_rate = 0.0;   // P(refusal)
    std::uint64_t seed = 0;
};

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string name = "mock";       // report row id; also names the auth env var
    std::string endpoint_url;        // http only
    std::string model_name = "mock";
    std::string auth_env;            // env var holding the bearer token
    std::optional<double> temperature;  // omitted from the wire when unset
    int max_output_tokens = 0;          // 0 = omit
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    double requests_per_second = 5.0;  // http token bucket
    MockParams mock_params;
};

struct BackendResponse {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::string request_fingerprint;
};

struct BackendError : std::runtime_error {
    explicit BackendError(const std::string& what, int http_status = 0)
        : std::runtime_error(what), status(http_status) {}
    int status;  // 0 when not an HTTP-level failure
};

// Stable 128-bit key over (model, messages, temperature); stage2 keys
// depend on stage1 output because R1 appears in the message list.
std::string request_fingerprint(const std::string& model_name,
                                const std::vector<ChatMessage>& messages,
                                const std::optional<double>& temperature);

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendResponse complete(const std::vector<ChatMessage>& messages) = 0;
};

// Pure deterministic text generator for a decided record. Exposed so the
// emission distribution can be tested directly.
std::string mock_decide(const MockParams& params, const std::string& token_text,
                        Label true_label);

// What the mock believes it emitted, logged per stage2 call.
struct MockSidecarEntry {
    std::string token_text;
    Label true_label;
    std::string kind;  // valid | l1 | l2
    double p_attack = 0;
    double p_benign = 0;
};

// Deterministic mock: stage1 prompts (no Data line) get a fixed ack;
// stage2 prompts are answered by mock_decide keyed on the Data line.
// Ground truth per token text must be registered before the run.
class MockBackend : public Backend {
public:
    explicit MockBackend(BackendConfig config) : config_(std::move(config)) {}

    void register_truth(const std::string& token_text, Label label);
    BackendResponse complete(const std::vector<ChatMessage>& messages) override;

    std::uint64_t call_count() const { return calls_.load(); }
    std::uint64_t max_in_flight() const { return max_in_flight_.load(); }
    std::vector<MockSidecarEntry> sidecar() const;

private:
    BackendConfig config_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Label> truth_;
    std::vector<MockSidecarEntry> sidecar_;
    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> in_flight_{0};
    std::atomic<std::uint64_t> max_in_flight_{0};
};

// OpenAI-style chat-completions client. Retries timeouts, 5xx and 429
// with exponential backoff plus jitter; other 4xx fail immediately.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    BackendResponse complete(const std::vector<ChatMessage>& messages) override;

private:
    void rate_limit_acquire();

    BackendConfig config_;
    std::string token_;
    std::mutex bucket_mutex_;
    double bucket_tokens_;
    std::chrono::steady_clock::time_point bucket_refill_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace drllm
