#include <httplib.h>

#include "drllm/backend.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "drllm/hash.hpp"

namespace drllm {

std::string request_fingerprint(const std::string& model_name,
                                const std::vector<ChatMessage>& messages,
                                const std::optional<double>& temperature) {
    // length-prefixed serialization so field boundaries cannot collide
    std::ostringstream buf;
    buf << model_name.size() << ':' << model_name << ';';
    for (const ChatMessage& m : messages) {
        buf << m.role.size() << ':' << m.role << ':' << m.content.size() << ':' << m.content
            << ';';
    }
    if (temperature) buf << "t=" << *temperature;
    return hash128_hex(buf.str());
}

namespace {

std::string format_pair(int attack_pct, int benign_pct) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "Attack: %.2f, Benign: %.2f", attack_pct / 100.0,
                  benign_pct / 100.0);
    return buf;
}

constexpr const char* kRefusalText =
    "I cannot determine a probability from this data; there is a lack of "
    "confidence in any prediction.";

constexpr const char* kStageOneAck = "OK";

}  // namespace

std::string mock_decide(const MockParams& params, const std::string& token_text,
                        Label true_label) {
    // Counter-free: every draw is a pure function of (seed, token_text),
    // so outcomes do not depend on evaluation order.
    SplitMix64 rng(mix64(params.seed) ^ hash_bytes(token_text));
    const double u_kind = rng.next_unit();
    const double u_correct = rng.next_unit();
    const std::uint64_t raw = rng.next();

    if (u_kind < params.l2_rate) return kRefusalText;

    if (u_kind < params.l2_rate + params.l1_rate) {
        // probabilities deliberately off by 0.2 in either direction
        const int xi = 51 + static_cast<int>(raw % 29);  // [51, 79]
        const int yi = 100 - xi + ((raw >> 32) % 2 ? 20 : -20);
        return format_pair(xi, yi);
    }

    const bool correct = u_correct < params.accuracy;
    const bool say_attack = (true_label == Label::Attack) == correct;
    const int xi = 51 + static_cast<int>(raw % 49);  // [51, 99], never 0.50
    return say_attack ? format_pair(xi, 100 - xi) : format_pair(100 - xi, xi);
}

void MockBackend::register_truth(const std::string& token_text, Label label) {
    std::lock_guard lock(mutex_);
    truth_[token_text] = label;
}

std::vector<MockSidecarEntry> MockBackend::sidecar() const {
    std::lock_guard lock(mutex_);
    return sidecar_;
}

BackendResponse MockBackend::complete(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw BackendError("empty message list");
    calls_.fetch_add(1);
    const std::uint64_t inflight = in_flight_.fetch_add(1) + 1;
    std::uint64_t prev = max_in_flight_.load();
    while (inflight > prev && !max_in_flight_.compare_exchange_weak(prev, inflight)) {
    }

    BackendResponse resp;
    resp.request_fingerprint =
        request_fingerprint(config_.model_name, messages, config_.temperature);

    // stage2 carries a Data line; stage1 does not
    const std::string& content = messages.back().content;
    const std::string needle = std::string("\n") + kDataPrefix;
    std::size_t pos = content.find(needle);
    if (pos == std::string::npos) {
        resp.text = kStageOneAck;
    } else {
        pos += needle.size();
        std::size_t end = content.find('\n', pos);
        const std::string token_text =
            content.substr(pos, end == std::string::npos ? std::string::npos : end - pos);

        Label truth;
        {
            std::lock_guard lock(mutex_);
            auto it = truth_.find(token_text);
            if (it == truth_.end())
                throw BackendError("mock backend: no registered truth for record");
            truth = it->second;
        }
        resp.text = mock_decide(config_.mock_params, token_text, truth);

        MockSidecarEntry entry;
        entry.token_text = token_text;
        entry.true_label = truth;
        if (resp.text == kRefusalText) {
            entry.kind = "l2";
        } else {
            double a = 0, b = 0;
            std::sscanf(resp.text.c_str(), "Attack: %lf, Benign: %lf", &a, &b);
            entry.p_attack = a;
            entry.p_benign = b;
            entry.kind = (a + b > 1.05 || a + b < 0.95) ? "l1" : "valid";
        }
        std::lock_guard lock(mutex_);
        sidecar_.push_back(std::move(entry));
    }

    in_flight_.fetch_sub(1);
    return resp;
}

HttpBackend::HttpBackend(BackendConfig config)
    : config_(std::move(config)),
      bucket_tokens_(config_.requests_per_second),
      bucket_refill_(std::chrono::steady_clock::now()) {
    if (config_.endpoint_url.empty()) throw BackendError("http backend requires endpoint_url");
    if (config_.auth_env.empty()) throw BackendError("http backend requires auth_source");
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token || !*token)
        throw BackendError("auth token environment variable not set: " + config_.auth_env);
    token_ = token;
}

void HttpBackend::rate_limit_acquire() {
    if (config_.requests_per_second <= 0) return;
    while (true) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard lock(bucket_mutex_);
            const auto now = std::chrono::steady_clock::now();
            const double elapsed = std::chrono::duration<double>(now - bucket_refill_).count();
            bucket_tokens_ = std::min(config_.requests_per_second,
                                      bucket_tokens_ + elapsed * config_.requests_per_second);
            bucket_refill_ = now;
            if (bucket_tokens_ >= 1.0) {
                bucket_tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::milliseconds(static_cast<int>(
                1000.0 * (1.0 - bucket_tokens_) / config_.requests_per_second) + 1);
        }
        std::this_thread::sleep_for(wait);
    }
}

BackendResponse HttpBackend::complete(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw BackendError("empty message list");

    // split scheme://host[:port] from the request path
    std::string base = config_.endpoint_url;
    std::string path = "/";
    const std::size_t scheme = base.find("://");
    if (scheme != std::string::npos) {
        const std::size_t slash = base.find('/', scheme + 3);
        if (slash != std::string::npos) {
            path = base.substr(slash);
            base = base.substr(0, slash);
        }
    }

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["stream"] = false;
    auto& msgs = body["messages"] = nlohmann::json::array();
    for (const ChatMessage& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    if (config_.temperature) body["temperature"] = *config_.temperature;
    if (config_.max_output_tokens > 0) body["max_tokens"] = config_.max_output_tokens;
    const std::string payload = body.dump();

    BackendResponse resp;
    resp.request_fingerprint =
        request_fingerprint(config_.model_name, messages, config_.temperature);

    const auto start = std::chrono::steady_clock::now();
    SplitMix64 jitter(hash_bytes(resp.request_fingerprint));
    int last_status = 0;
    std::string last_error;

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto backoff = std::chrono::milliseconds(200) * (1 << (attempt - 1)) +
                                 std::chrono::milliseconds(jitter.next_below(100));
            std::this_thread::sleep_for(backoff);
        }
        rate_limit_acquire();

        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
        client.set_bearer_token_auth(token_);

        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;  // connection failures and timeouts are transient
        }
        last_status = res->status;
        if (res->status == 429 || res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400)
            throw BackendError("request failed with status " + std::to_string(res->status) +
                                   ": " + res->body,
                               res->status);

        try {
            const auto j = nlohmann::json::parse(res->body);
            resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed provider response envelope: ") + e.what(),
                               res->status);
        }
        resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return resp;
    }
    throw BackendError("retries exhausted after " + std::to_string(config_.max_retries + 1) +
                           " attempts (" + last_error + ")",
                       last_status);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    if (config.kind == BackendKind::Mock) return std::make_unique<MockBackend>(config);
    return std::make_unique<HttpBackend>(config);
}

}  // namespace drllm
