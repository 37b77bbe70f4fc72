#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphs3 {

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatClientConfig {
    // Full URL of the completions route, e.g. http://host:8000/v1/chat/completions
    std::string endpoint;
    std::string model;
    double temperature = 0.7;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_multiplier = 2.0;
    std::string api_key;
};

// Environment variable holding the bearer token.
inline constexpr const char* kApiKeyEnv = "GRAPHS3_API_KEY";

// Counting gate shared by every client that should respect one global cap.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t capacity);

    void acquire();
    void release();
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t peak() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t capacity_;
    std::size_t in_use_ = 0;
    std::size_t peak_ = 0;
};

class ChatError : public std::runtime_error {
public:
    enum class Kind { transport, timeout, http_status, bad_response };

    ChatError(Kind kind, std::string message, int status = 0, int attempts = 1)
        : std::runtime_error(std::move(message)), kind_(kind), status_(status), attempts_(attempts) {}

    Kind kind() const noexcept { return kind_; }
    int status() const noexcept { return status_; }
    int attempts() const noexcept { return attempts_; }

private:
    Kind kind_;
    int status_;
    int attempts_;
};

// Chat-completion client: one POST of {model, messages, temperature}, reply
// read from choices[0].message.content. Transport failures, timeouts, 408,
// 429 and 5xx are retried with exponential backoff using the same body.
class ChatClient {
public:
    explicit ChatClient(ChatClientConfig config, std::shared_ptr<InFlightLimiter> limiter = nullptr);

    std::string complete(const std::vector<ChatMessage>& messages) const;
    std::string request_body(const std::vector<ChatMessage>& messages) const;

    const ChatClientConfig& config() const noexcept { return config_; }

private:
    ChatClientConfig config_;
    std::shared_ptr<InFlightLimiter> limiter_;
    std::string host_;  // scheme://host[:port]
    std::string path_;
};

}  // namespace graphs3
