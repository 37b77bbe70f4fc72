#include "graphs3/chat_client.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace graphs3 {

InFlightLimiter::InFlightLimiter(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_use_ < capacity_; });
    ++in_use_;
    peak_ = std::max(peak_, in_use_);
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --in_use_;
    }
    cv_.notify_one();
}

std::size_t InFlightLimiter::peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

namespace {

struct Permit {
    explicit Permit(InFlightLimiter* limiter) : limiter_(limiter) {
        if (limiter_) limiter_->acquire();
    }
    ~Permit() {
        if (limiter_) limiter_->release();
    }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

    InFlightLimiter* limiter_;
};

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

ChatClient::ChatClient(ChatClientConfig config, std::shared_ptr<InFlightLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {
    const auto scheme_end = config_.endpoint.find("://");
    if (config_.endpoint.empty() || scheme_end == std::string::npos)
        throw std::invalid_argument("chat endpoint must be an absolute URL: '" + config_.endpoint + "'");
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = config_.endpoint;
        path_ = "/";
    } else {
        host_ = config_.endpoint.substr(0, path_start);
        path_ = config_.endpoint.substr(path_start);
    }
    if (config_.model.empty()) throw std::invalid_argument("chat model name is required");
}

std::string ChatClient::request_body(const std::vector<ChatMessage>& messages) const {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    auto& list = body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) list.push_back({{"role", m.role}, {"content", m.content}});
    return body.dump();
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
    const std::string body = request_body(messages);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto backoff = config_.initial_backoff;
    const int attempts_allowed = std::max(config_.max_retries, 0) + 1;
    for (int attempt = 1;; ++attempt) {
        std::optional<ChatError> failure;
        {
            Permit permit(limiter_.get());
            httplib::Client client(host_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            auto result = client.Post(path_, headers, body, "application/json");
            if (!result) {
                const auto err = result.error();
                const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
                failure.emplace(timed_out ? ChatError::Kind::timeout : ChatError::Kind::transport,
                                "chat request failed: " + httplib::to_string(err), 0, attempt);
            } else if (result->status != 200) {
                const int status = result->status;
                ChatError error(ChatError::Kind::http_status,
                                "chat endpoint returned HTTP " + std::to_string(status), status, attempt);
                if (!retryable_status(status)) throw error;
                failure.emplace(std::move(error));
            } else {
                auto reply = nlohmann::json::parse(result->body, nullptr, false);
                try {
                    if (reply.is_discarded()) throw std::runtime_error("reply is not JSON");
                    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
                } catch (const std::exception& e) {
                    throw ChatError(ChatError::Kind::bad_response,
                                    std::string("malformed chat reply: ") + e.what(), 200, attempt);
                }
            }
        }
        if (attempt >= attempts_allowed)
            throw ChatError(failure->kind(), std::string(failure->what()) + " (after " + std::to_string(attempt) +
                                                 " attempts)",
                            failure->status(), attempt);
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::chrono::milliseconds::rep>(static_cast<double>(backoff.count()) * config_.backoff_multiplier));
    }
}

}  // namespace graphs3
