#pragma once

// Chat-completion client used for service-mode verbalization. Speaks the
// common OpenAI-style JSON wire format: POST {model, messages, temperature,
// max_tokens} and read choices[0].message.content. Generation always runs at
// temperature 0.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace attribforge {

struct ServiceUnavailable : std::runtime_error {
    explicit ServiceUnavailable(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyGeneration : std::runtime_error {
    explicit EmptyGeneration(const std::string& what) : std::runtime_error(what) {}
};

struct ServiceConfig {
    std::string url;    // full endpoint, e.g. http://host:8080/v1/chat/completions
    std::string key;    // bearer credential; may be empty
    std::string model;
    int max_retries = 3;
    double backoff_initial_s = 1.0;  // doubles per retry
    int timeout_s = 60;
    int max_tokens = 512;

    // ATTRIBFORGE_TEXTGEN_URL / _KEY / _MODEL
    static std::optional<ServiceConfig> from_env() {
        const char* url = std::getenv("ATTRIBFORGE_TEXTGEN_URL");
        if (url == nullptr || *url == '\0') return std::nullopt;
        ServiceConfig c;
        c.url = url;
        if (const char* key = std::getenv("ATTRIBFORGE_TEXTGEN_KEY")) c.key = key;
        if (const char* model = std::getenv("ATTRIBFORGE_TEXTGEN_MODEL")) c.model = model;
        return c;
    }
};

class TextGenClient {
public:
    virtual ~TextGenClient() = default;
    // Returns the completion text; throws ServiceUnavailable on transport failure.
    virtual std::string complete(const std::string& prompt) = 0;
};

class HttpTextGenClient : public TextGenClient {
public:
    explicit HttpTextGenClient(ServiceConfig config) : config_(std::move(config)) {
        auto scheme_end = config_.url.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("endpoint URL must include a scheme: " + config_.url);
        auto path_start = config_.url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = config_.url;
            path_ = "/";
        } else {
            base_ = config_.url.substr(0, path_start);
            path_ = config_.url.substr(path_start);
        }
    }

    // Raw request/response lines are appended here when set.
    void set_log(std::ostream* log) { log_ = log; }

    std::string complete(const std::string& prompt) override {
        nlohmann::json body = {
            {"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", 0},
            {"max_tokens", config_.max_tokens},
        };
        const std::string payload = body.dump();

        std::string last_error;
        double backoff = config_.backoff_initial_s;
        for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                backoff *= 2.0;
            }
            httplib::Client client(base_);
            client.set_connection_timeout(config_.timeout_s, 0);
            client.set_read_timeout(config_.timeout_s, 0);
            if (!config_.key.empty()) client.set_bearer_token_auth(config_.key);

            log_line("request " + payload);
            httplib::Result res = client.Post(path_, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            log_line("response " + std::to_string(res->status) + " " + res->body);
            if (res->status != 200) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            try {
                nlohmann::json reply = nlohmann::json::parse(res->body);
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed completion payload: ") + e.what();
            }
        }
        throw ServiceUnavailable("endpoint " + config_.url + " failed after " +
                                 std::to_string(config_.max_retries) + " attempts: " + last_error);
    }

private:
    void log_line(const std::string& line) {
        if (log_ == nullptr) return;
        std::lock_guard<std::mutex> lock(log_mutex_);
        *log_ << line << "\n";
    }

    ServiceConfig config_;
    std::string base_;
    std::string path_;
    std::ostream* log_ = nullptr;
    std::mutex log_mutex_;
};

} // namespace attribforge
