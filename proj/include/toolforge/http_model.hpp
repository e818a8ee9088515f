// Copyright 2026 The ToolForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "toolforge/model.hpp"

namespace toolforge {

inline constexpr const char* kApiKeyEnv = "TOOLFORGE_API_KEY";

struct HttpConfig {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string model_name;
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_in_flight = 8;
    double backoff_initial_s = 0.5;
    std::string api_key;  // filled from TOOLFORGE_API_KEY when empty

    static HttpConfig from_json(const nlohmann::json& j) {
        HttpConfig c;
        c.base_url = j.at("base_url").get<std::string>();
        c.model_name = j.value("model_name", std::string());
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.backoff_initial_s = j.value("backoff_initial_s", c.backoff_initial_s);
        return c;
    }
};

/// Chat-completions client. Transient failures (connection errors, timeouts,
/// 429 and 5xx) are retried with exponential backoff; at most max_in_flight
/// requests are outstanding at once.
class HttpModel final : public ModelBackend {
public:
    explicit HttpModel(HttpConfig config) : config_(std::move(config)) {
        if (config_.api_key.empty()) {
            if (const char* key = std::getenv(kApiKeyEnv)) config_.api_key = key;
        }
        if (config_.max_in_flight < 1) throw BackendError(BackendError::Kind::config, "max_in_flight must be >= 1");
        if (config_.max_retries < 0) throw BackendError(BackendError::Kind::config, "max_retries must be >= 0");
        if (!(config_.timeout_s > 0.0)) throw BackendError(BackendError::Kind::config, "timeout_s must be > 0");
        split_url(config_.base_url);
    }

    bool share_safe() const noexcept override { return true; }
    const HttpConfig& config() const noexcept { return config_; }

    static nlohmann::json request_body(const std::string& model_name, const Conversation& conversation,
                                       const GenerationParams& params, int n) {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : conversation)
            messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
        nlohmann::json body = {{"model", model_name},
                               {"messages", std::move(messages)},
                               {"temperature", params.temperature},
                               {"n", n}};
        if (params.max_output_tokens) body["max_tokens"] = *params.max_output_tokens;
        if (!params.stop.empty()) body["stop"] = params.stop;
        return body;
    }

    std::vector<std::string> generate(const Conversation& conversation, const GenerationParams& params) override {
        params.validate();
        std::vector<std::string> texts;
        // Some servers ignore `n`; keep asking until enough choices arrived.
        for (int attempt = 0; static_cast<int>(texts.size()) < params.n && attempt < params.n; ++attempt) {
            const int want = params.n - static_cast<int>(texts.size());
            auto batch = request_with_retries(request_body(config_.model_name, conversation, params, want).dump());
            for (auto& t : batch) {
                if (static_cast<int>(texts.size()) == params.n) break;
                texts.push_back(std::move(t));
            }
        }
        if (static_cast<int>(texts.size()) < params.n)
            throw BackendError(BackendError::Kind::malformed_response, "endpoint returned fewer choices than requested");
        return texts;
    }

private:
    class InFlightSlot {
    public:
        explicit InFlightSlot(HttpModel& m) : m_(m) {
            std::unique_lock lock(m_.mu_);
            m_.cv_.wait(lock, [&] { return m_.in_flight_ < m_.config_.max_in_flight; });
            ++m_.in_flight_;
        }
        ~InFlightSlot() {
            {
                std::lock_guard lock(m_.mu_);
                --m_.in_flight_;
            }
            m_.cv_.notify_one();
        }
        InFlightSlot(const InFlightSlot&) = delete;
        InFlightSlot& operator=(const InFlightSlot&) = delete;

    private:
        HttpModel& m_;
    };

    void split_url(const std::string& url) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw BackendError(BackendError::Kind::config, "base_url needs a scheme: '" + url + "'");
        const auto path_start = url.find('/', scheme_end + 3);
        host_ = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        path_ = prefix + "/chat/completions";
    }

    static bool transient_status(int status) { return status == 429 || status >= 500; }

    std::vector<std::string> parse_choices(const std::string& body) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::malformed_response, std::string("response is not JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array())
            throw BackendError(BackendError::Kind::malformed_response, "response has no 'choices' array");
        std::vector<std::string> out;
        for (const auto& choice : j["choices"]) {
            const auto msg = choice.find("message");
            if (msg == choice.end() || !msg->is_object() || !msg->contains("content"))
                throw BackendError(BackendError::Kind::malformed_response, "choice without message.content");
            const auto& content = (*msg)["content"];
            out.push_back(content.is_string() ? content.get<std::string>() : std::string());
        }
        return out;
    }

    std::vector<std::string> request_with_retries(const std::string& body) {
        double backoff = config_.backoff_initial_s;
        for (int attempt = 0;; ++attempt) {
            try {
                return request_once(body);
            } catch (const BackendError& e) {
                const bool transient = e.kind() == BackendError::Kind::timeout ||
                                       e.kind() == BackendError::Kind::transport ||
                                       (e.kind() == BackendError::Kind::http_status && transient_status(e.status()));
                if (!transient || attempt >= config_.max_retries) throw;
            }
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
    }

    std::vector<std::string> request_once(const std::string& body) {
        InFlightSlot slot(*this);
        httplib::Client client(host_);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(config_.timeout_s));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            const auto elapsed = std::chrono::steady_clock::now() - started;
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout ||
                (err == httplib::Error::Read && elapsed >= timeout - std::chrono::milliseconds(50)))
                throw BackendError(BackendError::Kind::timeout, "request to " + host_ + path_ + " timed out");
            throw BackendError(BackendError::Kind::transport,
                               "request to " + host_ + path_ + " failed: " + httplib::to_string(err));
        }
        if (res->status != 200)
            throw BackendError(BackendError::Kind::http_status,
                               "endpoint returned HTTP " + std::to_string(res->status), res->status);
        return parse_choices(res->body);
    }

    HttpConfig config_;
    std::string host_;
    std::string path_;
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

}  // namespace toolforge
