#include "toolmem/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "toolmem/errors.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

using nlohmann::json;

std::string prompt_text(const CompletionRequest& request) {
    std::string joined;
    for (const auto& message : request.messages) {
        if (!joined.empty()) joined += "\n";
        joined += message.text;
    }
    return joined;
}

std::string prompt_digest(const CompletionRequest& request) {
    return fnv1a64_hex(prompt_text(request));
}

// --- MockBackend -------------------------------------------------------------

MockBackend::MockBackend(std::unordered_map<std::string, std::string> fixtures)
    : fixtures_(std::move(fixtures)) {}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& fixtures_path) {
    return std::make_shared<MockBackend>(load_fixtures(fixtures_path));
}

std::string MockBackend::complete(const CompletionRequest& request) {
    auto it = fixtures_.find(prompt_digest(request));
    if (it == fixtures_.end()) {
        fail(ErrorKind::Model, "no fixture for prompt digest " + prompt_digest(request));
    }
    return it->second;
}

std::unordered_map<std::string, std::string> load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open fixtures: " + path.string());
    std::unordered_map<std::string, std::string> fixtures;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json record = json::parse(line);
            fixtures[record.at("digest").get<std::string>()] =
                record.at("response").get<std::string>();
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse,
                 "fixtures line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return fixtures;
}

void save_fixtures(const std::unordered_map<std::string, std::string>& fixtures,
                   const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open fixtures for writing: " + path.string());
    // sorted for stable diffs
    std::map<std::string, std::string> ordered(fixtures.begin(), fixtures.end());
    for (const auto& [digest, response] : ordered) {
        out << json{{"digest", digest}, {"response", response}}.dump() << '\n';
    }
}

// --- RemoteBackend -----------------------------------------------------------

struct RemoteBackend::Impl {
    RemoteConfig config;
    std::mutex mutex;
    std::condition_variable slot_free;
    int inflight = 0;

    void acquire() {
        std::unique_lock lock(mutex);
        slot_free.wait(lock, [&] { return inflight < config.max_inflight; });
        ++inflight;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            --inflight;
        }
        slot_free.notify_one();
    }
};

RemoteBackend::RemoteBackend(RemoteConfig config) : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::complete(const CompletionRequest& request) {
    const RemoteConfig& cfg = impl_->config;
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (!key || !*key) fail(ErrorKind::Transport, "credential not set: $" + cfg.api_key_env);

    json messages = json::array();
    for (const auto& message : request.messages) {
        json msg{{"role", message.role == ChatRole::System ? "system" : "user"}};
        if (message.image_ref.empty()) {
            msg["content"] = message.text;
        } else {
            msg["content"] = json::array({
                json{{"type", "text"}, {"text", message.text}},
                json{{"type", "image_url"}, {"image_url", json{{"url", message.image_ref}}}},
            });
        }
        messages.push_back(std::move(msg));
    }
    json body{
        {"model", request.model_id.empty() ? cfg.model_id : request.model_id},
        {"messages", messages},
        {"temperature", request.temperature},
        {"n", request.sample_count},
    };

    impl_->acquire();
    struct SlotGuard {
        Impl* impl;
        ~SlotGuard() { impl->release(); }
    } guard{impl_.get()};

    std::string last_error;
    double backoff = cfg.initial_backoff_seconds;
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        httplib::Client client(cfg.base_url);
        client.set_read_timeout(120, 0);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (res && res->status == 200) {
            try {
                json parsed = json::parse(res->body);
                return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                fail(ErrorKind::Model, std::string("malformed completion response: ") + e.what());
            }
        }
        if (res && res->status >= 400 && res->status < 500 && res->status != 429) {
            // non-retryable refusal
            fail(ErrorKind::Model,
                 "backend returned status " + std::to_string(res->status) + ": " + res->body);
        }
        last_error = res ? "status " + std::to_string(res->status)
                         : "transport failure: " + httplib::to_string(res.error());
        if (attempt < cfg.max_attempts) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
    }
    fail(ErrorKind::Transport,
         "exhausted " + std::to_string(cfg.max_attempts) + " attempts (" + last_error + ")");
}

} // namespace toolmem
