#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace toolmem {

enum class ChatRole { System, User };

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string text;
    std::string image_ref; // optional attachment locator, empty when absent
};

/// Decoding defaults follow the evaluation setup: greedy (temperature 0.0),
/// a single sample.
struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int sample_count = 1;
    std::string model_id;
};

/// Digest of a request's prompt content; mock fixtures key on it.
std::string prompt_digest(const CompletionRequest& request);

/// Concatenated message text of a request (what the digest covers).
std::string prompt_text(const CompletionRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual const std::string& name() const = 0;
};

/// Scripted backend replaying prompt-digest -> response records. Unscripted
/// prompts are a model-error. Lock-free: the fixture table is immutable after
/// construction.
class MockBackend : public Backend {
public:
    explicit MockBackend(std::unordered_map<std::string, std::string> fixtures);
    static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& fixtures_path);

    std::string complete(const CompletionRequest& request) override;
    const std::string& name() const override { return name_; }
    std::size_t fixture_count() const { return fixtures_.size(); }

private:
    std::unordered_map<std::string, std::string> fixtures_;
    std::string name_ = "mock";
};

/// Backend driven by an arbitrary function of the request. Test doubles
/// (echo mocks, oracles, fault injectors) are built on this.
class CallbackBackend : public Backend {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    explicit CallbackBackend(Fn fn, std::string name = "callback")
        : fn_(std::move(fn)), name_(std::move(name)) {}

    std::string complete(const CompletionRequest& request) override { return fn_(request); }
    const std::string& name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

struct RemoteConfig {
    std::string base_url = "https://api.openai.com";
    std::string model_id = "gpt-4o-mini-2024-07-18";
    std::string api_key_env = "TOOLMEM_API_KEY";
    int max_attempts = 3;
    double initial_backoff_seconds = 1.0;
    int max_inflight = 4; // token-bucket bound on concurrent requests
};

/// OpenAI-style chat-completions client. Transient transport failures are
/// retried with exponential backoff; backend refusals are not retried.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);
    ~RemoteBackend() override;

    std::string complete(const CompletionRequest& request) override;
    const std::string& name() const override { return name_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string name_ = "remote";
};

/// Fixture file: JSONL records {"digest": ..., "response": ...}. A "prompt"
/// field, when present, is informational only.
std::unordered_map<std::string, std::string> load_fixtures(const std::filesystem::path& path);
void save_fixtures(const std::unordered_map<std::string, std::string>& fixtures,
                   const std::filesystem::path& path);

} // namespace toolmem
