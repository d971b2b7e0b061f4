#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace exmig {

enum class LlmStage { Identify, Localize, Adapt };

std::string_view to_string(LlmStage stage);
LlmStage parse_llm_stage(std::string_view text);

struct LlmRequest {
    LlmStage stage = LlmStage::Adapt;
    std::string prompt;
    /// Upper bound on the call's wall time, derived from the caller's remaining budget.
    std::optional<std::chrono::milliseconds> timeout;
};

struct LlmResponse {
    std::string text;
    long input_tokens = 0;
    long output_tokens = 0;
};

/// Digest identifying a request in transcripts: sha256 over stage and prompt.
std::string request_digest(const LlmRequest& request);

/// Characters/4 token estimate used when a backend reports no usage.
long estimate_tokens(std::string_view text);

/// A chat-completion style model. Implementations must be callable from concurrent tasks.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Throws LlmError when no response can be produced.
    virtual LlmResponse complete(const LlmRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Replays canned responses.
///
/// Lookup order: an exact request-digest entry (as recorded from a live run), then the
/// first scripted rule whose stage matches and whose `contains` substrings all occur in
/// the prompt. Lookups are stateless, so identical requests always get identical answers.
class ScriptedMockBackend final : public LlmBackend {
public:
    struct Rule {
        std::optional<LlmStage> stage;
        std::vector<std::string> contains;
        std::string response;
    };

    ScriptedMockBackend() = default;
    explicit ScriptedMockBackend(const nlohmann::json& transcript);

    static ScriptedMockBackend from_file(const std::filesystem::path& path);

    void add_entry(std::string digest, std::string response);
    void add_rule(Rule rule);

    LlmResponse complete(const LlmRequest& request) override;
    std::string name() const override { return "mock"; }

    std::size_t entry_count() const { return m_entries.size(); }
    std::size_t rule_count() const { return m_rules.size(); }

private:
    std::map<std::string, std::string> m_entries;
    std::vector<Rule> m_rules;
};

struct HttpChatOptions {
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_in_flight = 4;
    int retries = 3;
    std::chrono::milliseconds backoff{500};
    std::chrono::milliseconds request_timeout{120000};
};

/// JSON-over-HTTP chat-completions client. The API key is read from the configured
/// environment variable on every call and never stored.
class HttpChatBackend final : public LlmBackend {
public:
    explicit HttpChatBackend(HttpChatOptions options);

    LlmResponse complete(const LlmRequest& request) override;
    std::string name() const override { return "http"; }

    const HttpChatOptions& options() const { return m_options; }

private:
    LlmResponse call_once(const LlmRequest& request, const std::string& api_key);

    HttpChatOptions m_options;
    std::counting_semaphore<1024> m_in_flight;
};

/// Wraps a backend and records every exchange as a digest-keyed transcript entry.
class RecordingBackend final : public LlmBackend {
public:
    explicit RecordingBackend(LlmBackend& inner) : m_inner(inner) {}

    LlmResponse complete(const LlmRequest& request) override;
    std::string name() const override { return m_inner.name(); }

    nlohmann::json transcript() const;
    void save(const std::filesystem::path& path) const;

private:
    LlmBackend& m_inner;
    mutable std::mutex m_mutex;
    std::map<std::string, std::pair<LlmStage, std::string>> m_recorded;
};

} // namespace exmig
