#include <exmig/errors.hpp>
#include <exmig/hash.hpp>
#include <exmig/llm.hpp>

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace exmig {

using nlohmann::json;

std::string_view to_string(LlmStage stage)
{
    switch (stage) {
    case LlmStage::Identify: return "identify";
    case LlmStage::Localize: return "localize";
    case LlmStage::Adapt: return "adapt";
    }
    return "adapt";
}

LlmStage parse_llm_stage(std::string_view text)
{
    if (text == "identify")
        return LlmStage::Identify;
    if (text == "localize")
        return LlmStage::Localize;
    if (text == "adapt")
        return LlmStage::Adapt;
    throw ConfigError("unknown LLM stage '" + std::string(text) + "'");
}

std::string request_digest(const LlmRequest& request)
{
    std::string key(to_string(request.stage));
    key += '\n';
    key += request.prompt;
    return sha256_hex(key);
}

long estimate_tokens(std::string_view text)
{
    return static_cast<long>((text.size() + 3) / 4);
}

// ---------------------------------------------------------------------------

ScriptedMockBackend::ScriptedMockBackend(const json& transcript)
{
    if (!transcript.is_object())
        throw ConfigError("mock transcript must be a JSON object");
    if (auto it = transcript.find("entries"); it != transcript.end()) {
        for (const auto& e : *it)
            add_entry(e.at("digest").get<std::string>(), e.at("response").get<std::string>());
    }
    if (auto it = transcript.find("rules"); it != transcript.end()) {
        for (const auto& r : *it) {
            Rule rule;
            if (r.contains("stage"))
                rule.stage = parse_llm_stage(r.at("stage").get<std::string>());
            if (r.contains("contains")) {
                const auto& c = r.at("contains");
                if (c.is_string())
                    rule.contains.push_back(c.get<std::string>());
                else
                    rule.contains = c.get<std::vector<std::string>>();
            }
            rule.response = r.at("response").get<std::string>();
            add_rule(std::move(rule));
        }
    }
}

ScriptedMockBackend ScriptedMockBackend::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read mock transcript " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid mock transcript " + path.string() + ": " + e.what());
    }
    try {
        return ScriptedMockBackend(doc);
    } catch (const json::exception& e) {
        throw ConfigError("invalid mock transcript " + path.string() + ": " + e.what());
    }
}

void ScriptedMockBackend::add_entry(std::string digest, std::string response)
{
    m_entries.insert_or_assign(std::move(digest), std::move(response));
}

void ScriptedMockBackend::add_rule(Rule rule)
{
    m_rules.push_back(std::move(rule));
}

LlmResponse ScriptedMockBackend::complete(const LlmRequest& request)
{
    const std::string* text = nullptr;
    if (auto it = m_entries.find(request_digest(request)); it != m_entries.end()) {
        text = &it->second;
    } else {
        for (const auto& rule : m_rules) {
            if (rule.stage && *rule.stage != request.stage)
                continue;
            const bool all = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& s) {
                return request.prompt.find(s) != std::string::npos;
            });
            if (all) {
                text = &rule.response;
                break;
            }
        }
    }
    if (!text)
        throw LlmError("mock transcript has no response for " + std::string(to_string(request.stage)) +
                       " request " + request_digest(request).substr(0, 12));
    return LlmResponse{*text, estimate_tokens(request.prompt), estimate_tokens(*text)};
}

// ---------------------------------------------------------------------------

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("LLM endpoint URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

HttpChatBackend::HttpChatBackend(HttpChatOptions options)
    : m_options(std::move(options))
    , m_in_flight(std::clamp(m_options.max_in_flight, 1, 1024))
{
    split_url(m_options.url); // validate early
}

LlmResponse HttpChatBackend::call_once(const LlmRequest& request, const std::string& api_key)
{
    const auto [origin, path] = split_url(m_options.url);
    httplib::Client client(origin);

    auto timeout = m_options.request_timeout;
    if (request.timeout)
        timeout = std::min(timeout, *request.timeout);
    timeout = std::max(timeout, std::chrono::milliseconds(1));
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!api_key.empty())
        headers.emplace("Authorization", "Bearer " + api_key);

    json body = {
        {"model", m_options.model},
        {"temperature", m_options.temperature},
        {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
    };

    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result)
        throw LlmError("transport error: " + httplib::to_string(result.error()));
    if (result->status != 200) {
        throw LlmError("HTTP " + std::to_string(result->status) +
                       (retryable_status(result->status) ? " (retryable)" : ""));
    }

    json doc;
    try {
        doc = json::parse(result->body);
        LlmResponse response;
        response.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
            response.input_tokens = usage->value("prompt_tokens", 0L);
            response.output_tokens = usage->value("completion_tokens", 0L);
        } else {
            response.input_tokens = estimate_tokens(request.prompt);
            response.output_tokens = estimate_tokens(response.text);
        }
        return response;
    } catch (const json::exception& e) {
        throw LlmError(std::string("malformed chat-completion response: ") + e.what());
    }
}

LlmResponse HttpChatBackend::complete(const LlmRequest& request)
{
    std::string api_key;
    if (!m_options.api_key_env.empty()) {
        if (const char* v = std::getenv(m_options.api_key_env.c_str()))
            api_key = v;
    }

    m_in_flight.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{m_in_flight};

    std::string last_error;
    for (int attempt = 0; attempt <= m_options.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(m_options.backoff * (1 << std::min(attempt - 1, 10)));
        try {
            return call_once(request, api_key);
        } catch (const LlmError& e) {
            last_error = e.what();
            const bool retry = last_error.starts_with("transport error") ||
                               last_error.find("(retryable)") != std::string::npos;
            if (!retry)
                break;
        }
    }
    throw LlmError(last_error);
}

// ---------------------------------------------------------------------------

LlmResponse RecordingBackend::complete(const LlmRequest& request)
{
    LlmResponse response = m_inner.complete(request);
    std::lock_guard lock(m_mutex);
    m_recorded.insert_or_assign(request_digest(request), std::make_pair(request.stage, response.text));
    return response;
}

json RecordingBackend::transcript() const
{
    std::lock_guard lock(m_mutex);
    json entries = json::array();
    for (const auto& [digest, value] : m_recorded)
        entries.push_back({{"digest", digest}, {"stage", to_string(value.first)}, {"response", value.second}});
    return json{{"version", 1}, {"entries", entries}};
}

void RecordingBackend::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw EnvironmentError("cannot write transcript " + path.string());
    out << transcript().dump(2) << '\n';
}

} // namespace exmig
