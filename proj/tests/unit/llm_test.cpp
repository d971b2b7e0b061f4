#include <exmig/errors.hpp>
#include <exmig/llm.hpp>

#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace exmig;
using nlohmann::json;

namespace {

// Local chat-completions endpoint that fails the first `failures` calls with `status`.
class FakeServer {
public:
    FakeServer(int failures, int status)
    {
        m_server.Post("/v1/chat/completions", [this, failures, status](const httplib::Request& req,
                                                                       httplib::Response& res) {
            const int n = ++m_calls;
            m_last_auth = req.get_header_value("Authorization");
            if (n <= failures) {
                res.status = status;
                return;
            }
            const auto body = json::parse(req.body);
            const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
            json reply = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", "echo:" + prompt}}}}})},
                          {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 5}}}};
            res.set_content(reply.dump(), "application/json");
        });
        m_port = m_server.bind_to_any_port("127.0.0.1");
        m_thread = std::thread([this] { m_server.listen_after_bind(); });
        m_server.wait_until_ready();
    }

    ~FakeServer()
    {
        m_server.stop();
        m_thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(m_port) + "/v1/chat/completions"; }
    int calls() const { return m_calls; }
    std::string last_auth() const { return m_last_auth; }

private:
    httplib::Server m_server;
    int m_port = 0;
    std::thread m_thread;
    std::atomic<int> m_calls{0};
    std::string m_last_auth;
};

HttpChatOptions options_for(const FakeServer& server)
{
    HttpChatOptions o;
    o.url = server.url();
    o.api_key_env = "EXMIG_TEST_API_KEY";
    o.retries = 2;
    o.backoff = std::chrono::milliseconds(1);
    o.request_timeout = std::chrono::milliseconds(5000);
    return o;
}

} // namespace

TEST(Mock, DigestEntryBeatsRules)
{
    ScriptedMockBackend llm;
    const LlmRequest req{LlmStage::Adapt, "prompt text", {}};
    llm.add_rule({LlmStage::Adapt, {"prompt"}, "from rule"});
    EXPECT_EQ(llm.complete(req).text, "from rule");
    llm.add_entry(request_digest(req), "from entry");
    EXPECT_EQ(llm.complete(req).text, "from entry");
    EXPECT_EQ(llm.complete(req).input_tokens, estimate_tokens("prompt text"));
}

TEST(Mock, RulesMatchStageAndAllSubstrings)
{
    ScriptedMockBackend llm(json::parse(R"({
        "rules": [
            {"stage": "localize", "contains": ["alpha", "beta"], "response": "both"},
            {"stage": "localize", "contains": "alpha", "response": "alpha only"},
            {"response": "anything"}
        ]
    })"));
    EXPECT_EQ(llm.rule_count(), 3u);
    EXPECT_EQ(llm.complete({LlmStage::Localize, "alpha beta", {}}).text, "both");
    EXPECT_EQ(llm.complete({LlmStage::Localize, "alpha", {}}).text, "alpha only");
    EXPECT_EQ(llm.complete({LlmStage::Adapt, "alpha beta", {}}).text, "anything");
}

TEST(Mock, NoMatchIsLlmError)
{
    ScriptedMockBackend llm;
    EXPECT_THROW(llm.complete({LlmStage::Identify, "x", {}}), LlmError);
    EXPECT_THROW(ScriptedMockBackend(json::array()), ConfigError);
    EXPECT_THROW(ScriptedMockBackend::from_file("/nonexistent/transcript.json"), ConfigError);
}

TEST(Mock, FixtureTranscriptsLoad)
{
    for (const auto& c : test::manifest().cases) {
        const auto llm = ScriptedMockBackend::from_file(c.dir / "transcript.json");
        EXPECT_GT(llm.rule_count(), 0u) << c.name;
    }
}

TEST(Recording, ReplaysIdentically)
{
    ScriptedMockBackend inner;
    inner.add_rule({std::nullopt, {}, "answer"});
    RecordingBackend rec(inner);
    const LlmRequest a{LlmStage::Localize, "first", {}};
    const LlmRequest b{LlmStage::Adapt, "second", {}};
    rec.complete(a);
    rec.complete(b);
    const auto path = test::scratch_dir("recording") / "t.json";
    rec.save(path);

    const auto replay = ScriptedMockBackend::from_file(path);
    EXPECT_EQ(replay.entry_count(), 2u);
    EXPECT_EQ(replay.rule_count(), 0u);
    auto copy = replay;
    EXPECT_EQ(copy.complete(a).text, "answer");
    EXPECT_THROW(copy.complete({LlmStage::Adapt, "first", {}}), LlmError); // stage is part of the digest
}

TEST(Http, CompletesAndReportsUsage)
{
    FakeServer server(0, 200);
    ::setenv("EXMIG_TEST_API_KEY", "sk-test", 1);
    HttpChatBackend llm(options_for(server));
    const auto r = llm.complete({LlmStage::Adapt, "hello", {}});
    EXPECT_EQ(r.text, "echo:hello");
    EXPECT_EQ(r.input_tokens, 11);
    EXPECT_EQ(r.output_tokens, 5);
    EXPECT_EQ(server.last_auth(), "Bearer sk-test");
    ::unsetenv("EXMIG_TEST_API_KEY");
}

TEST(Http, RetriesTransientStatus)
{
    FakeServer server(2, 503);
    HttpChatBackend llm(options_for(server));
    EXPECT_EQ(llm.complete({LlmStage::Adapt, "x", {}}).text, "echo:x");
    EXPECT_EQ(server.calls(), 3);
}

TEST(Http, GivesUpAfterRetries)
{
    FakeServer server(10, 429);
    HttpChatBackend llm(options_for(server));
    EXPECT_THROW(llm.complete({LlmStage::Adapt, "x", {}}), LlmError);
    EXPECT_EQ(server.calls(), 3);
}

TEST(Http, ClientErrorIsNotRetried)
{
    FakeServer server(10, 401);
    ::unsetenv("EXMIG_TEST_API_KEY");
    HttpChatBackend llm(options_for(server));
    EXPECT_THROW(llm.complete({LlmStage::Adapt, "x", {}}), LlmError);
    EXPECT_EQ(server.calls(), 1);
    EXPECT_EQ(server.last_auth(), "");
}

TEST(Http, UnreachableEndpoint)
{
    HttpChatOptions o;
    o.url = "http://127.0.0.1:1/v1/chat/completions";
    o.retries = 1;
    o.backoff = std::chrono::milliseconds(1);
    o.request_timeout = std::chrono::milliseconds(500);
    HttpChatBackend llm(o);
    EXPECT_THROW(llm.complete({LlmStage::Adapt, "x", {}}), LlmError);
    o.url = "no-scheme";
    EXPECT_THROW(HttpChatBackend{o}, ConfigError);
}
