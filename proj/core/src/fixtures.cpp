#include <exmig/errors.hpp>
#include <exmig/fixtures.hpp>
#include <exmig/process.hpp>

#include <fstream>

namespace exmig {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace std::chrono_literals;

FixtureManifest FixtureManifest::load(const fs::path& manifest_path)
{
    std::ifstream in(manifest_path);
    if (!in)
        throw ConfigError("cannot read fixture manifest " + manifest_path.string());
    FixtureManifest m;
    m.root = fs::absolute(manifest_path).parent_path();
    try {
        const json doc = json::parse(in);
        for (const auto& c : doc.at("cases")) {
            FixtureCase fc;
            fc.name = c.at("name").get<std::string>();
            fc.kind = c.at("kind").get<std::string>();
            fc.dir = m.root / c.at("dir").get<std::string>();
            for (const auto& v : c.at("versions"))
                fc.versions.push_back({v.at("id").get<std::string>(), v.at("tree").get<std::string>()});
            fc.reproduced = c.at("reproduced").get<std::vector<std::string>>();
            fc.targets = c.at("targets").get<std::vector<std::string>>();
            fc.entry = c.value("entry", "src/ExploitTest.java");
            fc.assertion_test = c.at("assertion").at("test").get<std::string>();
            fc.assertion_message = c.at("assertion").at("message").get<std::string>();
            fc.markers = c.value("markers", std::vector<std::string>{});
            fc.config_overrides = c.value("config", json::object());
            const auto& e = c.at("expected");
            fc.expected.verdict = parse_verdict(e.at("verdict").get<std::string>());
            fc.expected.max_steps = e.value("max_steps", 15);
            if (e.contains("initial_kind"))
                fc.expected.initial_kind = parse_failure_kind(e.at("initial_kind").get<std::string>());
            fc.expected.edited_lines = e.value("edited_lines", std::vector<std::string>{});
            fc.expected.termination = e.value("termination", "");
            m.cases.push_back(std::move(fc));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed fixture manifest: " + std::string(e.what()));
    }
    return m;
}

const FixtureCase& FixtureManifest::find(const std::string& name) const
{
    for (const auto& c : cases)
        if (c.name == name)
            return c;
    throw ConfigError("no fixture case named '" + name + "'");
}

namespace {

void sh(const std::string& command, const fs::path& cwd)
{
    const std::map<std::string, std::string> env{
        {"GIT_AUTHOR_NAME", "fixture"},          {"GIT_AUTHOR_EMAIL", "fixture@example.invalid"},
        {"GIT_COMMITTER_NAME", "fixture"},       {"GIT_COMMITTER_EMAIL", "fixture@example.invalid"},
        {"GIT_AUTHOR_DATE", "2020-01-01T00:00:00Z"}, {"GIT_COMMITTER_DATE", "2020-01-01T00:00:00Z"},
        {"GIT_CONFIG_NOSYSTEM", "1"},             {"HOME", cwd.string()},
    };
    const auto r = run_process(command, cwd, 60s, env);
    if (r.timed_out || r.exit_code != 0)
        throw EnvironmentError("fixture setup failed: " + command + "\n" + r.output);
}

void copy_tree(const fs::path& from, const fs::path& to)
{
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

} // namespace

MaterializedCase materialize(const FixtureCase& fixture, const fs::path& fixtures_root, const fs::path& scratch)
{
    MaterializedCase out;
    out.root = fs::absolute(scratch) / fixture.name;
    out.repo = out.root / "repo";
    out.exploit = out.root / "exploit";
    out.config = out.root / "config.json";

    std::error_code ec;
    fs::remove_all(out.root, ec);
    fs::create_directories(out.repo, ec);
    if (ec)
        throw EnvironmentError("cannot create fixture scratch " + out.root.string() + ": " + ec.message());

    const fs::path toolchain = fixtures_root / "toolchain";
    sh("git init -q . && git config user.name fixture && git config user.email fixture@example.invalid", out.repo);
    for (const auto& v : fixture.versions) {
        for (const auto& entry : fs::directory_iterator(out.repo))
            if (entry.path().filename() != ".git")
                fs::remove_all(entry.path());
        copy_tree(fixture.dir / v.tree, out.repo);
        if (fs::exists(toolchain))
            copy_tree(toolchain, out.repo);
        sh("git add -A && git commit -q --allow-empty -m " + shell_quote("release " + v.id) + " && git tag " +
               shell_quote(v.id),
           out.repo);
    }
    copy_tree(fixture.dir / "exploit", out.exploit);

    json versions = json::array();
    for (const auto& v : fixture.versions)
        versions.push_back({{"id", v.id}, {"ref", v.id}});
    json config = {
        {"schema_version", 1},
        {"library", {{"repo", "repo"}, {"versions", versions}}},
        {"reproduced", fixture.reproduced},
        {"targets", fixture.targets},
        {"exploit",
         {{"root", "exploit"},
          {"entry", fixture.entry},
          {"assertion", {{"test", fixture.assertion_test}, {"message", fixture.assertion_message}}},
          {"markers", fixture.markers}}},
        {"adapter",
         {{"preset", "generic"},
          {"commands",
           {{"resolve", "sh lib/toybuild.sh resolve"},
            {"build", "sh lib/toybuild.sh build"},
            {"test", "sh lib/toybuild.sh test"}}},
          {"rules", "maven"}}},
        {"llm", {{"backend", "mock"}, {"transcript", (fixture.dir / "transcript.json").string()}}},
        {"seed", 7},
        {"timeout_s", 60},
        {"scratch", "work"},
        {"diff_cache", "diff-cache"},
    };
    config.merge_patch(fixture.config_overrides);

    std::ofstream f(out.config);
    if (!f)
        throw EnvironmentError("cannot write " + out.config.string());
    f << config.dump(2) << '\n';
    return out;
}

} // namespace exmig
