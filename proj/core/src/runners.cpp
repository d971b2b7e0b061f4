#include <exmig/errors.hpp>
#include <exmig/hash.hpp>
#include <exmig/process.hpp>
#include <exmig/runners.hpp>

#include <algorithm>
#include <cstdlib>
#include <fnmatch.h>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace exmig {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

VersionRef select_reference_version(const std::vector<VersionRef>& reproduced, const VersionRef& target)
{
    if (reproduced.empty())
        throw ConfigError("no reproduced version to migrate from");
    const VersionRef* best = nullptr;
    int best_dist = 0;
    for (const auto& v : reproduced) {
        const int dist = std::abs(v.ordinal - target.ordinal);
        if (!best || dist < best_dist || (dist == best_dist && v.ordinal > best->ordinal)) {
            best = &v;
            best_dist = dist;
        }
    }
    return *best;
}

// ---------------------------------------------------------------------------

namespace {

std::string git(const fs::path& repo, const std::string& args, int* exit_code = nullptr)
{
    const auto r = run_process("git -c core.quotePath=false -C " + shell_quote(repo.string()) + " " + args +
                                   " 2>/dev/null",
                               {}, 120s);
    if (r.timed_out)
        throw EnvironmentError("git timed out: git " + args);
    if (exit_code)
        *exit_code = r.exit_code;
    else if (r.exit_code != 0)
        throw EnvironmentError("git " + args + " failed with status " + std::to_string(r.exit_code));
    return r.output;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::string resolve_ref(const fs::path& repo, const std::string& ref)
{
    if (!fs::exists(repo))
        throw ConfigError("library repository not found: " + repo.string());
    int code = 0;
    auto out = git(repo, "rev-parse --verify --quiet " + shell_quote(ref + "^{commit}"), &code);
    if (code != 0)
        throw ConfigError("unknown ref '" + ref + "' in " + repo.string());
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r'))
        out.pop_back();
    return out;
}

DiffCache::DiffCache(fs::path dir)
    : m_dir(std::move(dir))
{
    std::error_code ec;
    fs::create_directories(m_dir, ec);
    if (ec)
        throw EnvironmentError("cannot create diff cache " + m_dir.string() + ": " + ec.message());
}

std::optional<std::string> DiffCache::get(const std::string& key) const
{
    const auto path = m_dir / (key + ".diff");
    if (!fs::exists(path))
        return std::nullopt;
    return read_file(path);
}

void DiffCache::put(const std::string& key, const std::string& text) const
{
    const auto final_path = m_dir / (key + ".diff");
    const auto tmp = m_dir / (key + ".diff.tmp" + std::to_string(::getpid()) + "-" +
                              std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw EnvironmentError("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, final_path);
}

std::string compute_version_diff(const fs::path& repo, const VersionRef& from, const VersionRef& to,
                                 const DiffCache* cache)
{
    const auto from_commit = resolve_ref(repo, from.source_ref);
    const auto to_commit = resolve_ref(repo, to.source_ref);
    const auto key = sha256_hex(fs::weakly_canonical(repo).string() + "\n" + from_commit + "\n" + to_commit);
    if (cache)
        if (auto hit = cache->get(key))
            return *hit;
    auto text = git(repo, "diff --no-renames --no-color --no-ext-diff -U3 " + from_commit + " " + to_commit);
    if (cache)
        cache->put(key, text);
    return text;
}

// ---------------------------------------------------------------------------

BuildAdapter BuildAdapter::maven()
{
    BuildAdapter a;
    a.name = "maven";
    a.resolve = "cd {exploit} && mvn -B -q dependency:resolve";
    a.set_version = "cd {exploit} && mvn -B -q versions:set-property -Dproperty={artifact}.version "
                    "-DnewVersion={version} -DgenerateBackupPoms=false";
    a.build = "cd {exploit} && mvn -B test-compile";
    a.test = "cd {exploit} && mvn -B test";
    a.checkout_library = false;
    a.report_glob = "exploit/target/surefire-reports/TEST-*.xml";
    a.rules = ClassifierRuleSet::maven();
    a.manifest_files = {"pom.xml"};
    return a;
}

BuildAdapter BuildAdapter::generic()
{
    BuildAdapter a;
    a.name = "generic";
    a.rules = ClassifierRuleSet::maven();
    return a;
}

std::string BuildAdapter::expand(const std::string& command, const fs::path& workspace,
                                 const VersionRef& version) const
{
    const std::pair<std::string, std::string> vars[] = {
        {"{workspace}", shell_quote(workspace.string())},
        {"{lib}", shell_quote((workspace / "lib").string())},
        {"{exploit}", shell_quote((workspace / "exploit").string())},
        {"{version}", shell_quote(version.id)},
        {"{artifact}", artifact},
    };
    std::string out = command;
    for (const auto& [name, value] : vars) {
        std::size_t pos = 0;
        while ((pos = out.find(name, pos)) != std::string::npos) {
            out.replace(pos, name.size(), value);
            pos += value.size();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

Workspace Workspace::create(const fs::path& root)
{
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root / "lib", ec);
    if (!ec)
        fs::create_directories(root / "exploit", ec);
    if (ec)
        throw EnvironmentError("cannot create workspace " + root.string() + ": " + ec.message());
    return Workspace(fs::absolute(root));
}

void Workspace::checkout_library(const fs::path& repo, const VersionRef& version) const
{
    const auto commit = resolve_ref(repo, version.source_ref);
    std::error_code ec;
    fs::remove_all(lib_dir(), ec);
    fs::create_directories(lib_dir());
    const auto r = run_process("git -C " + shell_quote(fs::absolute(repo).string()) + " archive --format=tar " +
                                   commit + " | tar -x -C " + shell_quote(lib_dir().string()),
                               {}, 120s);
    if (r.timed_out || r.exit_code != 0)
        throw EnvironmentError("cannot check out " + version.source_ref + ": " + r.output);
}

void Workspace::write_exploit(const Exploit& exploit) const
{
    std::error_code ec;
    fs::remove_all(exploit_dir(), ec);
    fs::create_directories(exploit_dir());
    exploit.write_to(exploit_dir());
}

void Workspace::remove() const
{
    std::error_code ec;
    fs::remove_all(m_root, ec);
}

// ---------------------------------------------------------------------------

namespace {

std::string xml_unescape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos) {
            out += s[i];
            continue;
        }
        auto ent = s.substr(i + 1, semi - i - 1);
        if (ent == "lt")
            out += '<';
        else if (ent == "gt")
            out += '>';
        else if (ent == "amp")
            out += '&';
        else if (ent == "quot")
            out += '"';
        else if (ent == "apos")
            out += '\'';
        else if (ent.size() > 1 && ent[0] == '#') {
            const bool hex = ent[1] == 'x' || ent[1] == 'X';
            const long code = std::strtol(std::string(ent.substr(hex ? 2 : 1)).c_str(), nullptr, hex ? 16 : 10);
            if (code > 0 && code < 128)
                out += static_cast<char>(code);
        } else {
            out.append(s.substr(i, semi - i + 1));
        }
        i = semi;
    }
    return out;
}

std::string attribute(std::string_view tag, std::string_view name)
{
    std::size_t pos = 0;
    while ((pos = tag.find(name, pos)) != std::string_view::npos) {
        const bool boundary = pos == 0 || tag[pos - 1] == ' ' || tag[pos - 1] == '\t' || tag[pos - 1] == '\n';
        auto eq = pos + name.size();
        while (eq < tag.size() && (tag[eq] == ' ' || tag[eq] == '\t'))
            ++eq;
        if (boundary && eq < tag.size() && tag[eq] == '=') {
            auto q = tag.find_first_of("\"'", eq);
            if (q == std::string_view::npos)
                return {};
            auto end = tag.find(tag[q], q + 1);
            if (end == std::string_view::npos)
                return {};
            return xml_unescape(tag.substr(q + 1, end - q - 1));
        }
        pos += name.size();
    }
    return {};
}

std::string element_text(std::string_view body)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < body.size()) {
        auto cdata = body.find("<![CDATA[", pos);
        if (cdata == std::string_view::npos) {
            out += xml_unescape(body.substr(pos));
            break;
        }
        out += xml_unescape(body.substr(pos, cdata - pos));
        auto end = body.find("]]>", cdata);
        if (end == std::string_view::npos)
            end = body.size();
        out.append(body.substr(cdata + 9, end - cdata - 9));
        pos = end + 3;
    }
    return out;
}

std::optional<SourceLocation> frame_for(const std::string& stack, const std::string& test_class)
{
    static const std::regex frame(R"(at ([\w$.]+)\.([\w$<>]+)\(([\w$]+\.\w+):(\d+)\))");
    std::optional<SourceLocation> first;
    std::istringstream in(stack);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_search(line, m, frame))
            continue;
        SourceLocation loc{m[3].str(), std::stoi(m[4].str())};
        if (m[1].str() == test_class || m[1].str().ends_with("." + test_class))
            return loc;
        if (!first)
            first = loc;
    }
    return first;
}

} // namespace

std::optional<AssertionReport> parse_surefire_xml(std::string_view xml)
{
    std::optional<AssertionReport> first;
    std::size_t pos = 0;
    while ((pos = xml.find("<testcase", pos)) != std::string_view::npos) {
        const auto tag_end = xml.find('>', pos);
        if (tag_end == std::string_view::npos)
            break;
        const auto tag = xml.substr(pos, tag_end - pos);
        const bool self_closing = tag.ends_with("/");
        std::string_view body;
        std::size_t next = tag_end + 1;
        if (!self_closing) {
            const auto close = xml.find("</testcase>", tag_end);
            body = xml.substr(tag_end + 1, (close == std::string_view::npos ? xml.size() : close) - tag_end - 1);
            next = close == std::string_view::npos ? xml.size() : close + 11;
        }

        AssertionReport report;
        report.test_method = attribute(tag, "name");
        report.test_class = attribute(tag, "classname");
        if (auto dot = report.test_class.find_last_of('.'); dot != std::string::npos)
            report.test_class = report.test_class.substr(dot + 1);

        for (const auto& [element, outcome] :
             {std::pair{std::string_view("<failure"), AssertionReport::Outcome::Failure},
              std::pair{std::string_view("<error"), AssertionReport::Outcome::Error}}) {
            const auto at = body.find(element);
            if (at == std::string_view::npos)
                continue;
            const auto el_end = body.find('>', at);
            if (el_end == std::string_view::npos)
                continue;
            const auto el_tag = body.substr(at, el_end - at);
            report.outcome = outcome;
            report.message = attribute(el_tag, "message");
            report.type = attribute(el_tag, "type");
            if (!el_tag.ends_with("/")) {
                const std::string closing = "</" + std::string(element.substr(1)) + ">";
                const auto close = body.find(closing, el_end);
                report.stack = element_text(
                    body.substr(el_end + 1, (close == std::string_view::npos ? body.size() : close) - el_end - 1));
            }
            report.location = frame_for(report.stack, report.test_class);
            break;
        }
        if (report.outcome != AssertionReport::Outcome::Passed)
            return report;
        if (!first)
            first = std::move(report);
        pos = next;
    }
    return first;
}

namespace {

std::optional<AssertionReport> find_report(const fs::path& workspace, const std::string& glob)
{
    if (glob.empty())
        return std::nullopt;
    const fs::path pattern = workspace / glob;
    const auto dir = pattern.parent_path();
    const auto name = pattern.filename().string();
    if (!fs::is_directory(dir))
        return std::nullopt;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && fnmatch(name.c_str(), e.path().filename().c_str(), 0) == 0)
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::optional<AssertionReport> first;
    for (const auto& f : files) {
        auto r = parse_surefire_xml(read_file(f));
        if (r && r->outcome != AssertionReport::Outcome::Passed)
            return r;
        if (r && !first)
            first = std::move(r);
    }
    return first;
}

} // namespace

ExecutionOutput run_exploit(const Workspace& workspace, const BuildAdapter& adapter, const VersionRef& version,
                            std::chrono::milliseconds timeout)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto deadline = start + timeout;
    auto remaining = [&] {
        return std::max(1ms, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()));
    };

    ExecutionOutput out;
    auto finish = [&] {
        out.duration_s = std::chrono::duration<double>(clock::now() - start).count();
        return out;
    };

    std::string build_log;
    for (const auto* command : {&adapter.resolve, &adapter.set_version, &adapter.build}) {
        if (command->empty())
            continue;
        if (clock::now() >= deadline) {
            out.phases.push_back({Phase::Build, PhaseStatus::Timeout, build_log});
            return finish();
        }
        const auto r = run_process(adapter.expand(*command, workspace.root(), version), workspace.root(), remaining());
        build_log += r.output;
        out.exit_status = r.exit_code;
        if (r.timed_out) {
            out.phases.push_back({Phase::Build, PhaseStatus::Timeout, build_log});
            return finish();
        }
        if (r.exit_code != 0) {
            out.phases.push_back({Phase::Build, PhaseStatus::Failed, build_log});
            return finish();
        }
    }
    if (!adapter.build_failure_pattern.empty() &&
        std::regex_search(build_log, std::regex(adapter.build_failure_pattern))) {
        out.phases.push_back({Phase::Build, PhaseStatus::Failed, build_log});
        return finish();
    }
    out.phases.push_back({Phase::Build, PhaseStatus::Ok, build_log});

    if (adapter.test.empty())
        return finish();
    if (clock::now() >= deadline) {
        out.phases.push_back({Phase::Runtime, PhaseStatus::Timeout, {}});
        return finish();
    }
    const auto r = run_process(adapter.expand(adapter.test, workspace.root(), version), workspace.root(), remaining());
    out.exit_status = r.exit_code;
    if (r.timed_out) {
        out.phases.push_back({Phase::Runtime, PhaseStatus::Timeout, r.output});
        return finish();
    }
    out.report = find_report(workspace.root(), adapter.report_glob);
    const bool runtime_failed =
        out.report ? out.report->outcome == AssertionReport::Outcome::Error : r.exit_code != 0;
    if (runtime_failed) {
        out.phases.push_back({Phase::Runtime, PhaseStatus::Failed, r.output});
        return finish();
    }
    out.phases.push_back({Phase::Runtime, PhaseStatus::Ok, r.output});
    out.phases.push_back({Phase::Assertion, out.report ? PhaseStatus::Ok : PhaseStatus::Failed, {}});
    return finish();
}

} // namespace exmig
