#pragma once

#include <exmig/exploit.hpp>
#include <exmig/failure.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace exmig {

struct VersionRef {
    std::string id;
    std::string source_ref;
    int ordinal = 0;

    friend bool operator==(const VersionRef&, const VersionRef&) = default;
};

/// Nearest reproduced version by release-order distance; ties go to the later version.
VersionRef select_reference_version(const std::vector<VersionRef>& reproduced, const VersionRef& target);

// ---------------------------------------------------------------------------
// Version control

/// Commit id for `ref`, or ConfigError naming the ref.
std::string resolve_ref(const std::filesystem::path& repo, const std::string& ref);

/// Content-addressed store of computed diffs.
class DiffCache {
public:
    explicit DiffCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text) const;
    const std::filesystem::path& dir() const { return m_dir; }

private:
    std::filesystem::path m_dir;
};

/// `git diff` (3 context lines, no rename detection) of the whole tree between two refs.
std::string compute_version_diff(const std::filesystem::path& repo, const VersionRef& from, const VersionRef& to,
                                 const DiffCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Build adapters and workspaces

/// Toolchain description. Command templates may use {workspace}, {lib}, {exploit},
/// {version} and {artifact}; they run with the workspace root as working directory.
struct BuildAdapter {
    std::string name = "generic";
    std::string resolve;
    std::string set_version;
    std::string build;
    std::string test;
    std::string artifact;
    /// Copy the library tree at the version's ref into {lib} before running.
    bool checkout_library = true;
    /// Structured test report, relative to the workspace; the file name may hold '*' and '?'.
    std::string report_glob = "exploit/target/surefire-reports/TEST-*.xml";
    /// Regex over the build log that marks a failed build even when the exit status is 0.
    std::string build_failure_pattern;
    ClassifierRuleSet rules;
    std::vector<std::string> manifest_files{"pom.xml", "build.gradle", "build.gradle.kts", "manifest.txt", "deps.txt"};

    static BuildAdapter maven();
    static BuildAdapter generic();

    std::string expand(const std::string& command, const std::filesystem::path& workspace,
                       const VersionRef& version) const;
};

/// One disposable directory per run: {root}/lib and {root}/exploit.
class Workspace {
public:
    /// Create (or recreate, emptied) a workspace at `root`.
    static Workspace create(const std::filesystem::path& root);

    const std::filesystem::path& root() const { return m_root; }
    std::filesystem::path lib_dir() const { return m_root / "lib"; }
    std::filesystem::path exploit_dir() const { return m_root / "exploit"; }

    void checkout_library(const std::filesystem::path& repo, const VersionRef& version) const;
    /// Replace the exploit directory's content with `exploit`.
    void write_exploit(const Exploit& exploit) const;
    void remove() const;

private:
    explicit Workspace(std::filesystem::path root) : m_root(std::move(root)) {}
    std::filesystem::path m_root;
};

/// Parse a JUnit/surefire XML report. Picks the first failing or erroring test case,
/// else the first test case.
std::optional<AssertionReport> parse_surefire_xml(std::string_view xml);

/// Run resolve/set-version/build, then test, within `timeout` overall.
ExecutionOutput run_exploit(const Workspace& workspace, const BuildAdapter& adapter, const VersionRef& version,
                            std::chrono::milliseconds timeout);

} // namespace exmig
