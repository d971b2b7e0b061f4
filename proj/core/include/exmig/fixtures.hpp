#pragma once

#include <exmig/failure.hpp>
#include <exmig/report.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace exmig {

struct FixtureVersion {
    std::string id;
    std::string tree; // directory under the case directory
};

struct FixtureExpectation {
    Verdict verdict = Verdict::Success;
    int max_steps = 15;
    std::optional<FailureKind> initial_kind; // kind of the first indicator before migration
    std::vector<std::string> edited_lines;   // lines the migrated entry file must contain
    std::string termination;                 // expected termination of the first search, if set
};

struct FixtureCase {
    std::string name;
    std::string kind; // planted change kind
    std::filesystem::path dir;
    std::vector<FixtureVersion> versions;
    std::vector<std::string> reproduced;
    std::vector<std::string> targets;
    std::string entry;
    std::string assertion_test;
    std::string assertion_message;
    std::vector<std::string> markers;
    nlohmann::json config_overrides = nlohmann::json::object();
    FixtureExpectation expected;
};

struct FixtureManifest {
    std::filesystem::path root;
    std::vector<FixtureCase> cases;

    static FixtureManifest load(const std::filesystem::path& manifest_path);
    const FixtureCase& find(const std::string& name) const;
};

struct MaterializedCase {
    std::filesystem::path root;
    std::filesystem::path repo;
    std::filesystem::path exploit;
    std::filesystem::path config;
};

/// Build a git repository with one tagged commit per version (each tree plus the toy
/// toolchain), copy the exploit, and write a config for the generic adapter.
MaterializedCase materialize(const FixtureCase& fixture, const std::filesystem::path& fixtures_root,
                             const std::filesystem::path& scratch);

} // namespace exmig
