#pragma once

#include <exmig/annealing.hpp>
#include <exmig/context.hpp>
#include <exmig/exploit.hpp>
#include <exmig/llm.hpp>
#include <exmig/runners.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace exmig {

inline constexpr int kConfigSchemaVersion = 1;

struct AblationFlags {
    bool no_causing = false;
    bool no_supporting = false;
    bool no_annealing = false;
    bool no_combining = false;
};

struct LlmConfig {
    std::string backend = "mock"; // "mock" or "http"
    std::filesystem::path transcript;
    HttpChatOptions http;
};

/// Everything one migration run needs. See docs/config.md for the file format.
struct MigrationConfig {
    std::filesystem::path base_dir; // relative paths in the file resolve against this

    std::filesystem::path repo;
    std::vector<VersionRef> versions; // release order; ordinal = index
    std::vector<std::string> reproduced;
    std::vector<std::string> targets; // defaults to versions not in `reproduced`

    std::filesystem::path exploit_root;
    Exploit exploit;

    BuildAdapter adapter;
    LlmConfig llm;
    AnnealingParams annealing;
    ContextOptions context;
    AblationFlags ablation;

    double timeout_s = 300.0;
    int concurrency = 1;
    std::uint64_t seed = 0;
    int failure_default_steps = 30;
    std::filesystem::path scratch;
    std::optional<std::filesystem::path> diff_cache;
    bool keep_workspaces = false;

    static MigrationConfig load(const std::filesystem::path& path);
    static MigrationConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

    /// Throws ConfigError when the version sets are inconsistent.
    void validate() const;

    const VersionRef& version(const std::string& id) const;
    std::vector<VersionRef> reproduced_refs() const;
    std::vector<VersionRef> target_refs() const;

    /// Annealing parameters with the ablation flags applied.
    AnnealingParams effective_annealing() const;
};

} // namespace exmig
