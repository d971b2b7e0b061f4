#pragma once

#include <exmig/config.hpp>
#include <exmig/llm.hpp>
#include <exmig/report.hpp>

#include <cstdint>
#include <memory>
#include <string_view>

namespace exmig {

/// Seed for one search, derived from the run seed and stable labels.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Backend named by the config: the scripted mock (transcript required) or the HTTP client.
std::unique_ptr<LlmBackend> make_backend(const LlmConfig& config);

/// Run settings echoed into reports.
nlohmann::json report_settings(const MigrationConfig& config, const LlmBackend& llm);

class Migrator {
public:
    Migrator(const MigrationConfig& config, LlmBackend& llm);

    /// Migrate the exploit to one version. Never throws for per-version problems: those
    /// become an error verdict with a diagnostic.
    VersionReport migrate_version(const VersionRef& target);

    /// All configured targets, up to `config.concurrency` at a time.
    MigrationReport migrate_all();
    MigrationReport migrate(const std::vector<VersionRef>& targets);

private:
    const MigrationConfig& m_config;
    LlmBackend& m_llm;
};

} // namespace exmig
