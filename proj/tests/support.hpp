#pragma once

#include <exmig/config.hpp>
#include <exmig/fixtures.hpp>
#include <exmig/orchestrator.hpp>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

namespace exmig::test {

inline std::filesystem::path fixtures_dir()
{
    return EXMIG_FIXTURES_DIR;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

/// Fresh, empty directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::path(EXMIG_TEST_SCRATCH) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline const FixtureManifest& manifest()
{
    static const FixtureManifest m = FixtureManifest::load(fixtures_dir() / "manifest.json");
    return m;
}

inline MaterializedCase materialize_case(const std::string& name, const std::string& scratch)
{
    return materialize(manifest().find(name), fixtures_dir(), scratch_dir(scratch));
}

/// Materialize a fixture case and migrate its targets with the mock backend.
inline MigrationReport run_fixture(const std::string& name, const std::string& scratch,
                                   const std::function<void(MigrationConfig&)>& adjust = {})
{
    const auto mc = materialize_case(name, scratch);
    auto cfg = MigrationConfig::load(mc.config);
    if (adjust)
        adjust(cfg);
    auto llm = make_backend(cfg.llm);
    return Migrator(cfg, *llm).migrate(cfg.target_refs());
}

} // namespace exmig::test
