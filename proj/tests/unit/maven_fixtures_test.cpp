#include <exmig/config.hpp>
#include <exmig/fixtures.hpp>
#include <exmig/runners.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

using namespace exmig;

// The Maven set is inert: it is never built here, only materialized and diffed.
namespace {

const FixtureManifest& maven_manifest()
{
    static const FixtureManifest m = FixtureManifest::load(test::fixtures_dir() / "maven" / "manifest.json");
    return m;
}

std::vector<DiffFile> version_diff(const std::string& name, MigrationConfig* out = nullptr)
{
    const auto mc =
        materialize(maven_manifest().find(name), test::fixtures_dir() / "maven", test::scratch_dir("maven-" + name));
    auto cfg = MigrationConfig::load(mc.config);
    auto diff = parse_unified_diff(
        compute_version_diff(cfg.repo, cfg.reproduced_refs().front(), cfg.target_refs().front()));
    if (out)
        *out = std::move(cfg);
    return diff;
}

} // namespace

TEST(MavenFixtures, MirrorTheToolchainFreeCases)
{
    std::set<std::string> kinds;
    for (const auto& c : maven_manifest().cases) {
        kinds.insert(c.kind);
        EXPECT_NO_THROW(test::manifest().find(c.name)) << c.name;
    }
    EXPECT_EQ(kinds.size(), 6u);
}

TEST(MavenFixtures, LoadWithMavenPreset)
{
    for (const auto& c : maven_manifest().cases) {
        MigrationConfig cfg;
        const auto diff = version_diff(c.name, &cfg);
        EXPECT_EQ(cfg.adapter.name, "maven") << c.name;
        EXPECT_EQ(cfg.exploit.entry, "src/test/java/ExploitTest.java");
        EXPECT_EQ(cfg.exploit.files.count("pom.xml"), 1u) << c.name;
        EXPECT_FALSE(diff.empty()) << c.name;
    }
}

TEST(MavenFixtures, DependencyBreakTouchesOnlyPom)
{
    const auto diff = version_diff("dependency-break");
    ASSERT_EQ(diff.size(), 1u);
    EXPECT_EQ(diff[0].path(), "pom.xml");
}

TEST(MavenFixtures, MethodRenameIsOneSourceHunk)
{
    const auto diff = version_diff("method-rename"); // plus the pom's own version bump
    ASSERT_EQ(diff.size(), 2u);
    EXPECT_EQ(diff[0].path(), "pom.xml");
    EXPECT_EQ(diff[1].path(), "src/main/java/toy/fs/PathUtils.java");
    EXPECT_EQ(diff[1].hunks.size(), 1u);
}
