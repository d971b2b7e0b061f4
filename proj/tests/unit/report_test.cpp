#include <exmig/errors.hpp>
#include <exmig/report.hpp>

#include <gtest/gtest.h>

using namespace exmig;

namespace {

VersionReport version(std::string id, Verdict verdict, int steps)
{
    VersionReport v;
    v.target = std::move(id);
    v.reference = "1.0";
    v.verdict = verdict;
    v.steps = steps;
    v.wall_time_s = 1.25;
    return v;
}

MigrationReport sample()
{
    MigrationReport r;
    r.settings = {{"seed", 7}};
    r.versions = {version("1.1", Verdict::Success, 5), version("1.2", Verdict::Success, 9),
                  version("1.3", Verdict::Failure, 15)};
    auto& v = r.versions[0];
    v.initial_indicators = {{"MissingMethod:abc", FailureKind::MissingMethod, Phase::Build, "cannot find symbol"}};
    SearchRecord s;
    s.id = "s1";
    s.indicator = v.initial_indicators[0];
    s.identifiers = {"check"};
    s.identifier_origin = "rule";
    s.causing = {{{"h1"}, 10, DiffOrigin::Cause}};
    s.termination = "resolved";
    s.resolved = true;
    v.searches = {s};
    AttemptRecord a;
    a.step = 1;
    a.search_id = "s1";
    a.candidate = {{"h1", "h2"}, 8.5, DiffOrigin::Combo};
    a.temperature = 10;
    a.localization = EditLocation{"src/T.java", 3, 4, false, ""};
    a.edited_files = {"src/T.java"};
    a.outcome = "fully_migrated";
    v.attempts = {a};
    v.reproduction = ReproductionCheck{true, true, {true}};
    v.final_files = {{"src/T.java", "class T {}\n"}};
    r.aggregate = aggregate(r.versions);
    return r;
}

} // namespace

TEST(Aggregate, FailuresCountAsDefaultSteps)
{
    const auto s = aggregate({version("a", Verdict::Success, 5), version("b", Verdict::Success, 9),
                              version("c", Verdict::Failure, 3)},
                             30);
    ASSERT_TRUE(s.average_steps);
    EXPECT_NEAR(*s.average_steps, 44.0 / 3.0, 1e-9);
    EXPECT_NEAR(*s.average_steps, 14.67, 0.005);
    EXPECT_NEAR(*s.success_rate, 2.0 / 3.0, 1e-12);
    EXPECT_EQ(s.failures, 1u);

    const auto errors = aggregate({version("a", Verdict::Error, 0)}, 12);
    EXPECT_EQ(errors.errors, 1u);
    EXPECT_DOUBLE_EQ(*errors.average_steps, 12.0);
}

TEST(Aggregate, EmptyHasNoRates)
{
    const auto s = aggregate({});
    EXPECT_EQ(s.targets, 0u);
    EXPECT_FALSE(s.success_rate);
    EXPECT_FALSE(s.average_steps);
    const auto doc = to_json(MigrationReport{});
    EXPECT_FALSE(doc.at("aggregate").contains("average_steps"));
    EXPECT_FALSE(doc.at("aggregate").contains("success_rate"));
}

TEST(ReportJson, RoundTrips)
{
    const auto r = sample();
    const auto text = dump_report(r);
    const auto back = report_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(dump_report(back), text);
    EXPECT_EQ(back.versions[0].attempts[0].candidate.origin, DiffOrigin::Combo);
    EXPECT_EQ(back.versions[0].attempts[0].localization->last_line, 4);
    EXPECT_TRUE(back.versions[0].reproduction->ok());
}

TEST(ReportJson, WallTimeOnlyOnRequest)
{
    const auto r = sample();
    EXPECT_EQ(dump_report(r).find("wall_time_s"), std::string::npos);
    EXPECT_NE(dump_report(r, true).find("wall_time_s"), std::string::npos);
    EXPECT_EQ(dump_report(r), dump_report(r));
    EXPECT_EQ(dump_report(r).back(), '\n');
}

TEST(ReportJson, RejectsBadDocuments)
{
    EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"schema_version": 99, "versions": []})")), ConfigError);
    EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"versions": []})")), ConfigError);
    EXPECT_THROW(report_from_json(nlohmann::json::parse(
                     R"({"schema_version": 1, "versions": [{"target": "x", "verdict": "maybe", "steps": 0}]})")),
                 ConfigError);
}

TEST(Summary, Table)
{
    const auto text = render_summary(sample());
    EXPECT_NE(text.find("1.1"), std::string::npos);
    EXPECT_NE(text.find("success rate: 66.7%, average steps: 14.67"), std::string::npos);
    EXPECT_NE(text.find("wall_s"), std::string::npos);
    EXPECT_EQ(render_summary(sample(), false).find("wall_s"), std::string::npos);
    EXPECT_EQ(render_summary(MigrationReport{}).find("success rate"), std::string::npos);
}
