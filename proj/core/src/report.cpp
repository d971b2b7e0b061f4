#include <exmig/errors.hpp>
#include <exmig/report.hpp>

#include <cstdio>
#include <sstream>

namespace exmig {

using nlohmann::json;

std::string_view to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::Success: return "success";
    case Verdict::Failure: return "failure";
    case Verdict::Error: return "error";
    }
    return "error";
}

Verdict parse_verdict(std::string_view text)
{
    if (text == "success")
        return Verdict::Success;
    if (text == "failure")
        return Verdict::Failure;
    if (text == "error")
        return Verdict::Error;
    throw ConfigError("unknown verdict '" + std::string(text) + "'");
}

AggregateStats aggregate(const std::vector<VersionReport>& versions, int failure_default_steps)
{
    AggregateStats s;
    s.failure_default_steps = failure_default_steps;
    s.targets = versions.size();
    double total_steps = 0.0;
    for (const auto& v : versions) {
        switch (v.verdict) {
        case Verdict::Success:
            ++s.successes;
            total_steps += v.steps;
            break;
        case Verdict::Failure:
            ++s.failures;
            total_steps += failure_default_steps;
            break;
        case Verdict::Error:
            ++s.errors;
            total_steps += failure_default_steps;
            break;
        }
    }
    if (s.targets > 0) {
        s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.targets);
        s.average_steps = total_steps / static_cast<double>(s.targets);
    }
    return s;
}

// ---------------------------------------------------------------------------

namespace {

json candidate_json(const CandidateRecord& c)
{
    return {{"hunk_ids", c.hunk_ids}, {"score", c.score}, {"origin", to_string(c.origin)}};
}

CandidateRecord candidate_from(const json& j)
{
    CandidateRecord c;
    c.hunk_ids = j.at("hunk_ids").get<std::vector<std::string>>();
    c.score = j.at("score").get<double>();
    const auto origin = j.at("origin").get<std::string>();
    c.origin = origin == "support" ? DiffOrigin::Support : origin == "combo" ? DiffOrigin::Combo : DiffOrigin::Cause;
    return c;
}

json candidates_json(const std::vector<CandidateRecord>& list)
{
    json arr = json::array();
    for (const auto& c : list)
        arr.push_back(candidate_json(c));
    return arr;
}

std::vector<CandidateRecord> candidates_from(const json& j)
{
    std::vector<CandidateRecord> out;
    for (const auto& c : j)
        out.push_back(candidate_from(c));
    return out;
}

json indicator_json(const IndicatorRecord& r)
{
    return {{"fingerprint", r.fingerprint},
            {"kind", to_string(r.kind)},
            {"phase", to_string(r.phase)},
            {"message", r.message}};
}

Phase parse_phase(const std::string& s)
{
    if (s == "runtime")
        return Phase::Runtime;
    if (s == "assertion")
        return Phase::Assertion;
    return Phase::Build;
}

IndicatorRecord indicator_from(const json& j)
{
    return IndicatorRecord{j.at("fingerprint").get<std::string>(), parse_failure_kind(j.at("kind").get<std::string>()),
                           parse_phase(j.at("phase").get<std::string>()), j.at("message").get<std::string>()};
}

json indicators_json(const std::vector<IndicatorRecord>& list)
{
    json arr = json::array();
    for (const auto& r : list)
        arr.push_back(indicator_json(r));
    return arr;
}

std::vector<IndicatorRecord> indicators_from(const json& j)
{
    std::vector<IndicatorRecord> out;
    for (const auto& r : j)
        out.push_back(indicator_from(r));
    return out;
}

json version_json(const VersionReport& v, bool include_wall_time)
{
    json searches = json::array();
    for (const auto& s : v.searches) {
        searches.push_back({
            {"id", s.id},
            {"depth", s.depth},
            {"indicator", indicator_json(s.indicator)},
            {"identifiers", s.identifiers},
            {"identifier_origin", s.identifier_origin},
            {"causing", candidates_json(s.causing)},
            {"supporting", candidates_json(s.supporting)},
            {"fallback", candidates_json(s.fallback)},
            {"termination", s.termination},
            {"resolved", s.resolved},
        });
    }
    json attempts = json::array();
    for (const auto& a : v.attempts) {
        json loc = nullptr;
        if (a.localization)
            loc = {{"file", a.localization->file},
                   {"first_line", a.localization->first_line},
                   {"last_line", a.localization->last_line},
                   {"clamped", a.localization->clamped},
                   {"warning", a.localization->warning}};
        attempts.push_back({
            {"step", a.step},
            {"search_id", a.search_id},
            {"depth", a.depth},
            {"candidate", candidate_json(a.candidate)},
            {"probability", a.probability},
            {"candidates", a.candidates},
            {"temperature", a.temperature},
            {"exploration_depth", a.exploration_depth},
            {"localization", loc},
            {"edited_files", a.edited_files},
            {"input_tokens", a.input_tokens},
            {"output_tokens", a.output_tokens},
            {"outcome", a.outcome},
            {"emergent", a.emergent},
            {"note", a.note},
        });
    }
    json doc = {
        {"target", v.target},
        {"reference", v.reference},
        {"verdict", to_string(v.verdict)},
        {"diagnostic", v.diagnostic},
        {"timed_out", v.timed_out},
        {"steps", v.steps},
        {"initial_indicators", indicators_json(v.initial_indicators)},
        {"remaining_indicators", indicators_json(v.remaining_indicators)},
        {"searches", searches},
        {"attempts", attempts},
        {"tokens", {{"input", v.input_tokens}, {"output", v.output_tokens}}},
        {"final_files", v.final_files},
    };
    if (v.reproduction)
        doc["reproduction"] = {{"assertion_matched", v.reproduction->assertion_matched},
                               {"assertion_location_matched", v.reproduction->assertion_location_matched},
                               {"markers_matched", v.reproduction->markers_matched},
                               {"ok", v.reproduction->ok()}};
    else
        doc["reproduction"] = nullptr;
    if (include_wall_time)
        doc["wall_time_s"] = v.wall_time_s;
    return doc;
}

VersionReport version_from(const json& j)
{
    VersionReport v;
    v.target = j.at("target").get<std::string>();
    v.reference = j.value("reference", "");
    v.verdict = parse_verdict(j.at("verdict").get<std::string>());
    v.diagnostic = j.value("diagnostic", "");
    v.timed_out = j.value("timed_out", false);
    v.steps = j.at("steps").get<int>();
    v.initial_indicators = indicators_from(j.value("initial_indicators", json::array()));
    v.remaining_indicators = indicators_from(j.value("remaining_indicators", json::array()));
    for (const auto& s : j.value("searches", json::array())) {
        SearchRecord r;
        r.id = s.at("id").get<std::string>();
        r.depth = s.value("depth", 0);
        r.indicator = indicator_from(s.at("indicator"));
        r.identifiers = s.value("identifiers", std::vector<std::string>{});
        r.identifier_origin = s.value("identifier_origin", "");
        r.causing = candidates_from(s.value("causing", json::array()));
        r.supporting = candidates_from(s.value("supporting", json::array()));
        r.fallback = candidates_from(s.value("fallback", json::array()));
        r.termination = s.value("termination", "");
        r.resolved = s.value("resolved", false);
        v.searches.push_back(std::move(r));
    }
    for (const auto& a : j.value("attempts", json::array())) {
        AttemptRecord r;
        r.step = a.at("step").get<int>();
        r.search_id = a.value("search_id", "");
        r.depth = a.value("depth", 0);
        r.candidate = candidate_from(a.at("candidate"));
        r.probability = a.value("probability", 1.0);
        r.candidates = a.value("candidates", std::size_t{0});
        r.temperature = a.value("temperature", 0.0);
        r.exploration_depth = a.value("exploration_depth", 1);
        if (a.contains("localization") && !a.at("localization").is_null()) {
            const auto& l = a.at("localization");
            r.localization = EditLocation{l.at("file").get<std::string>(), l.at("first_line").get<int>(),
                                          l.at("last_line").get<int>(), l.value("clamped", false),
                                          l.value("warning", "")};
        }
        r.edited_files = a.value("edited_files", std::vector<std::string>{});
        r.input_tokens = a.value("input_tokens", 0L);
        r.output_tokens = a.value("output_tokens", 0L);
        r.outcome = a.value("outcome", "");
        r.emergent = a.value("emergent", std::vector<std::string>{});
        r.note = a.value("note", "");
        v.attempts.push_back(std::move(r));
    }
    if (j.contains("tokens")) {
        v.input_tokens = j.at("tokens").value("input", 0L);
        v.output_tokens = j.at("tokens").value("output", 0L);
    }
    if (j.contains("reproduction") && !j.at("reproduction").is_null()) {
        const auto& r = j.at("reproduction");
        ReproductionCheck c;
        c.assertion_matched = r.value("assertion_matched", false);
        c.assertion_location_matched = r.value("assertion_location_matched", false);
        c.markers_matched = r.value("markers_matched", std::vector<bool>{});
        v.reproduction = c;
    }
    v.final_files = j.value("final_files", std::map<std::string, std::string>{});
    v.wall_time_s = j.value("wall_time_s", 0.0);
    return v;
}

} // namespace

json to_json(const MigrationReport& report, bool include_wall_time)
{
    json versions = json::array();
    for (const auto& v : report.versions)
        versions.push_back(version_json(v, include_wall_time));
    json agg = {
        {"targets", report.aggregate.targets},
        {"successes", report.aggregate.successes},
        {"failures", report.aggregate.failures},
        {"errors", report.aggregate.errors},
        {"failure_default_steps", report.aggregate.failure_default_steps},
    };
    if (report.aggregate.success_rate)
        agg["success_rate"] = *report.aggregate.success_rate;
    if (report.aggregate.average_steps)
        agg["average_steps"] = *report.aggregate.average_steps;
    return {
        {"schema_version", report.schema_version},
        {"settings", report.settings},
        {"versions", versions},
        {"aggregate", agg},
    };
}

MigrationReport report_from_json(const json& doc)
{
    try {
        MigrationReport r;
        r.schema_version = doc.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion)
            throw ConfigError("unsupported report schema_version " + std::to_string(r.schema_version));
        r.settings = doc.value("settings", json::object());
        for (const auto& v : doc.at("versions"))
            r.versions.push_back(version_from(v));
        const auto& agg = doc.value("aggregate", json::object());
        r.aggregate = aggregate(r.versions, agg.value("failure_default_steps", 30));
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

std::string dump_report(const MigrationReport& report, bool include_wall_time)
{
    return to_json(report, include_wall_time).dump(2) + "\n";
}

std::string render_summary(const MigrationReport& report, bool include_wall_time)
{
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %-16s %-8s %6s %10s %10s", "target", "reference", "verdict", "steps",
                  "tok_in", "tok_out");
    out << buf;
    if (include_wall_time)
        out << "   wall_s";
    out << '\n';
    for (const auto& v : report.versions) {
        std::snprintf(buf, sizeof buf, "%-16s %-16s %-8s %6d %10ld %10ld", v.target.c_str(), v.reference.c_str(),
                      std::string(to_string(v.verdict)).c_str(), v.steps, v.input_tokens, v.output_tokens);
        out << buf;
        if (include_wall_time) {
            std::snprintf(buf, sizeof buf, " %8.2f", v.wall_time_s);
            out << buf;
        }
        out << '\n';
        if (!v.diagnostic.empty())
            out << "    " << v.diagnostic << '\n';
    }
    const auto& a = report.aggregate;
    out << "targets: " << a.targets << ", success: " << a.successes << ", failure: " << a.failures
        << ", error: " << a.errors << '\n';
    if (a.success_rate) {
        std::snprintf(buf, sizeof buf, "success rate: %.1f%%, average steps: %.2f (failures count %d)\n",
                      *a.success_rate * 100.0, a.average_steps.value_or(0.0), a.failure_default_steps);
        out << buf;
    }
    return out.str();
}

} // namespace exmig
