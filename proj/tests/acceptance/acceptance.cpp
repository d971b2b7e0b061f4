// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <exmig/annealing.hpp>
#include <exmig/context.hpp>
#include <exmig/diff.hpp>
#include <exmig/report.hpp>
#include <exmig/validation.hpp>

#include "cli.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace exmig;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

const std::vector<std::string> kSixCases{"method-rename",    "method-removal",   "package-move",
                                         "dependency-break", "signature-change", "silent-pass"};

// Brute force: longest common subsequence by enumerating every subsequence of a.
std::size_t lcs_brute(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
        std::size_t j = 0, n = 0;
        bool ok = true;
        for (std::size_t i = 0; i < a.size() && ok; ++i) {
            if (!(mask & (1u << i)))
                continue;
            while (j < b.size() && b[j] != a[i])
                ++j;
            if (j == b.size())
                ok = false;
            else
                ++j, ++n;
        }
        if (ok)
            best = std::max(best, n);
    }
    return best;
}

Outcome c1_lcs()
{
    const auto t0 = Clock::now();
    std::mt19937 rng(1);
    const std::vector<std::string> alphabet{"a", "b", "c"};
    std::uniform_int_distribution<int> len(0, 8), sym(0, 2);
    auto draw = [&] {
        std::vector<std::string> s(len(rng));
        for (auto& t : s)
            t = alphabet[sym(rng)];
        return s;
    };
    for (int i = 0; i < 10000; ++i) {
        const auto a = draw(), b = draw();
        const auto got = lcs_length(a, b), want = lcs_brute(a, b);
        if (got != want)
            return {false, "pair " + std::to_string(i) + ": " + std::to_string(got) + " vs " + std::to_string(want)};
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    return {elapsed < 10, "10000 pairs agree"};
}

Outcome c2_softmax()
{
    const auto t0 = Clock::now();
    const std::vector<double> scores{10, 5, 0};
    std::vector<double> expect;
    double z = 0;
    for (double s : scores)
        z += std::exp(s / 10.0);
    for (double s : scores)
        expect.push_back(std::exp(s / 10.0) / z);

    AnnealingParams p;
    p.no_combining = true;
    std::vector<ScoredDiff> atomic;
    for (std::size_t i = 0; i < scores.size(); ++i)
        atomic.push_back({{"h" + std::to_string(i)}, scores[i], DiffOrigin::Cause, 0});
    std::map<std::string, int> hits;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        AnnealingState st(p, atomic, 7000000 + i);
        ++hits[st.select()->diff.hunk_ids[0]];
    }
    std::ostringstream d;
    bool ok = true;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double f = hits["h" + std::to_string(i)] / double(draws);
        ok = ok && std::abs(f - expect[i]) <= 0.01;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%.4f/%.4f", i ? " " : "", f, expect[i]);
        d << buf;
    }
    return {ok && std::chrono::duration<double>(Clock::now() - t0).count() < 5, d.str()};
}

std::vector<DiffFile> corpus(const std::string& name)
{
    return parse_unified_diff(test::read_file(test::fixtures_dir() / "corpus" / name));
}

std::string describe(const HunkIndex& index, const ScoredDiff& d)
{
    const auto* h = index.find(d.hunk_ids[0]);
    std::ostringstream s;
    s << (h ? h->path() : "?") << "@" << (h ? h->old_start : 0) << "=" << d.score;
    return s.str();
}

Outcome c3_planted()
{
    const auto diff = corpus("planted_missing_method.diff");
    const HunkIndex index(diff);
    std::size_t hunks = 0;
    for (const auto& f : diff)
        hunks += f.hunks.size();
    FailureIndicator ind;
    ind.kind = FailureKind::MissingMethod;
    ind.symbols = {"verifyFile"};
    const auto got = extract_causing_diffs(ind, {{"verifyFile"}, FailureIdentifierSet::Origin::Rule}, diff);
    std::set<std::string> found;
    bool scored = true;
    for (const auto& c : got) {
        found.insert(describe(index, c));
        scored = scored && c.score == 10.0;
    }
    const std::set<std::string> planted{"src/main/java/org/acme/io/FileVerifier.java@12=10",
                                        "src/main/java/org/acme/io/Archive.java@90=10",
                                        "src/main/java/org/acme/io/Legacy.java@14=10"};
    std::ostringstream d;
    d << hunks << " hunks, retrieved";
    for (const auto& f : found)
        d << " " << f;
    return {hunks == 20 && scored && got.size() == 3 && found == planted, d.str()};
}

Outcome c4_supporting()
{
    const auto diff = corpus("supporting_pairs.diff");
    const HunkIndex index(diff);
    const FailureIdentifierSet ids{{"verifyHost"}, FailureIdentifierSet::Origin::Rule};
    const auto kept = extract_supporting_diffs(ids, diff, 0.5);
    const auto all = extract_supporting_diffs(ids, diff, 0.01);
    std::ostringstream d;
    d << "tau 0.5 keeps";
    for (const auto& s : kept)
        d << " " << describe(index, s);
    d << "; below threshold";
    for (const auto& s : all)
        if (s.score < 5)
            d << " " << describe(index, s);
    const bool ok = kept.size() == 1 && kept[0].score == 7.0 &&
                    index.find(kept[0].hunk_ids[0])->path().ends_with("TlsClient.java") && all.size() > kept.size();
    return {ok, d.str()};
}

AttemptVerdict judge_oracle(const std::string& fp, const FingerprintSet& before, const FingerprintSet& after)
{
    if (after.empty())
        return {VerdictKind::FullyMigrated, {}};
    if (after.count(fp))
        return {VerdictKind::Unresolved, {}};
    FingerprintSet emergent;
    for (const auto& a : after)
        if (!before.count(a))
            emergent.insert(a);
    if (emergent.empty())
        return {VerdictKind::Resolved, {}};
    return {VerdictKind::NewFailures, emergent};
}

Outcome c5_validation()
{
    const std::vector<std::string> universe{"f", "g", "n"};
    auto subset = [&](unsigned mask) {
        FingerprintSet s;
        for (unsigned i = 0; i < universe.size(); ++i)
            if (mask & (1u << i))
                s.insert(universe[i]);
        return s;
    };
    int cases = 0;
    for (const auto& fp : universe)
        for (unsigned b = 0; b < 8; ++b)
            for (unsigned a = 0; a < 8; ++a, ++cases)
                if (judge_attempt(fp, subset(b), subset(a)) != judge_oracle(fp, subset(b), subset(a)))
                    return {false, "mismatch at case " + std::to_string(cases)};
    return {cases >= 12, std::to_string(cases) + " cases agree"};
}

Outcome c6_fixtures()
{
    std::ostringstream d;
    bool ok = true;
    std::vector<std::string> first;
    const auto t0 = Clock::now();
    for (const auto& name : kSixCases) {
        const auto& c = test::manifest().find(name);
        const auto r = test::run_fixture(name, "acc-c6-" + name);
        const auto& v = r.versions.at(0);
        const bool hit = v.verdict == c.expected.verdict && v.steps <= c.expected.max_steps && c.expected.max_steps <= 15;
        ok = ok && hit;
        d << name << "=" << to_string(v.verdict) << "/" << v.steps << (hit ? "" : "(!)") << " ";
        first.push_back(dump_report(r));
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    ok = ok && elapsed < 60;
    bool same = true;
    for (std::size_t i = 0; i < kSixCases.size(); ++i)
        same = same && dump_report(test::run_fixture(kSixCases[i], "acc-c6b-" + kSixCases[i])) == first[i];
    char buf[96];
    std::snprintf(buf, sizeof buf, "in %.1fs; rerun %s", elapsed, same ? "byte-identical" : "DIFFERS");
    d << buf;
    return {ok && same, d.str()};
}

nlohmann::json cli_json(std::vector<std::string> args, int& status)
{
    args.insert(args.begin(), "exmig");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream out, err;
    status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return nlohmann::json::parse(out.str());
}

Outcome c7_ablations()
{
    const auto t0 = Clock::now();
    std::vector<std::string> cases = kSixCases;
    cases.push_back("wrong-candidates");
    std::map<std::string, std::string> config;
    for (const auto& c : cases)
        config[c] = test::materialize_case(c, "acc-c7-" + c).config.string();

    std::map<std::string, bool> ok{
        {"--no-annealing", true}, {"--no-combining", true}, {"--no-causing", true}, {"--no-supporting", true}};
    std::size_t attempts = 0;
    for (const auto& [flag, _] : ok) {
        for (const auto& c : cases) {
            int status = 0;
            const auto doc = cli_json({"run-matrix", "--config", config[c], flag, "--json"}, status);
            for (const auto& v : doc.at("versions")) {
                std::map<std::string, double> last;
                for (const auto& a : v.at("attempts")) {
                    ++attempts;
                    const auto sid = a.at("search_id").get<std::string>();
                    const double score = a.at("candidate").at("score").get<double>();
                    if (flag == "--no-annealing" && last.count(sid) && score > last[sid])
                        ok[flag] = false;
                    last[sid] = score;
                    if (flag == "--no-combining" && a.at("candidate").at("origin") == "combo")
                        ok[flag] = false;
                }
                for (const auto& s : v.at("searches")) {
                    if (flag == "--no-causing" && !s.at("causing").empty())
                        ok[flag] = false;
                    if (flag == "--no-supporting" && !s.at("supporting").empty())
                        ok[flag] = false;
                }
            }
        }
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    std::ostringstream d;
    bool all = elapsed < 60;
    for (const auto& [flag, good] : ok) {
        d << flag << (good ? " ok " : " VIOLATED ");
        all = all && good;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%zu attempts, %.1fs)", attempts, elapsed);
    d << buf;
    return {all, d.str()};
}

Outcome c8_aggregate()
{
    std::vector<VersionReport> vs(3);
    vs[0].verdict = Verdict::Success, vs[0].steps = 5;
    vs[1].verdict = Verdict::Success, vs[1].steps = 9;
    vs[2].verdict = Verdict::Failure, vs[2].steps = 15;
    const auto s = aggregate(vs, 30);
    char buf[64];
    std::snprintf(buf, sizeof buf, "average %.2f", s.average_steps.value_or(-1));
    return {s.average_steps && std::abs(*s.average_steps - 14.67) < 0.005, buf};
}

Outcome c9_infinite_loop()
{
    const auto t0 = Clock::now();
    const auto r = test::run_fixture("infinite-loop", "acc-c9", [](MigrationConfig& c) { c.timeout_s = 5; });
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    const auto& v = r.versions.at(0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "verdict %s, timed_out %s, %.2fs", std::string(to_string(v.verdict)).c_str(),
                  v.timed_out ? "yes" : "no", elapsed);
    return {v.verdict == Verdict::Failure && v.timed_out && elapsed < 6, buf};
}

Outcome c10_floor()
{
    const auto t0 = Clock::now();
    const auto r = test::run_fixture("wrong-candidates", "acc-c10");
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    const auto& v = r.versions.at(0);
    bool decreasing = true;
    for (std::size_t i = 1; i < v.attempts.size(); ++i)
        decreasing = decreasing && v.attempts[i].temperature < v.attempts[i - 1].temperature;
    const std::string term = v.searches.empty() ? "none" : v.searches[0].termination;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu attempts, termination %s, T %s, %.1fs", v.attempts.size(), term.c_str(),
                  decreasing ? "strictly decreasing" : "NOT decreasing", elapsed);
    return {v.attempts.size() == 11 && decreasing && term == "temperature_floor" && elapsed < 30, buf};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"lcs_length matches brute force", c1_lcs},
        {"softmax sampling frequencies", c2_softmax},
        {"planted MissingMethod hunks retrieved", c3_planted},
        {"supporting similarity threshold", c4_supporting},
        {"validation state machine table", c5_validation},
        {"fixture verdicts and determinism", c6_fixtures},
        {"ablation flags", c7_ablations},
        {"aggregate with failure default", c8_aggregate},
        {"infinite loop hits the time budget", c9_infinite_loop},
        {"wrong candidates reach temperature floor", c10_floor},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [title, check] : criteria) {
        ++n;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("%s %2d %s (%.2fs): %s\n", o.ok ? "PASS" : "FAIL", n, title, s, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.ok;
    }
    return failed ? 1 : 0;
}
