#include <exmig/annealing.hpp>
#include <exmig/diff.hpp>
#include <exmig/errors.hpp>
#include <exmig/hash.hpp>
#include <exmig/migration.hpp>
#include <exmig/orchestrator.hpp>
#include <exmig/validation.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

namespace exmig {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label)
{
    const auto hex = short_hash(std::to_string(seed) + "\n" + std::string(label), 16);
    return std::stoull(hex, nullptr, 16);
}

std::unique_ptr<LlmBackend> make_backend(const LlmConfig& config)
{
    if (config.backend == "mock") {
        if (config.transcript.empty())
            throw ConfigError("the mock LLM backend needs llm.transcript");
        return std::make_unique<ScriptedMockBackend>(ScriptedMockBackend::from_file(config.transcript));
    }
    if (config.backend == "http")
        return std::make_unique<HttpChatBackend>(config.http);
    throw ConfigError("unknown LLM backend '" + config.backend + "'");
}

json report_settings(const MigrationConfig& config, const LlmBackend& llm)
{
    const auto a = config.effective_annealing();
    json settings = {
        {"seed", config.seed},
        {"timeout_s", config.timeout_s},
        {"failure_default_steps", config.failure_default_steps},
        {"tau", config.context.tau},
        {"anchor_window", config.context.anchor_window},
        {"annealing",
         {{"initial_temperature", a.initial_temperature},
          {"cooling_factor", a.cooling_factor},
          {"min_temperature", a.min_temperature},
          {"max_depth", a.max_depth},
          {"penalty", a.penalty},
          {"combo_top_k", a.combo_top_k},
          {"fallback_size", a.fallback_size}}},
        {"ablation",
         {{"no_causing", config.ablation.no_causing},
          {"no_supporting", config.ablation.no_supporting},
          {"no_annealing", config.ablation.no_annealing},
          {"no_combining", config.ablation.no_combining}}},
        {"llm_backend", llm.name()},
        {"prompt_template", prompt_template_version()},
        {"adapter", config.adapter.name},
    };
    if (llm.name() == "http")
        settings["llm_model"] = config.llm.http.model;
    return settings;
}

// ---------------------------------------------------------------------------

namespace {

using clock_type = std::chrono::steady_clock;

std::string slug(std::string_view text)
{
    std::string out;
    for (char c : text)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
    return out;
}

IndicatorRecord record_of(const FailureIndicator& ind)
{
    return IndicatorRecord{ind.fingerprint, ind.kind, ind.phase, ind.message};
}

CandidateRecord record_of(const ScoredDiff& d)
{
    return CandidateRecord{d.hunk_ids, d.score, d.origin};
}

std::vector<CandidateRecord> records_of(const std::vector<ScoredDiff>& list)
{
    std::vector<CandidateRecord> out;
    for (const auto& d : list)
        out.push_back(record_of(d));
    return out;
}

FingerprintSet fingerprints(const std::vector<FailureIndicator>& inds)
{
    FingerprintSet out;
    for (const auto& i : inds)
        out.insert(i.fingerprint);
    return out;
}

std::vector<std::string> stack_methods(const std::optional<AssertionReport>& report)
{
    std::vector<std::string> out;
    if (!report)
        return out;
    static const std::regex frame(R"(at [\w$.]+\.([\w$]+)\()");
    std::istringstream in(report->stack);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_search(line, m, frame))
            out.push_back(m[1].str());
    }
    return out;
}

struct Search {
    std::string id;
    FailureIndicator indicator;
    MigrationContext context;
    AnnealingState state;
    std::size_t record = 0; // index into VersionReport::searches
};

/// Per-target mutable state of one migration.
class Session {
public:
    Session(const MigrationConfig& config, LlmBackend& llm, const VersionRef& target, VersionReport& report)
        : m_config(config)
        , m_llm(llm)
        , m_target(target)
        , m_report(report)
        , m_start(clock_type::now())
        , m_exploit(config.exploit)
    {
        for (const auto& [path, text] : m_exploit.files) {
            auto slash = path.find_last_of('/');
            m_extract.exploit_files.insert(slash == std::string::npos ? path : path.substr(slash + 1));
        }
    }

    void run();

private:
    double elapsed() const { return std::chrono::duration<double>(clock_type::now() - m_start).count(); }
    double budget() const { return m_config.timeout_s; }
    std::chrono::milliseconds remaining() const
    {
        const auto left = std::chrono::duration<double>(budget() - elapsed());
        return std::max(std::chrono::milliseconds(1), std::chrono::duration_cast<std::chrono::milliseconds>(left));
    }

    void run_current();
    std::string exploit_text() const;
    std::string location_line(const FailureIndicator& ind) const;
    Search open_search(const FailureIndicator& ind, int depth);
    AttemptVerdict attempt(Search& search, const AnnealingState::Selection& selection, int depth, bool& error);
    bool search_and_repair(const FailureIndicator& ind);

    struct Snapshot {
        Exploit exploit;
        ExecutionOutput output;
        std::vector<FailureIndicator> indicators;
    };
    Snapshot snapshot() const { return {m_exploit, m_output, m_indicators}; }
    void restore(const Snapshot& s)
    {
        m_exploit = s.exploit;
        m_output = s.output;
        m_indicators = s.indicators;
    }

    const MigrationConfig& m_config;
    LlmBackend& m_llm;
    VersionRef m_target;
    VersionReport& m_report;
    clock_type::time_point m_start;

    VersionRef m_reference;
    std::optional<Workspace> m_workspace;
    ExecutionOutput m_reference_output;
    HunkIndex m_index;
    Exploit m_exploit;
    ExecutionOutput m_output;
    std::vector<FailureIndicator> m_indicators;
    ExtractionOptions m_extract;
    int m_search_count = 0;
};

void Session::run_current()
{
    m_workspace->write_exploit(m_exploit);
    m_output = run_exploit(*m_workspace, m_config.adapter, m_target, remaining());
    m_indicators = extract_failure_indicators(m_output, m_reference_output, m_config.adapter.rules, m_extract);
}

std::string Session::exploit_text() const
{
    std::string text = m_exploit.entry_source();
    for (const auto& [path, body] : m_exploit.files)
        if (path != m_exploit.entry)
            text += "\n" + body;
    return text;
}

std::string Session::location_line(const FailureIndicator& ind) const
{
    if (!ind.location || ind.location->line < 1)
        return {};
    for (const auto& [path, text] : m_exploit.files) {
        if (path != ind.location->file && !path.ends_with("/" + ind.location->file))
            continue;
        std::istringstream in(text);
        std::string line;
        for (int no = 1; std::getline(in, line); ++no)
            if (no == ind.location->line)
                return line;
    }
    return {};
}

Search Session::open_search(const FailureIndicator& ind, int depth)
{
    const std::string id = "s" + std::to_string(++m_search_count);
    auto identifiers = extract_identifiers(ind, &m_llm, exploit_text(), location_line(ind));

    ContextOptions options = m_config.context;
    options.exploit_source = exploit_text();
    options.stack_methods = stack_methods(m_output.report);
    options.no_causing = m_config.ablation.no_causing;
    options.no_supporting = m_config.ablation.no_supporting;
    auto context = build_context(ind, identifiers, m_index.files(), options);

    const auto params = m_config.effective_annealing();
    auto atomic = merge_atomic(context.causing, context.supporting);
    std::vector<ScoredDiff> fallback;
    if (atomic.empty()) {
        fallback = fallback_pool(identifiers, m_index.files(), params.fallback_size);
        atomic = fallback;
    }

    SearchRecord rec;
    rec.id = id;
    rec.depth = depth;
    rec.indicator = record_of(ind);
    rec.identifiers.assign(identifiers.tokens.begin(), identifiers.tokens.end());
    rec.identifier_origin = std::string(to_string(identifiers.origin));
    rec.causing = records_of(context.causing);
    rec.supporting = records_of(context.supporting);
    rec.fallback = records_of(fallback);
    m_report.searches.push_back(std::move(rec));

    const auto seed = derive_seed(m_config.seed, m_target.id + "\n" + ind.fingerprint + "\n" + id);
    return Search{id, ind, std::move(context), AnnealingState(params, std::move(atomic), seed),
                  m_report.searches.size() - 1};
}

AttemptVerdict Session::attempt(Search& search, const AnnealingState::Selection& selection, int depth, bool& error)
{
    error = false;
    AttemptRecord rec;
    rec.step = ++m_report.steps;
    rec.search_id = search.id;
    rec.depth = depth;
    rec.candidate = record_of(selection.diff);
    rec.probability = selection.probability;
    rec.candidates = selection.candidates;
    rec.temperature = search.state.temperature();
    rec.exploration_depth = search.state.exploration_depth();

    const auto before = fingerprints(m_indicators);
    AttemptVerdict verdict{VerdictKind::Unresolved, {}};
    try {
        const auto loc = localize_edit(m_llm, search.context, selection.diff, m_exploit, m_index, remaining());
        rec.localization = loc.location;
        rec.input_tokens += loc.input_tokens;
        rec.output_tokens += loc.output_tokens;
        const auto adapted =
            adapt_exploit(m_llm, search.context, selection.diff, m_exploit, loc.location, m_index, remaining());
        rec.input_tokens += adapted.input_tokens;
        rec.output_tokens += adapted.output_tokens;
        if (!adapted.accepted) {
            error = true;
            rec.outcome = "error";
            rec.note = "rejected: " + adapted.rejection;
        } else {
            rec.edited_files = adapted.changed;
            m_exploit = adapted.exploit;
            run_current();
            verdict = judge_attempt(search.indicator.fingerprint, before, fingerprints(m_indicators));
            rec.outcome = std::string(to_string(verdict.kind));
            rec.emergent.assign(verdict.emergent.begin(), verdict.emergent.end());
        }
    } catch (const LlmError& e) {
        error = true;
        rec.outcome = "error";
        rec.note = std::string("llm: ") + e.what();
    }
    m_report.input_tokens += rec.input_tokens;
    m_report.output_tokens += rec.output_tokens;
    m_report.attempts.push_back(std::move(rec));
    return verdict;
}

bool Session::search_and_repair(const FailureIndicator& ind)
{
    Search search = open_search(ind, 0);
    auto finish = [&](std::string termination, bool resolved) {
        m_report.searches[search.record].termination = std::move(termination);
        m_report.searches[search.record].resolved = resolved;
        return resolved;
    };

    for (;;) {
        const auto term = search.state.termination(elapsed(), budget());
        if (term != AnnealingState::Termination::None)
            return finish(std::string(to_string(term)), false);
        const auto selection = search.state.select();
        if (!selection)
            return finish("exhausted", false);

        const Snapshot before = snapshot();
        bool error = false;
        const auto verdict = attempt(search, *selection, 0, error);
        if (error) {
            restore(before);
            search.state.penalize_and_cool(selection->diff);
            continue;
        }
        switch (verdict.kind) {
        case VerdictKind::Resolved:
        case VerdictKind::FullyMigrated:
            return finish("resolved", true);
        case VerdictKind::Unresolved:
            restore(before);
            search.state.penalize_and_cool(selection->diff);
            continue;
        case VerdictKind::NewFailures:
            break;
        }

        // Emergent failures: repair them within the temperature-derived depth budget.
        std::map<std::string, Search> nested;
        auto still_present = [&](const std::string& fp) { return fingerprints(m_indicators).contains(fp); };
        auto nested_attempt = [&](const std::string& fp) -> AttemptVerdict {
            auto it = std::find_if(m_indicators.begin(), m_indicators.end(),
                                   [&](const FailureIndicator& i) { return i.fingerprint == fp; });
            if (it == m_indicators.end())
                return {VerdictKind::Resolved, {}};
            auto found = nested.find(fp);
            if (found == nested.end())
                found = nested.emplace(fp, open_search(*it, 1)).first;
            Search& sub = found->second;
            const auto term = sub.state.termination(elapsed(), budget());
            if (term != AnnealingState::Termination::None) {
                m_report.searches[sub.record].termination = std::string(to_string(term));
                return {VerdictKind::Unresolved, {}};
            }
            const auto sel = sub.state.select();
            if (!sel) {
                m_report.searches[sub.record].termination = "exhausted";
                return {VerdictKind::Unresolved, {}};
            }
            const Snapshot sub_before = snapshot();
            bool sub_error = false;
            const auto v = attempt(sub, *sel, 1, sub_error);
            if (sub_error || v.kind == VerdictKind::Unresolved) {
                restore(sub_before);
                sub.state.penalize_and_cool(sel->diff);
                return {VerdictKind::Unresolved, {}};
            }
            m_report.searches[sub.record].termination = "resolved";
            m_report.searches[sub.record].resolved = true;
            return v;
        };
        if (handle_new_failures(verdict.emergent, search.state.exploration_depth(), nested_attempt, still_present))
            return finish("resolved", true);
        for (auto& [fp, sub] : nested)
            if (m_report.searches[sub.record].termination.empty())
                m_report.searches[sub.record].termination = "budget";
        restore(before);
        search.state.penalize_and_cool(selection->diff);
    }
}

void Session::run()
{
    auto reproduced = m_config.reproduced_refs();
    std::vector<VersionRef> others;
    for (const auto& r : reproduced)
        if (!(r == m_target))
            others.push_back(r);
    m_reference = select_reference_version(others.empty() ? reproduced : others, m_target);
    m_report.reference = m_reference.id;

    const fs::path root = m_config.scratch / slug(m_target.id);
    auto ref_ws = Workspace::create(root / "reference");
    if (m_config.adapter.checkout_library)
        ref_ws.checkout_library(m_config.repo, m_reference);
    ref_ws.write_exploit(m_config.exploit);
    m_reference_output = run_exploit(ref_ws, m_config.adapter, m_reference, remaining());
    if (!verify_reproduction(m_reference_output, m_reference_output, m_config.exploit.assertion).ok()) {
        m_report.verdict = Verdict::Error;
        m_report.diagnostic = "reference version " + m_reference.id + " does not reproduce the exploit";
        return;
    }
    if (!m_config.keep_workspaces)
        ref_ws.remove();

    std::optional<DiffCache> cache;
    if (m_config.diff_cache)
        cache.emplace(*m_config.diff_cache);
    m_index = HunkIndex(parse_unified_diff(
        compute_version_diff(m_config.repo, m_reference, m_target, cache ? &*cache : nullptr)));

    m_workspace = Workspace::create(root / "target");
    if (m_config.adapter.checkout_library)
        m_workspace->checkout_library(m_config.repo, m_target);
    run_current();
    for (const auto& ind : m_indicators)
        m_report.initial_indicators.push_back(record_of(ind));

    std::set<std::string> irrecoverable;
    while (elapsed() < budget()) {
        auto next = std::find_if(m_indicators.begin(), m_indicators.end(), [&](const FailureIndicator& i) {
            return !irrecoverable.contains(i.fingerprint);
        });
        if (next == m_indicators.end())
            break;
        const FailureIndicator ind = *next;
        if (!search_and_repair(ind))
            irrecoverable.insert(ind.fingerprint);
    }

    for (const auto& ind : m_indicators)
        m_report.remaining_indicators.push_back(record_of(ind));
    if (!m_indicators.empty()) {
        m_report.verdict = Verdict::Failure;
        m_report.diagnostic = std::to_string(m_indicators.size()) + " failure indicator(s) remain";
        // Every run is capped at remaining(), so a killed run means the budget ran out.
        const bool search_timed_out = std::any_of(m_report.searches.begin(), m_report.searches.end(),
                                                  [](const SearchRecord& s) { return s.termination == "timeout"; });
        if (elapsed() >= budget() || m_output.timed_out() || search_timed_out) {
            m_report.timed_out = true;
            m_report.diagnostic += " after the time budget ran out";
        }
    } else {
        m_report.reproduction = verify_reproduction(m_output, m_reference_output, m_config.exploit.assertion);
        if (m_report.reproduction->ok()) {
            m_report.verdict = Verdict::Success;
            m_report.final_files = m_exploit.files;
        } else {
            m_report.verdict = Verdict::Failure;
            m_report.diagnostic = "no failures remain but the reproduction check failed";
        }
    }
    if (!m_config.keep_workspaces)
        m_workspace->remove();
}

} // namespace

// ---------------------------------------------------------------------------

Migrator::Migrator(const MigrationConfig& config, LlmBackend& llm)
    : m_config(config)
    , m_llm(llm)
{
}

VersionReport Migrator::migrate_version(const VersionRef& target)
{
    VersionReport report;
    report.target = target.id;
    const auto start = clock_type::now();
    try {
        Session session(m_config, m_llm, target, report);
        session.run();
    } catch (const std::exception& e) {
        report.verdict = Verdict::Error;
        report.diagnostic = normalize_volatile(e.what());
    }
    report.wall_time_s = std::chrono::duration<double>(clock_type::now() - start).count();
    return report;
}

MigrationReport Migrator::migrate(const std::vector<VersionRef>& targets)
{
    MigrationReport report;
    report.settings = report_settings(m_config, m_llm);
    report.versions.resize(targets.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= targets.size())
                return;
            report.versions[i] = migrate_version(targets[i]);
        }
    };
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, m_config.concurrency)),
                                                    std::max<std::size_t>(1, targets.size()));
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < width; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    report.aggregate = aggregate(report.versions, m_config.failure_default_steps);
    return report;
}

MigrationReport Migrator::migrate_all()
{
    return migrate(m_config.target_refs());
}

} // namespace exmig
