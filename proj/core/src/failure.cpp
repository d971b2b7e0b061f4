#include <exmig/diff.hpp>
#include <exmig/errors.hpp>
#include <exmig/failure.hpp>
#include <exmig/hash.hpp>
#include <exmig/llm.hpp>

#include <algorithm>
#include <array>

namespace exmig {

using nlohmann::json;

std::string_view to_string(Phase phase)
{
    switch (phase) {
    case Phase::Build: return "build";
    case Phase::Runtime: return "runtime";
    case Phase::Assertion: return "assertion";
    }
    return "build";
}

std::string_view to_string(PhaseStatus status)
{
    switch (status) {
    case PhaseStatus::Ok: return "ok";
    case PhaseStatus::Failed: return "failed";
    case PhaseStatus::Timeout: return "timeout";
    }
    return "ok";
}

namespace {

constexpr std::array kKindNames{
    std::pair{FailureKind::AssertionMismatch, std::string_view("AssertionMismatch")},
    std::pair{FailureKind::RuntimeError, std::string_view("RuntimeError")},
    std::pair{FailureKind::MissingClass, std::string_view("MissingClass")},
    std::pair{FailureKind::MissingPackage, std::string_view("MissingPackage")},
    std::pair{FailureKind::MissingMethod, std::string_view("MissingMethod")},
    std::pair{FailureKind::IncompatibleType, std::string_view("IncompatibleType")},
    std::pair{FailureKind::WrongReturn, std::string_view("WrongReturn")},
    std::pair{FailureKind::Other, std::string_view("Other")},
};

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < text.size())
                lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string basename_of(std::string_view path)
{
    auto slash = path.find_last_of('/');
    return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

// "a.b.C" -> "C"; leaves names with spaces or generics alone.
std::string simple_name(std::string_view symbol)
{
    auto lt = symbol.find('<');
    auto head = symbol.substr(0, lt);
    auto dot = head.find_last_of('.');
    if (dot == std::string_view::npos)
        return std::string(symbol);
    return std::string(symbol.substr(dot + 1));
}

std::optional<SourceLocation> top_frame(std::string_view fragment, const std::set<std::string>& exploit_files)
{
    static const std::regex frame(R"(at [\w$.<>]+\(([\w$]+\.\w+):(\d+)\))");
    std::optional<SourceLocation> first;
    for (auto it = std::cregex_iterator(fragment.data(), fragment.data() + fragment.size(), frame);
         it != std::cregex_iterator(); ++it) {
        SourceLocation loc{(*it)[1].str(), std::stoi((*it)[2].str())};
        if (exploit_files.contains(loc.file))
            return loc;
        if (!first)
            first = loc;
    }
    return exploit_files.empty() ? first : std::nullopt;
}

FailureIndicator make_indicator(FailureKind kind, Phase phase, std::string_view raw,
                                std::vector<std::string> symbols, std::optional<SourceLocation> location)
{
    FailureIndicator ind;
    ind.kind = kind;
    ind.phase = phase;
    ind.message = normalize_volatile(trim(raw));
    ind.symbols = std::move(symbols);
    ind.location = std::move(location);
    ind.fingerprint = fingerprint(ind.kind, ind.primary_symbol(), ind.message, ind.location);
    return ind;
}

// Maven repeats compiler diagnostics with "[ERROR]" on every continuation line; fold
// continuation lines to one form so both copies share a fingerprint.
std::string fold_continuations(std::string_view fragment)
{
    const auto lines = split_lines(fragment);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == 0) {
            out.append(lines[i]);
            continue;
        }
        auto line = lines[i];
        if (line.starts_with("[ERROR]"))
            line.remove_prefix(7);
        out += '\n';
        const auto body = line.find_first_not_of(" \t");
        if (body == std::string_view::npos)
            continue;
        if (body == 0) {
            out.append(line);
            continue;
        }
        out += line.substr(body).starts_with("at ") ? "\t" : "  ";
        out.append(line.substr(body));
    }
    return out;
}

std::string last_meaningful_line(std::string_view log)
{
    auto lines = split_lines(log);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        auto t = trim(*it);
        if (!t.empty())
            return t;
    }
    return {};
}

} // namespace

std::string_view to_string(FailureKind kind)
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "Other";
}

FailureKind parse_failure_kind(std::string_view text)
{
    for (const auto& [k, name] : kKindNames)
        if (name == text)
            return k;
    throw ConfigError("unknown failure kind '" + std::string(text) + "'");
}

std::string_view to_string(FailureIdentifierSet::Origin origin)
{
    return origin == FailureIdentifierSet::Origin::Llm ? "llm" : "rule";
}

const std::string& FailureIndicator::primary_symbol() const
{
    static const std::string empty;
    return symbols.empty() ? empty : symbols.front();
}

const PhaseOutcome* ExecutionOutput::phase(Phase p) const
{
    for (const auto& outcome : phases)
        if (outcome.phase == p)
            return &outcome;
    return nullptr;
}

bool ExecutionOutput::timed_out() const
{
    return std::any_of(phases.begin(), phases.end(),
                       [](const PhaseOutcome& p) { return p.status == PhaseStatus::Timeout; });
}

bool ExecutionOutput::build_ok() const
{
    const auto* b = phase(Phase::Build);
    return b && b->status == PhaseStatus::Ok;
}

std::string ExecutionOutput::full_log() const
{
    std::string out;
    for (const auto& p : phases) {
        out += p.log;
        if (!p.log.empty() && p.log.back() != '\n')
            out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

ClassifierRuleSet::ClassifierRuleSet(std::vector<ClassifierRule> rules)
    : m_rules(std::move(rules))
{
    m_compiled.reserve(m_rules.size());
    for (const auto& rule : m_rules) {
        try {
            m_compiled.emplace_back(rule.pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            throw ConfigError("invalid classifier pattern '" + rule.pattern + "': " + e.what());
        }
    }
}

ClassifierRuleSet ClassifierRuleSet::maven()
{
    // javac location prefix as printed by maven-compiler-plugin.
    const std::string loc = R"(\[ERROR\] [^\n]*?([\w$]+\.java):\[(\d+),\d+\] (?:error: )?)";
    std::vector<ClassifierRule> rules{
        {loc + R"(package ([\w.]+) does not exist)", FailureKind::MissingPackage, {3}, 1, 2},
        {loc + R"(cannot find symbol\n(?:\[ERROR\])?[ \t]*symbol:[ \t]+class ([\w$.]+)[^\n]*(?:\n(?:\[ERROR\])?[ \t]*location:[^\n]*)?)",
         FailureKind::MissingClass, {3}, 1, 2},
        {loc + R"(cannot find symbol\n(?:\[ERROR\])?[ \t]*symbol:[ \t]+method ([\w$]+)[^\n]*(?:\n(?:\[ERROR\])?[ \t]*location:[^\n]*)?)",
         FailureKind::MissingMethod, {3}, 1, 2},
        {loc + R"(cannot find symbol(?:\n(?:\[ERROR\])?[ \t]*symbol:[ \t]+\w+ ([\w$]+)[^\n]*)?(?:\n(?:\[ERROR\])?[ \t]*location:[^\n]*)?)",
         FailureKind::Other, {3}, 1, 2},
        {loc + R"(incompatible types: ([^\n]+?) cannot be converted to ([^\n]+))", FailureKind::IncompatibleType,
         {3, 4}, 1, 2},
        {loc + R"((?:incompatible types: )?(?:unexpected return value|missing return value|cannot return a value from method whose result type is void)[^\n]*)",
         FailureKind::WrongReturn, {}, 1, 2},
        {loc + R"((?:method|constructor) ([\w$]+) in (?:class|interface|enum) ([\w$.<>]+) cannot be applied to given types;?(?:\n(?:\[ERROR\])?[ \t]*(?:required|found|reason):[^\n]*)*)",
         FailureKind::IncompatibleType, {3, 4}, 1, 2},
        // Maven and surefire boilerplate around real diagnostics.
        {R"(\[ERROR\] (?:COMPILATION ERROR|Failed to execute goal org\.apache\.maven\.plugins:maven-(?:compiler|surefire)-plugin|-> \[Help|To see the full stack trace|Re-run Maven|For more information|Tests run:|Failures:|Errors:|There (?:are|were) test failures|Please refer to|See dump files|\[Help \d+\])[^\n]*)",
         FailureKind::Other, {}, 0, 0, true},
        {R"(\[ERROR\][ \t]*(?=\n|$))", FailureKind::Other, {}, 0, 0, true},
        {R"(\[ERROR\] [^\n]*<<< (?:ERROR|FAILURE)![^\n]*)", FailureKind::Other, {}, 0, 0, true},
        {R"(\[ERROR\]   [\w$.]+:\d+[^\n]*)", FailureKind::Other, {}, 0, 0, true},
        {R"((?:\[ERROR\] [^\n]*?)?(?:Could not find artifact|Failure to find) ([\w.-]+):([\w.-]+)[^\n]*)",
         FailureKind::Other, {2}, 0, 0},
        {R"((?:Exception in thread "[^"\n]*" )?(?!java\.lang\.AssertionError|org\.junit\.ComparisonFailure|org\.opentest4j\.AssertionFailedError|junit\.framework\.)((?:[\w$]+\.)+[\w$]*(?:Exception|Error))(?:: ([^\n]*))?((?:\n[ \t]+at [^\n]+)+))",
         FailureKind::RuntimeError, {1}, 0, 0},
        {R"(\[ERROR\][ \t]+\S[^\n]*)", FailureKind::Other, {}, 0, 0},
    };
    return ClassifierRuleSet(std::move(rules));
}

ClassifierRuleSet ClassifierRuleSet::from_json(const json& doc)
{
    if (!doc.is_array())
        throw ConfigError("classifier rules must be an array");
    std::vector<ClassifierRule> rules;
    for (const auto& r : doc) {
        ClassifierRule rule;
        rule.pattern = r.at("pattern").get<std::string>();
        rule.kind = parse_failure_kind(r.value("kind", std::string("Other")));
        if (r.contains("symbols")) {
            const auto& s = r.at("symbols");
            rule.symbol_groups = s.is_number() ? std::vector<int>{s.get<int>()} : s.get<std::vector<int>>();
        }
        rule.file_group = r.value("file", 0);
        rule.line_group = r.value("line", 0);
        rule.suppress = r.value("suppress", false);
        rules.push_back(std::move(rule));
    }
    return ClassifierRuleSet(std::move(rules));
}

namespace {

Classification classification_from(const ClassifierRule& rule, const std::cmatch& m)
{
    Classification c;
    c.kind = rule.kind;
    c.suppressed = rule.suppress;
    for (int g : rule.symbol_groups) {
        if (g > 0 && static_cast<std::size_t>(g) < m.size() && m[g].matched) {
            auto s = trim(m[g].str());
            if (!s.empty())
                c.symbols.push_back(std::move(s));
        }
    }
    if (rule.file_group > 0 && static_cast<std::size_t>(rule.file_group) < m.size() && m[rule.file_group].matched) {
        SourceLocation loc{basename_of(m[rule.file_group].str()), 0};
        if (rule.line_group > 0 && static_cast<std::size_t>(rule.line_group) < m.size() &&
            m[rule.line_group].matched)
            loc.line = std::stoi(m[rule.line_group].str());
        c.location = std::move(loc);
    }
    return c;
}

} // namespace

Classification classify(std::string_view raw_fragment, const ClassifierRuleSet& rules)
{
    const auto& compiled = rules.compiled();
    for (std::size_t i = 0; i < compiled.size(); ++i) {
        std::cmatch m;
        if (std::regex_search(raw_fragment.data(), raw_fragment.data() + raw_fragment.size(), m, compiled[i]))
            return classification_from(rules.rules()[i], m);
    }
    return {};
}

std::string normalize_volatile(std::string_view text)
{
    static const std::regex iso_ts(R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2})?)");
    static const std::regex clock(R"(\b\d{1,2}:\d{2}:\d{2}(?:[.,]\d+)?\b)");
    static const std::regex abs_path(R"((^|[\s"'(=\[])(?:/[^\s/:"'()\[\]]+)+/([^\s/:"'()\[\]]+))");
    static const std::regex hex(R"(\b0x[0-9a-fA-F]+\b)");
    static const std::regex identity_hash(R"(@[0-9a-f]{5,}\b)");
    static const std::regex duration(R"(\b\d+(?:\.\d+)?[ \t]*(?:ms|s|sec|secs|seconds|min)\b)");

    std::string out(text);
    out = std::regex_replace(out, iso_ts, "<time>");
    out = std::regex_replace(out, clock, "<time>");
    out = std::regex_replace(out, abs_path, "$1$2");
    out = std::regex_replace(out, hex, "<addr>");
    out = std::regex_replace(out, identity_hash, "@<addr>");
    out = std::regex_replace(out, duration, "<duration>");
    return out;
}

std::string message_template(std::string_view message)
{
    static const std::regex digits(R"(\d+)");
    return std::regex_replace(normalize_volatile(message), digits, "#");
}

std::string fingerprint(FailureKind kind, std::string_view primary_symbol, std::string_view message,
                        const std::optional<SourceLocation>& location)
{
    std::string key(to_string(kind));
    key += '\x1f';
    key += primary_symbol;
    key += '\x1f';
    key += message_template(message);
    if (kind == FailureKind::RuntimeError && location) {
        key += '\x1f';
        key += location->file + ":" + std::to_string(location->line);
    }
    return std::string(to_string(kind)) + ":" + short_hash(key);
}

std::vector<FailureIndicator> scan_log(std::string_view log, Phase phase, const ClassifierRuleSet& rules,
                                       const ExtractionOptions& options)
{
    std::vector<FailureIndicator> out;
    const auto lines = split_lines(log);
    const auto& compiled = rules.compiled();

    std::size_t i = 0;
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        std::string window;
        for (std::size_t j = i; j < lines.size() && j < i + options.window_lines; ++j) {
            if (j > i)
                window += '\n';
            window.append(lines[j]);
        }

        bool matched = false;
        for (std::size_t r = 0; r < compiled.size(); ++r) {
            std::cmatch m;
            if (!std::regex_search(window.c_str(), window.c_str() + window.size(), m, compiled[r],
                                   std::regex_constants::match_continuous) ||
                m.length(0) == 0)
                continue;
            const auto& rule = rules.rules()[r];
            const std::string fragment = m[0].str();
            if (!rule.suppress) {
                auto c = classification_from(rule, m);
                if (c.kind == FailureKind::RuntimeError)
                    c.location = top_frame(fragment, options.exploit_files);
                out.push_back(make_indicator(c.kind, phase, fold_continuations(fragment), std::move(c.symbols),
                                             std::move(c.location)));
            }
            i += static_cast<std::size_t>(std::count(fragment.begin(), fragment.end(), '\n')) + 1;
            matched = true;
            break;
        }
        if (!matched)
            ++i;
    }
    return out;
}

std::vector<FailureIndicator> extract_failure_indicators(const ExecutionOutput& out_target,
                                                         const ExecutionOutput& out_reference,
                                                         const ClassifierRuleSet& rules,
                                                         const ExtractionOptions& options)
{
    if (!out_reference.report || out_reference.report->outcome != AssertionReport::Outcome::Failure)
        throw ConfigError("reference run does not reproduce: no failing assertion in its test report");

    std::set<std::string> reference_fps;
    for (const auto& p : out_reference.phases)
        for (const auto& ind : scan_log(p.log, p.phase, rules, options))
            reference_fps.insert(ind.fingerprint);

    std::vector<FailureIndicator> result;
    std::set<std::string> seen;
    auto add = [&](FailureIndicator ind) {
        if (reference_fps.contains(ind.fingerprint) || !seen.insert(ind.fingerprint).second)
            return false;
        result.push_back(std::move(ind));
        return true;
    };

    auto scan_failed_phase = [&](const PhaseOutcome& p) {
        bool any = false;
        for (auto& ind : scan_log(p.log, p.phase, rules, options))
            any = add(std::move(ind)) || any;
        if (!any && result.empty()) {
            std::string msg = p.status == PhaseStatus::Timeout
                                  ? std::string(to_string(p.phase)) + " phase timed out"
                                  : std::string(to_string(p.phase)) + " phase failed: " + last_meaningful_line(p.log);
            add(make_indicator(FailureKind::Other, p.phase, msg, {}, std::nullopt));
        }
    };

    const PhaseOutcome* build = out_target.phase(Phase::Build);
    if (!build) {
        add(make_indicator(FailureKind::Other, Phase::Build, "no build output", {}, std::nullopt));
        return result;
    }
    if (build->status != PhaseStatus::Ok) {
        scan_failed_phase(*build);
        return result;
    }

    const PhaseOutcome* runtime = out_target.phase(Phase::Runtime);
    if (runtime && runtime->status != PhaseStatus::Ok) {
        scan_failed_phase(*runtime);
        return result;
    }

    const AssertionReport& expected = *out_reference.report;
    const auto& observed = out_target.report;
    if (!observed || observed->outcome == AssertionReport::Outcome::Passed) {
        std::string msg = "expected assertion failure in " + expected.test_name() + " with message \"" +
                          expected.message + "\" but " +
                          (observed ? "the test passed without it" : "no test report was produced");
        add(make_indicator(FailureKind::AssertionMismatch, Phase::Assertion, msg, {expected.test_method},
                           std::nullopt));
    } else if (observed->outcome == AssertionReport::Outcome::Failure) {
        if (observed->test_name() != expected.test_name() ||
            message_template(observed->message) != message_template(expected.message)) {
            std::string msg = "expected assertion failure in " + expected.test_name() + " with message \"" +
                              expected.message + "\" but observed " + observed->test_name() +
                              " failing with \"" + observed->message + "\"";
            add(make_indicator(FailureKind::AssertionMismatch, Phase::Assertion, msg, {observed->test_method},
                               observed->location));
        }
    } else {
        // An erroring test the adapter did not flag at runtime: classify the reported stack.
        PhaseOutcome synthetic{Phase::Runtime, PhaseStatus::Failed,
                               observed->type + ": " + observed->message + "\n" + observed->stack};
        scan_failed_phase(synthetic);
    }
    return result;
}

std::vector<std::string> harvest_call_names(std::string_view source)
{
    static const std::regex call(R"((\bnew\s+)?\b([A-Za-z_$][\w$]*)\s*\()");
    static const std::set<std::string> keywords{
        "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "super", "this",
        "assert", "throw", "else", "do", "try", "sizeof", "function",
    };
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (auto it = std::cregex_iterator(source.data(), source.data() + source.size(), call);
         it != std::cregex_iterator(); ++it) {
        if ((*it)[1].matched)
            continue;
        auto name = (*it)[2].str();
        if (keywords.contains(name) || !seen.insert(name).second)
            continue;
        names.push_back(std::move(name));
    }
    return names;
}

std::string build_identifier_prompt(const FailureIndicator& indicator, std::string_view exploit_source)
{
    std::string prompt;
    prompt += "A vulnerability exploit fails on a new version of the library it targets.\n\n";
    prompt += "## Failure indicator (" + std::string(to_string(indicator.kind)) + ")\n";
    prompt += indicator.message;
    prompt += "\n\n## Exploit source\n";
    prompt += exploit_source;
    if (!exploit_source.empty() && exploit_source.back() != '\n')
        prompt += '\n';
    prompt += "\n## Task\n";
    prompt += "List the identifiers (method names, class names, exception types, configuration keys) that "
              "best capture this failure and are likely to appear in the library's source changes. Answer "
              "with a comma-separated list of identifiers and nothing else.\n";
    return prompt;
}

FailureIdentifierSet extract_identifiers(const FailureIndicator& indicator, LlmBackend* llm,
                                         std::string_view exploit_source, std::string_view location_line)
{
    FailureIdentifierSet result;
    if (trim(indicator.message).empty())
        return result;

    std::set<std::string> allowed;
    for (auto& t : tokenize(indicator.message))
        allowed.insert(std::move(t));
    for (auto& t : tokenize(exploit_source))
        allowed.insert(std::move(t));

    std::set<std::string> rule_tokens;
    for (const auto& symbol : indicator.symbols)
        for (auto& t : tokenize(simple_name(symbol)))
            if (allowed.contains(t))
                rule_tokens.insert(std::move(t));

    switch (indicator.kind) {
    case FailureKind::IncompatibleType:
    case FailureKind::WrongReturn:
        for (auto& name : harvest_call_names(location_line))
            if (allowed.contains(name))
                rule_tokens.insert(std::move(name));
        [[fallthrough]];
    case FailureKind::MissingClass:
    case FailureKind::MissingPackage:
    case FailureKind::MissingMethod:
        result.tokens = std::move(rule_tokens);
        result.origin = FailureIdentifierSet::Origin::Rule;
        return result;
    case FailureKind::RuntimeError:
    case FailureKind::AssertionMismatch:
    case FailureKind::Other:
        break;
    }

    if (llm) {
        try {
            LlmRequest request{LlmStage::Identify, build_identifier_prompt(indicator, exploit_source), {}};
            auto response = llm->complete(request);
            std::set<std::string> valid;
            for (auto& t : tokenize(response.text))
                if (allowed.contains(t))
                    valid.insert(std::move(t));
            if (!valid.empty()) {
                result.tokens = std::move(valid);
                result.origin = FailureIdentifierSet::Origin::Llm;
                return result;
            }
        } catch (const LlmError&) {
            // fall back to rule captures
        }
    }
    result.tokens = std::move(rule_tokens);
    result.origin = FailureIdentifierSet::Origin::Rule;
    return result;
}

} // namespace exmig
