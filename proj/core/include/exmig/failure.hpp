#pragma once

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace exmig {

class LlmBackend;

enum class Phase { Build, Runtime, Assertion };
enum class PhaseStatus { Ok, Failed, Timeout };

std::string_view to_string(Phase phase);
std::string_view to_string(PhaseStatus status);

struct SourceLocation {
    std::string file;
    int line = 0;

    friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

/// One test result from the adapter's structured test report.
struct AssertionReport {
    enum class Outcome { Passed, Failure, Error };

    std::string test_class;
    std::string test_method;
    Outcome outcome = Outcome::Passed;
    std::string message;
    std::string type;  // exception type for failures and errors
    std::string stack; // raw stack trace text
    std::optional<SourceLocation> location;

    std::string test_name() const { return test_class + "." + test_method; }
};

struct PhaseOutcome {
    Phase phase = Phase::Build;
    PhaseStatus status = PhaseStatus::Ok;
    std::string log;
};

/// Phased result of one exploit execution. Phases appear in build, runtime, assertion
/// order; a phase that failed or timed out is the last one present.
struct ExecutionOutput {
    std::vector<PhaseOutcome> phases;
    double duration_s = 0.0;
    int exit_status = 0;
    std::optional<AssertionReport> report;

    const PhaseOutcome* phase(Phase p) const;
    bool timed_out() const;
    bool build_ok() const;
    /// All phase logs concatenated in phase order.
    std::string full_log() const;
};

enum class FailureKind {
    AssertionMismatch,
    RuntimeError,
    MissingClass,
    MissingPackage,
    MissingMethod,
    IncompatibleType,
    WrongReturn,
    Other,
};

std::string_view to_string(FailureKind kind);
FailureKind parse_failure_kind(std::string_view text);

struct FailureIndicator {
    FailureKind kind = FailureKind::Other;
    Phase phase = Phase::Build;
    std::string message; // volatile-normalized fragment text
    std::vector<std::string> symbols;
    std::optional<SourceLocation> location;
    std::string fingerprint;

    const std::string& primary_symbol() const;
};

struct FailureIdentifierSet {
    enum class Origin { Rule, Llm };

    std::set<std::string> tokens;
    Origin origin = Origin::Rule;
};

std::string_view to_string(FailureIdentifierSet::Origin origin);

struct ClassifierRule {
    std::string pattern;
    FailureKind kind = FailureKind::Other;
    std::vector<int> symbol_groups;
    int file_group = 0;  // 0 = none
    int line_group = 0;  // 0 = none
    bool suppress = false; // consume the fragment without reporting it
};

/// Ordered log-fragment classifier; the first rule matching at a line wins.
class ClassifierRuleSet {
public:
    ClassifierRuleSet() = default;
    explicit ClassifierRuleSet(std::vector<ClassifierRule> rules);

    /// Rules for javac / Maven / surefire output.
    static ClassifierRuleSet maven();
    static ClassifierRuleSet from_json(const nlohmann::json& rules);

    const std::vector<ClassifierRule>& rules() const { return m_rules; }
    const std::vector<std::regex>& compiled() const { return m_compiled; }
    bool empty() const { return m_rules.empty(); }

private:
    std::vector<ClassifierRule> m_rules;
    std::vector<std::regex> m_compiled;
};

struct Classification {
    FailureKind kind = FailureKind::Other;
    std::vector<std::string> symbols;
    std::optional<SourceLocation> location;
    bool suppressed = false;
};

/// Classify one fragment: first rule matching anywhere in it, else Other with no captures.
Classification classify(std::string_view raw_fragment, const ClassifierRuleSet& rules);

/// Strip timestamps, absolute paths, hex addresses and durations.
std::string normalize_volatile(std::string_view text);

/// Stable key for a failure. Runtime errors also key on their top in-exploit frame.
std::string fingerprint(FailureKind kind, std::string_view primary_symbol, std::string_view message,
                        const std::optional<SourceLocation>& location = std::nullopt);

/// Message with volatile content and all digit runs removed.
std::string message_template(std::string_view message);

struct ExtractionOptions {
    /// Basenames of exploit-owned source files, used to pick the top in-exploit stack frame.
    std::set<std::string> exploit_files;
    /// Number of log lines a single diagnostic may span.
    std::size_t window_lines = 32;
};

/// Split one log into classified indicators, one per diagnostic fragment.
std::vector<FailureIndicator> scan_log(std::string_view log, Phase phase, const ClassifierRuleSet& rules,
                                       const ExtractionOptions& options = {});

/// Discrepancies between a target run and a reproducing reference run, ordered
/// build -> runtime -> assertion and deduplicated by fingerprint. Throws ConfigError
/// when the reference run does not show a failing assertion.
std::vector<FailureIndicator> extract_failure_indicators(const ExecutionOutput& out_target,
                                                         const ExecutionOutput& out_reference,
                                                         const ClassifierRuleSet& rules,
                                                         const ExtractionOptions& options = {});

/// Call-expression names in source text (keywords excluded), in first-occurrence order.
std::vector<std::string> harvest_call_names(std::string_view source);

/// Derive the failure identifier set. Structured kinds use rule captures (type errors also
/// take the call names on `location_line`, the exploit line the diagnostic points at); the
/// rest ask `llm` (may be null) and keep only tokens that occur in the indicator message or
/// the exploit source, falling back to rule captures.
FailureIdentifierSet extract_identifiers(const FailureIndicator& indicator, LlmBackend* llm,
                                         std::string_view exploit_source,
                                         std::string_view location_line = {});

/// Prompt asking the model for salient identifiers of a failure.
std::string build_identifier_prompt(const FailureIndicator& indicator, std::string_view exploit_source);

} // namespace exmig
