#pragma once

#include <exmig/context.hpp>
#include <exmig/failure.hpp>
#include <exmig/migration.hpp>
#include <exmig/validation.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace exmig {

inline constexpr int kReportSchemaVersion = 1;

enum class Verdict { Success, Failure, Error };

std::string_view to_string(Verdict verdict);
Verdict parse_verdict(std::string_view text);

struct CandidateRecord {
    std::vector<std::string> hunk_ids;
    double score = 0.0;
    DiffOrigin origin = DiffOrigin::Cause;
};

struct IndicatorRecord {
    std::string fingerprint;
    FailureKind kind = FailureKind::Other;
    Phase phase = Phase::Build;
    std::string message;
};

/// One annealing search for one failure indicator.
struct SearchRecord {
    std::string id;
    int depth = 0; // 0 for the main loop, 1 for failures that emerged during an attempt
    IndicatorRecord indicator;
    std::vector<std::string> identifiers;
    std::string identifier_origin;
    std::vector<CandidateRecord> causing;
    std::vector<CandidateRecord> supporting;
    std::vector<CandidateRecord> fallback;
    std::string termination; // resolved, temperature_floor, timeout, exhausted, budget
    bool resolved = false;
};

/// One LLM-backed step: localize plus adapt, then re-run and judge.
struct AttemptRecord {
    int step = 0;
    std::string search_id;
    int depth = 0;
    CandidateRecord candidate;
    double probability = 1.0;
    std::size_t candidates = 0;
    double temperature = 0.0;
    int exploration_depth = 1;
    std::optional<EditLocation> localization;
    std::vector<std::string> edited_files;
    long input_tokens = 0;
    long output_tokens = 0;
    std::string outcome; // resolved, unresolved, new_failures, fully_migrated, error
    std::vector<std::string> emergent;
    std::string note;
};

struct VersionReport {
    std::string target;
    std::string reference;
    Verdict verdict = Verdict::Error;
    std::string diagnostic;
    bool timed_out = false; // the per-version time budget ran out with failures left
    int steps = 0;
    std::vector<IndicatorRecord> initial_indicators;
    std::vector<IndicatorRecord> remaining_indicators;
    std::vector<SearchRecord> searches;
    std::vector<AttemptRecord> attempts;
    long input_tokens = 0;
    long output_tokens = 0;
    std::optional<ReproductionCheck> reproduction;
    std::map<std::string, std::string> final_files; // success only
    double wall_time_s = 0.0;                       // not part of the canonical document
};

struct AggregateStats {
    std::size_t targets = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    std::size_t errors = 0;
    std::optional<double> success_rate;  // absent when there are no targets
    std::optional<double> average_steps; // failures and errors count as the default
    int failure_default_steps = 30;
};

AggregateStats aggregate(const std::vector<VersionReport>& versions, int failure_default_steps = 30);

struct MigrationReport {
    int schema_version = kReportSchemaVersion;
    nlohmann::json settings = nlohmann::json::object();
    std::vector<VersionReport> versions;
    AggregateStats aggregate;
};

/// Canonical document: sorted keys, no wall-clock values unless asked for.
nlohmann::json to_json(const MigrationReport& report, bool include_wall_time = false);
MigrationReport report_from_json(const nlohmann::json& doc);

/// Serialized canonical text (two-space indent, trailing newline).
std::string dump_report(const MigrationReport& report, bool include_wall_time = false);

/// Human-readable summary table.
std::string render_summary(const MigrationReport& report, bool include_wall_time = true);

} // namespace exmig
