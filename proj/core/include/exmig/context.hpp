#pragma once

#include <exmig/diff.hpp>
#include <exmig/failure.hpp>

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace exmig {

enum class DiffOrigin { Cause, Support, Combo };

std::string_view to_string(DiffOrigin origin);

/// A hunk, or a pair of hunks, with a mutable relevance score.
struct ScoredDiff {
    std::vector<std::string> hunk_ids; // combos list constituents by score, highest first
    double score = 0.0;
    DiffOrigin origin = DiffOrigin::Cause;
    int penalty_count = 0;

    /// Order-independent identity: sorted hunk ids joined by '+'.
    std::string key() const;
    bool is_combo() const { return hunk_ids.size() > 1; }
};

/// Owns a parsed version diff and resolves hunk ids.
class HunkIndex {
public:
    HunkIndex() = default;
    explicit HunkIndex(std::vector<DiffFile> files);

    const std::vector<DiffFile>& files() const { return m_files; }
    const DiffHunk* find(const std::string& hunk_id) const;
    const DiffFile* file_of(const std::string& hunk_id) const;
    std::size_t hunk_count() const { return m_by_id.size(); }

private:
    std::vector<DiffFile> m_files;
    std::map<std::string, std::pair<std::size_t, std::size_t>> m_by_id;
};

struct MigrationContext {
    FailureIndicator indicator;
    FailureIdentifierSet identifiers;
    std::vector<ScoredDiff> causing;
    std::vector<ScoredDiff> supporting;
};

struct ContextOptions {
    double tau = 0.5;
    std::size_t anchor_window = kDefaultAnchorWindow;
    /// Dotted-name prefix -> source path prefix, tried before the plain '.' -> '/' mapping.
    std::map<std::string, std::string> path_aliases;
    /// File names (or path suffixes) treated as build manifests.
    std::vector<std::string> manifest_files{"pom.xml", "build.gradle", "build.gradle.kts", "manifest.txt"};
    /// Exploit source, for call-name harvesting under AssertionMismatch.
    std::string exploit_source;
    /// Method names from the assertion report's stack, if any.
    std::vector<std::string> stack_methods;
    bool no_causing = false;
    bool no_supporting = false;
};

/// Java-style method or constructor declaration on one line.
struct Declaration {
    std::string name;
    std::string type_part; // everything between modifiers/annotations and the name
};

std::optional<Declaration> parse_declaration(std::string_view line);

/// Methods a hunk changes: declarations on changed lines, else the nearest declaration
/// above a change inside the hunk, else the one named in the hunk header's section text.
std::set<std::string> touched_methods(const DiffHunk& hunk);

/// The MissingMethod signature pattern for one identifier token.
std::string missing_method_pattern(std::string_view token);

std::vector<ScoredDiff> extract_causing_diffs(const FailureIndicator& indicator,
                                              const FailureIdentifierSet& identifiers,
                                              const std::vector<DiffFile>& diff,
                                              const ContextOptions& options = {});

std::vector<ScoredDiff> extract_supporting_diffs(const FailureIdentifierSet& identifiers,
                                                 const std::vector<DiffFile>& diff, double tau,
                                                 std::size_t window = kDefaultAnchorWindow);

MigrationContext build_context(const FailureIndicator& indicator, const FailureIdentifierSet& identifiers,
                               const std::vector<DiffFile>& diff, const ContextOptions& options = {});

/// Candidates used when a context has no causing or supporting diffs: the hunks with the
/// most identifier-token occurrences, each scored 2.
std::vector<ScoredDiff> fallback_pool(const FailureIdentifierSet& identifiers, const std::vector<DiffFile>& diff,
                                      std::size_t limit = 10);

/// round(10 * sim), halves away from zero.
int similarity_score(double sim);

} // namespace exmig
