#pragma once

#include <exmig/exploit.hpp>
#include <exmig/failure.hpp>

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace exmig {

enum class VerdictKind { Resolved, Unresolved, NewFailures, FullyMigrated };

std::string_view to_string(VerdictKind kind);

struct AttemptVerdict {
    VerdictKind kind = VerdictKind::Unresolved;
    std::set<std::string> emergent; // NewFailures only: after \ before

    friend bool operator==(const AttemptVerdict&, const AttemptVerdict&) = default;
};

using FingerprintSet = std::set<std::string>;

/// Outcome of one attempt at the failure `target_fp`, given the failure sets before and after it.
/// FullyMigrated means no failures remain; reproduction still has to be verified.
AttemptVerdict judge_attempt(const std::string& target_fp, const FingerprintSet& before, const FingerprintSet& after);

struct ReproductionCheck {
    bool assertion_matched = false;
    bool assertion_location_matched = false;
    std::vector<bool> markers_matched;

    bool ok() const;
};

ReproductionCheck verify_reproduction(const ExecutionOutput& output, const ExecutionOutput& reference_output,
                                      const AssertionSpec& spec);

/// Work through failures that emerged from an otherwise successful attempt.
///
/// Every call of `attempt` costs one unit of `depth_budget`. A failure answered with
/// Unresolved is retried; one answered with NewFailures is replaced by its own emergent
/// failures. Returns false as soon as work remains with no budget left. The caller owns
/// reverting the exploit when this returns false.
bool handle_new_failures(const FingerprintSet& emergent, int depth_budget,
                         const std::function<AttemptVerdict(const std::string& fingerprint)>& attempt,
                         const std::function<bool(const std::string& fingerprint)>& still_present = {});

} // namespace exmig
