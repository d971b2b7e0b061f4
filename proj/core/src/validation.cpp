#include <exmig/errors.hpp>
#include <exmig/validation.hpp>

#include <algorithm>
#include <deque>
#include <regex>

namespace exmig {

std::string_view to_string(VerdictKind kind)
{
    switch (kind) {
    case VerdictKind::Resolved: return "resolved";
    case VerdictKind::Unresolved: return "unresolved";
    case VerdictKind::NewFailures: return "new_failures";
    case VerdictKind::FullyMigrated: return "fully_migrated";
    }
    return "unresolved";
}

AttemptVerdict judge_attempt(const std::string& target_fp, const FingerprintSet& before, const FingerprintSet& after)
{
    if (after.contains(target_fp))
        return {VerdictKind::Unresolved, {}};
    if (after.empty())
        return {VerdictKind::FullyMigrated, {}};
    FingerprintSet emergent;
    std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                        std::inserter(emergent, emergent.end()));
    if (emergent.empty())
        return {VerdictKind::Resolved, {}};
    return {VerdictKind::NewFailures, std::move(emergent)};
}

bool ReproductionCheck::ok() const
{
    return assertion_matched && assertion_location_matched &&
           std::all_of(markers_matched.begin(), markers_matched.end(), [](bool b) { return b; });
}

ReproductionCheck verify_reproduction(const ExecutionOutput& output, const ExecutionOutput& reference_output,
                                      const AssertionSpec& spec)
{
    ReproductionCheck check;
    check.markers_matched.assign(spec.markers.size(), false);
    const auto& report = output.report;
    if (!output.build_ok() || !report || report->outcome != AssertionReport::Outcome::Failure)
        return check;

    const bool class_ok = spec.test_class.empty() || report->test_class == spec.test_class;
    const bool method_ok = spec.test_method.empty() || report->test_method == spec.test_method;
    check.assertion_matched =
        class_ok && method_ok && message_template(report->message) == message_template(spec.message);

    const auto& ref = reference_output.report;
    check.assertion_location_matched = ref && ref->test_class == report->test_class &&
                                       ref->test_method == report->test_method;

    const std::string log = output.full_log();
    for (std::size_t i = 0; i < spec.markers.size(); ++i) {
        try {
            check.markers_matched[i] = std::regex_search(log, std::regex(spec.markers[i]));
        } catch (const std::regex_error&) {
            throw ConfigError("invalid behavioral marker regex: " + spec.markers[i]);
        }
    }
    return check;
}

bool handle_new_failures(const FingerprintSet& emergent, int depth_budget,
                         const std::function<AttemptVerdict(const std::string&)>& attempt,
                         const std::function<bool(const std::string&)>& still_present)
{
    std::deque<std::string> work(emergent.begin(), emergent.end());
    int budget = depth_budget;
    while (!work.empty()) {
        const std::string fp = work.front();
        if (still_present && !still_present(fp)) {
            work.pop_front();
            continue;
        }
        if (budget <= 0)
            return false;
        --budget;
        const AttemptVerdict v = attempt(fp);
        switch (v.kind) {
        case VerdictKind::Resolved:
        case VerdictKind::FullyMigrated:
            work.pop_front();
            break;
        case VerdictKind::Unresolved:
            break;
        case VerdictKind::NewFailures:
            work.pop_front();
            for (const auto& e : v.emergent)
                if (std::find(work.begin(), work.end(), e) == work.end())
                    work.push_back(e);
            break;
        }
    }
    return true;
}

} // namespace exmig
