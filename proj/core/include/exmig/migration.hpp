#pragma once

#include <exmig/context.hpp>
#include <exmig/exploit.hpp>
#include <exmig/llm.hpp>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace exmig {

/// Prompt size cap in tokens (estimated at four characters per token).
inline constexpr std::size_t kPromptCapTokens = 12000;

std::string_view prompt_template_version();

struct EditLocation {
    std::string file;
    int first_line = 1;
    int last_line = 1;
    bool clamped = false;
    std::string warning;

    std::string to_string() const;
};

/// Assemble the localize or adapt prompt. `location` is used by the adapt stage only.
std::string build_prompt(const MigrationContext& context, const ScoredDiff& diff, const Exploit& exploit,
                         LlmStage stage, const HunkIndex& index, const EditLocation* location = nullptr,
                         std::size_t cap_tokens = kPromptCapTokens);

/// Keep only hunk lines within `radius` of an anchor-token line; gaps become "..." lines.
std::string truncate_around_anchors(const DiffHunk& hunk, const std::set<std::string>& anchors, std::size_t radius);

/// Interpret a "path:line[-end]" answer. Anything unusable clamps to the whole entry file.
EditLocation parse_location(std::string_view answer, const Exploit& exploit);

struct FencedBlock {
    std::string info;
    std::string path; // empty when the info string names no file
    std::string body;
};

std::vector<FencedBlock> parse_fenced_blocks(std::string_view text);

struct AdaptResult {
    bool accepted = false;
    std::string rejection;
    Exploit exploit;                   // edited exploit when accepted, else the input
    std::vector<std::string> changed;  // exploit paths whose content changed
    long input_tokens = 0;
    long output_tokens = 0;
};

/// Apply an adapt-stage response through the sanity gate.
AdaptResult apply_adaptation(std::string_view response, const Exploit& exploit, const EditLocation& location);

struct LocalizeResult {
    EditLocation location;
    long input_tokens = 0;
    long output_tokens = 0;
};

/// Both throw LlmError when the backend fails.
LocalizeResult localize_edit(LlmBackend& llm, const MigrationContext& context, const ScoredDiff& diff,
                             const Exploit& exploit, const HunkIndex& index,
                             std::optional<std::chrono::milliseconds> timeout = std::nullopt);

AdaptResult adapt_exploit(LlmBackend& llm, const MigrationContext& context, const ScoredDiff& diff,
                          const Exploit& exploit, const EditLocation& location, const HunkIndex& index,
                          std::optional<std::chrono::milliseconds> timeout = std::nullopt);

} // namespace exmig
