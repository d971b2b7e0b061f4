#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exmig {

/// Path sentinel used by unified diffs for the missing side of a file add/delete.
inline constexpr std::string_view kDevNull = "/dev/null";

enum class LineKind { Added, Removed, Context };

char prefix_char(LineKind kind) noexcept;

struct DiffLine {
    LineKind kind = LineKind::Context;
    std::string text;                 // without the one-character prefix
    std::optional<int> old_line_no;   // set for removed and context lines
    std::optional<int> new_line_no;   // set for added and context lines
    bool no_newline_at_eof = false;   // followed by "\ No newline at end of file"
};

struct DiffHunk {
    std::string file_path_old;
    std::string file_path_new;
    std::string header; // the full "@@ -a,b +c,d @@ section" line
    int old_start = 0;
    int old_count = 0;
    int new_start = 0;
    int new_count = 0;
    std::vector<DiffLine> lines;
    std::size_t ordinal = 0; // position of the hunk within its file
    std::string hunk_id;

    /// Path that identifies the file: the new path unless the file was deleted.
    const std::string& path() const;

    /// Text after the closing "@@" of the header (git's function context), trimmed.
    std::string section() const;
};

struct DiffFile {
    std::string path_old;
    std::string path_new;
    std::vector<std::string> preamble; // "diff --git", "index", mode lines, "---"/"+++" exactly as read
    std::vector<DiffHunk> hunks;
    bool binary = false;

    bool is_added() const { return path_old == kDevNull; }
    bool is_deleted() const { return path_new == kDevNull; }
    const std::string& path() const { return is_deleted() ? path_old : path_new; }
};

/// Stable identifier for a hunk from (path, header, ordinal).
std::string make_hunk_id(std::string_view path, std::string_view header, std::size_t ordinal);

/// Parse git-style unified diff text. Throws ParseError on malformed hunks.
std::vector<DiffFile> parse_unified_diff(std::string_view text);

/// Serialize one hunk: header line plus prefixed body lines, each newline-terminated.
std::string serialize_hunk(const DiffHunk& hunk);

/// Serialize a parsed diff back to text (preamble + hunks).
std::string serialize_diff(std::span<const DiffFile> files);

// ---------------------------------------------------------------------------
// Token similarity

using TokenSequence = std::vector<std::string>;

/// Split on every character outside [A-Za-z0-9_], dropping empty fragments.
TokenSequence tokenize(std::string_view line_text);

/// Length of a longest common subsequence of two token sequences.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

enum class BlockKind { Added, Removed };

struct DiffBlock {
    BlockKind kind = BlockKind::Added;
    std::vector<DiffLine> lines;
    std::string hunk_ref;
    std::size_t first_index = 0; // index of the first line within the parent hunk
    std::size_t anchor_distance = 0;

    std::size_t last_index() const { return first_index + lines.size() - 1; }
    TokenSequence tokens() const;
};

struct BlockSet {
    std::vector<DiffBlock> added;
    std::vector<DiffBlock> removed;
};

/// Radius, in hunk lines, within which a block counts as near an anchor token.
inline constexpr std::size_t kDefaultAnchorWindow = 10;

/// Maximal same-prefix blocks of a hunk lying within `window` lines of an anchor token occurrence.
BlockSet extract_blocks(const DiffHunk& hunk, const std::set<std::string>& anchors,
                        std::size_t window = kDefaultAnchorWindow);

/// 2*|LCS| / (|a| + |b|) over the blocks' concatenated tokens; 0 when both are empty.
double block_similarity(const DiffBlock& b_plus, const DiffBlock& b_minus);
double token_similarity(std::span<const std::string> a, std::span<const std::string> b);

} // namespace exmig
