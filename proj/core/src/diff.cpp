#include <exmig/diff.hpp>
#include <exmig/errors.hpp>
#include <exmig/hash.hpp>

#include <algorithm>
#include <charconv>

namespace exmig {

namespace {

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::string unquote_path(std::string_view path)
{
    if (path.size() >= 2 && path.front() == '"' && path.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            if (path[i] == '\\' && i + 2 < path.size()) {
                ++i;
                switch (path[i]) {
                case 't': out += '\t'; break;
                case 'n': out += '\n'; break;
                default: out += path[i]; break;
                }
                continue;
            }
            out += path[i];
        }
        return out;
    }
    return std::string(path);
}

// "--- a/foo.c\t2022-01-01 ..." -> "foo.c"
std::string header_path(std::string_view rest, std::string_view strip_prefix)
{
    auto tab = rest.find('\t');
    if (tab != std::string_view::npos)
        rest = rest.substr(0, tab);
    std::string path = unquote_path(rest);
    if (path != kDevNull && starts_with(path, strip_prefix))
        path.erase(0, strip_prefix.size());
    return path;
}

bool parse_int(std::string_view s, std::size_t& pos, int& out)
{
    auto begin = s.data() + pos;
    auto end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr == begin)
        return false;
    pos += static_cast<std::size_t>(ptr - begin);
    return true;
}

// Parses "-a[,b]" or "+c[,d]"; a missing count means 1.
bool parse_range(std::string_view s, std::size_t& pos, char sign, int& start, int& count)
{
    if (pos >= s.size() || s[pos] != sign)
        return false;
    ++pos;
    if (!parse_int(s, pos, start))
        return false;
    count = 1;
    if (pos < s.size() && s[pos] == ',') {
        ++pos;
        if (!parse_int(s, pos, count))
            return false;
    }
    return start >= 0 && count >= 0;
}

bool parse_hunk_header(std::string_view line, DiffHunk& hunk)
{
    std::size_t pos = 0;
    if (!starts_with(line, "@@ "))
        return false;
    pos = 3;
    if (!parse_range(line, pos, '-', hunk.old_start, hunk.old_count))
        return false;
    if (pos >= line.size() || line[pos] != ' ')
        return false;
    ++pos;
    if (!parse_range(line, pos, '+', hunk.new_start, hunk.new_count))
        return false;
    if (line.substr(pos, 3) != " @@")
        return false;
    hunk.header = std::string(line);
    return true;
}

bool is_extended_header(std::string_view line)
{
    static constexpr std::string_view prefixes[] = {
        "index ",        "old mode ",       "new mode ",       "deleted file mode ",
        "new file mode ", "similarity index ", "dissimilarity index ", "rename from ",
        "rename to ",    "copy from ",      "copy to ",        "Binary files ",
        "GIT binary patch",
    };
    return std::any_of(std::begin(prefixes), std::end(prefixes),
                       [&](std::string_view p) { return starts_with(line, p); });
}

} // namespace

char prefix_char(LineKind kind) noexcept
{
    switch (kind) {
    case LineKind::Added: return '+';
    case LineKind::Removed: return '-';
    case LineKind::Context: return ' ';
    }
    return ' ';
}

const std::string& DiffHunk::path() const
{
    return file_path_new == kDevNull ? file_path_old : file_path_new;
}

std::string DiffHunk::section() const
{
    auto close = header.find("@@", 2);
    if (close == std::string::npos)
        return {};
    std::string rest = header.substr(close + 2);
    auto first = rest.find_first_not_of(" \t");
    if (first == std::string::npos)
        return {};
    auto last = rest.find_last_not_of(" \t\r");
    return rest.substr(first, last - first + 1);
}

std::string make_hunk_id(std::string_view path, std::string_view header, std::size_t ordinal)
{
    std::string key;
    key.reserve(path.size() + header.size() + 24);
    key.append(path).append("\n").append(header).append("\n").append(std::to_string(ordinal));
    return short_hash(key);
}

std::vector<DiffFile> parse_unified_diff(std::string_view text)
{
    std::vector<DiffFile> files;
    const auto lines = split_lines(text);

    DiffFile* current = nullptr;
    bool in_git_preamble = false;

    auto start_file = [&]() -> DiffFile& {
        files.emplace_back();
        current = &files.back();
        return *current;
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        const std::size_t line_no = i + 1;

        if (starts_with(line, "diff --git ")) {
            auto& file = start_file();
            file.preamble.emplace_back(line);
            auto rest = line.substr(11);
            auto sep = rest.find(" b/");
            if (sep != std::string_view::npos) {
                file.path_old = header_path(rest.substr(0, sep), "a/");
                file.path_new = header_path(rest.substr(sep + 1), "b/");
            }
            in_git_preamble = true;
            continue;
        }

        if (in_git_preamble && current && is_extended_header(line)) {
            current->preamble.emplace_back(line);
            if (starts_with(line, "new file mode "))
                current->path_old = std::string(kDevNull);
            else if (starts_with(line, "deleted file mode "))
                current->path_new = std::string(kDevNull);
            else if (starts_with(line, "rename from "))
                current->path_old = unquote_path(line.substr(12));
            else if (starts_with(line, "rename to "))
                current->path_new = unquote_path(line.substr(10));
            else if (starts_with(line, "Binary files ") || starts_with(line, "GIT binary patch"))
                current->binary = true;
            continue;
        }

        if (starts_with(line, "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1], "+++ ")) {
            // A non-git diff starts a new file at its "---" line; a git diff already did.
            if (!in_git_preamble || !current || !current->hunks.empty())
                start_file();
            current->preamble.emplace_back(line);
            current->preamble.emplace_back(lines[i + 1]);
            current->path_old = header_path(line.substr(4), "a/");
            current->path_new = header_path(lines[i + 1].substr(4), "b/");
            ++i;
            in_git_preamble = false;
            continue;
        }

        if (starts_with(line, "@@")) {
            if (!current)
                throw ParseError(line_no, "hunk header outside of a file section");
            in_git_preamble = false;

            DiffHunk hunk;
            if (!parse_hunk_header(line, hunk))
                throw ParseError(line_no, "malformed hunk header: " + std::string(line));
            hunk.file_path_old = current->path_old;
            hunk.file_path_new = current->path_new;
            hunk.ordinal = current->hunks.size();

            int old_left = hunk.old_count;
            int new_left = hunk.new_count;
            int old_no = hunk.old_start;
            int new_no = hunk.new_start;

            while (old_left > 0 || new_left > 0) {
                ++i;
                if (i >= lines.size())
                    throw ParseError(i + 1, "hunk body ends early: " + std::to_string(old_left) +
                                                " old and " + std::to_string(new_left) +
                                                " new lines missing");
                std::string_view body = lines[i];
                if (!body.empty() && body.front() == '\\') {
                    if (!hunk.lines.empty())
                        hunk.lines.back().no_newline_at_eof = true;
                    continue;
                }
                DiffLine dl;
                const char c = body.empty() ? '\0' : body.front();
                if (c == ' ' && old_left > 0 && new_left > 0) {
                    dl.kind = LineKind::Context;
                    dl.old_line_no = old_no++;
                    dl.new_line_no = new_no++;
                    --old_left;
                    --new_left;
                } else if (c == '-' && old_left > 0) {
                    dl.kind = LineKind::Removed;
                    dl.old_line_no = old_no++;
                    --old_left;
                } else if (c == '+' && new_left > 0) {
                    dl.kind = LineKind::Added;
                    dl.new_line_no = new_no++;
                    --new_left;
                } else {
                    throw ParseError(i + 1, "line does not fit hunk " + hunk.header +
                                                " (header counts disagree with body)");
                }
                dl.text = std::string(body.substr(1));
                hunk.lines.push_back(std::move(dl));
            }
            if (i + 1 < lines.size() && starts_with(lines[i + 1], "\\")) {
                ++i;
                if (!hunk.lines.empty())
                    hunk.lines.back().no_newline_at_eof = true;
            }
            if (hunk.lines.empty())
                throw ParseError(line_no, "empty hunk");

            hunk.hunk_id = make_hunk_id(hunk.path(), hunk.header, hunk.ordinal);
            current->hunks.push_back(std::move(hunk));
            continue;
        }

        if (current && !current->hunks.empty() && !line.empty() &&
            (line.front() == '+' || line.front() == '-' || line.front() == ' ')) {
            throw ParseError(line_no, "diff line outside of any hunk (header counts disagree with body)");
        }
        // Anything else (commit messages, "Only in" notes) is ignored, as patch(1) does.
    }
    return files;
}

std::string serialize_hunk(const DiffHunk& hunk)
{
    std::string out = hunk.header;
    out += '\n';
    for (const auto& line : hunk.lines) {
        out += prefix_char(line.kind);
        out += line.text;
        out += '\n';
        if (line.no_newline_at_eof)
            out += "\\ No newline at end of file\n";
    }
    return out;
}

std::string serialize_diff(std::span<const DiffFile> files)
{
    std::string out;
    for (const auto& file : files) {
        for (const auto& line : file.preamble) {
            out += line;
            out += '\n';
        }
        for (const auto& hunk : file.hunks)
            out += serialize_hunk(hunk);
    }
    return out;
}

TokenSequence tokenize(std::string_view line_text)
{
    TokenSequence tokens;
    std::string current;
    for (char c : line_text) {
        const bool word = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                          (c >= '0' && c <= '9') || c == '_';
        if (word) {
            current += c;
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b)
{
    if (a.empty() || b.empty())
        return 0;
    if (a.size() < b.size())
        std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

TokenSequence DiffBlock::tokens() const
{
    TokenSequence out;
    for (const auto& line : lines) {
        auto t = tokenize(line.text);
        out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
    }
    return out;
}

BlockSet extract_blocks(const DiffHunk& hunk, const std::set<std::string>& anchors, std::size_t window)
{
    BlockSet result;
    if (anchors.empty())
        return result;

    std::vector<std::size_t> anchor_lines;
    for (std::size_t i = 0; i < hunk.lines.size(); ++i) {
        for (const auto& token : tokenize(hunk.lines[i].text)) {
            if (anchors.contains(token)) {
                anchor_lines.push_back(i);
                break;
            }
        }
    }
    if (anchor_lines.empty())
        return result;

    std::size_t i = 0;
    while (i < hunk.lines.size()) {
        const LineKind kind = hunk.lines[i].kind;
        std::size_t j = i;
        while (j < hunk.lines.size() && hunk.lines[j].kind == kind)
            ++j;
        if (kind != LineKind::Context) {
            const std::size_t first = i;
            const std::size_t last = j - 1;
            std::size_t best = std::string::npos;
            for (auto a : anchor_lines) {
                std::size_t d = 0;
                if (a < first)
                    d = first - a;
                else if (a > last)
                    d = a - last;
                best = std::min(best, d);
            }
            if (best <= window) {
                DiffBlock block;
                block.kind = kind == LineKind::Added ? BlockKind::Added : BlockKind::Removed;
                block.lines.assign(hunk.lines.begin() + static_cast<std::ptrdiff_t>(first),
                                   hunk.lines.begin() + static_cast<std::ptrdiff_t>(j));
                block.hunk_ref = hunk.hunk_id;
                block.first_index = first;
                block.anchor_distance = best;
                (block.kind == BlockKind::Added ? result.added : result.removed).push_back(std::move(block));
            }
        }
        i = j;
    }
    return result;
}

double token_similarity(std::span<const std::string> a, std::span<const std::string> b)
{
    const std::size_t total = a.size() + b.size();
    if (total == 0)
        return 0.0;
    return 2.0 * static_cast<double>(lcs_length(a, b)) / static_cast<double>(total);
}

double block_similarity(const DiffBlock& b_plus, const DiffBlock& b_minus)
{
    const auto a = b_plus.tokens();
    const auto b = b_minus.tokens();
    return token_similarity(a, b);
}

} // namespace exmig
