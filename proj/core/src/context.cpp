#include <exmig/context.hpp>

#include <algorithm>
#include <cmath>
#include <regex>

namespace exmig {

std::string_view to_string(DiffOrigin origin)
{
    switch (origin) {
    case DiffOrigin::Cause: return "cause";
    case DiffOrigin::Support: return "support";
    case DiffOrigin::Combo: return "combo";
    }
    return "cause";
}

std::string ScoredDiff::key() const
{
    std::vector<std::string> ids = hunk_ids;
    std::sort(ids.begin(), ids.end());
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty())
            out += '+';
        out += id;
    }
    return out;
}

HunkIndex::HunkIndex(std::vector<DiffFile> files)
    : m_files(std::move(files))
{
    for (std::size_t f = 0; f < m_files.size(); ++f)
        for (std::size_t h = 0; h < m_files[f].hunks.size(); ++h)
            m_by_id.emplace(m_files[f].hunks[h].hunk_id, std::make_pair(f, h));
}

const DiffHunk* HunkIndex::find(const std::string& hunk_id) const
{
    auto it = m_by_id.find(hunk_id);
    if (it == m_by_id.end())
        return nullptr;
    return &m_files[it->second.first].hunks[it->second.second];
}

const DiffFile* HunkIndex::file_of(const std::string& hunk_id) const
{
    auto it = m_by_id.find(hunk_id);
    return it == m_by_id.end() ? nullptr : &m_files[it->second.first];
}

int similarity_score(double sim)
{
    return static_cast<int>(std::lround(10.0 * sim));
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kStatementKeywords{
    "return", "new", "throw", "else", "case", "if", "while", "for", "switch", "catch",
    "synchronized", "assert", "do", "try", "yield", "import", "package",
};

const std::set<std::string> kModifiers{
    "public", "private", "protected", "static", "final", "abstract", "native",
    "synchronized", "default", "strictfp", "transient", "volatile",
};

std::string strip_modifiers(const std::string& words)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < words.size()) {
        auto b = words.find_first_not_of(" \t", pos);
        if (b == std::string::npos)
            break;
        auto e = words.find_first_of(" \t", b);
        if (e == std::string::npos)
            e = words.size();
        auto w = words.substr(b, e - b);
        if (!kModifiers.contains(w)) {
            if (!out.empty())
                out += ' ';
            out += w;
        }
        pos = e;
    }
    return out;
}

bool is_changed(const DiffLine& line)
{
    return line.kind != LineKind::Context;
}

std::string stem_of(std::string_view path)
{
    auto slash = path.find_last_of('/');
    auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
    auto dot = name.find('.');
    return std::string(dot == std::string_view::npos ? name : name.substr(0, dot));
}

std::string dir_of(std::string_view path)
{
    auto slash = path.find_last_of('/');
    return slash == std::string_view::npos ? std::string() : std::string(path.substr(0, slash));
}

std::string without_extension(std::string_view path)
{
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash))
        return std::string(path);
    return std::string(path.substr(0, dot));
}

bool has_path_suffix(std::string_view path, std::string_view suffix)
{
    if (suffix.empty() || !path.ends_with(suffix))
        return false;
    return path.size() == suffix.size() || path[path.size() - suffix.size() - 1] == '/';
}

std::vector<std::string> file_paths(const DiffFile& file)
{
    std::vector<std::string> paths;
    if (file.path_old != kDevNull)
        paths.push_back(file.path_old);
    if (file.path_new != kDevNull && file.path_new != file.path_old)
        paths.push_back(file.path_new);
    return paths;
}

/// Candidate source paths for a dotted name.
std::vector<std::string> dotted_to_paths(const std::string& dotted, const std::map<std::string, std::string>& aliases)
{
    std::vector<std::string> out;
    auto plain = [](std::string s) {
        std::replace(s.begin(), s.end(), '.', '/');
        return s;
    };
    for (const auto& [prefix, path] : aliases) {
        if (dotted == prefix) {
            out.push_back(path);
        } else if (dotted.size() > prefix.size() && dotted.starts_with(prefix) && dotted[prefix.size()] == '.') {
            auto rest = plain(dotted.substr(prefix.size() + 1));
            out.push_back(path.empty() ? rest : path + "/" + rest);
        }
    }
    out.push_back(plain(dotted));
    while (!out.empty() && out.back().empty())
        out.pop_back();
    return out;
}

bool file_matches_package(const DiffFile& file, const std::vector<std::string>& symbols,
                          const std::set<std::string>& tokens, const ContextOptions& options)
{
    for (const auto& path : file_paths(file)) {
        const auto dir = dir_of(path);
        if (!symbols.empty()) {
            for (const auto& sym : symbols)
                for (const auto& candidate : dotted_to_paths(sym, options.path_aliases))
                    if (has_path_suffix(dir, candidate))
                        return true;
        } else {
            auto slash = dir.find_last_of('/');
            auto last = slash == std::string::npos ? dir : dir.substr(slash + 1);
            if (tokens.contains(last))
                return true;
        }
    }
    return false;
}

bool file_matches_class(const DiffFile& file, const std::vector<std::string>& symbols,
                        const std::set<std::string>& tokens, const ContextOptions& options)
{
    for (const auto& path : file_paths(file)) {
        const auto bare = without_extension(path);
        if (!symbols.empty()) {
            for (const auto& sym : symbols)
                for (const auto& candidate : dotted_to_paths(sym, options.path_aliases))
                    if (has_path_suffix(bare, candidate))
                        return true;
        } else if (tokens.contains(stem_of(path))) {
            return true;
        }
    }
    return false;
}

bool is_manifest(const DiffFile& file, const ContextOptions& options)
{
    for (const auto& path : file_paths(file))
        for (const auto& m : options.manifest_files)
            if (has_path_suffix(path, m))
                return true;
    return false;
}

std::set<std::string> hunk_tokens(const DiffHunk& hunk)
{
    std::set<std::string> out;
    for (const auto& line : hunk.lines)
        for (auto& t : tokenize(line.text))
            out.insert(std::move(t));
    return out;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b)
{
    return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.contains(x); });
}

std::set<std::string> changed_declaration_names(const DiffHunk& hunk, const std::set<std::string>* type_tokens)
{
    std::set<std::string> out;
    for (const auto& line : hunk.lines) {
        if (!is_changed(line))
            continue;
        auto decl = parse_declaration(line.text);
        if (!decl)
            continue;
        if (type_tokens) {
            for (const auto& t : tokenize(decl->type_part))
                if (type_tokens->contains(t))
                    out.insert(decl->name);
        } else {
            out.insert(decl->name);
        }
    }
    return out;
}

void sort_descending(std::vector<ScoredDiff>& diffs)
{
    std::stable_sort(diffs.begin(), diffs.end(),
                     [](const ScoredDiff& a, const ScoredDiff& b) { return a.score > b.score; });
}

} // namespace

std::optional<Declaration> parse_declaration(std::string_view line)
{
    static const std::regex decl(
        R"(^\s*(?:@[\w.]+(?:\([^)]*\))?\s+)*((?:[\w$.<>\[\]?,]+\s+)+)([A-Za-z_$][\w$]*)\s*\()");
    std::cmatch m;
    if (!std::regex_search(line.data(), line.data() + line.size(), m, decl))
        return std::nullopt;
    const std::string words = m[1].str();
    auto first_end = words.find_first_of(" \t");
    const std::string first = words.substr(0, first_end);
    if (kStatementKeywords.contains(first) && first != "synchronized")
        return std::nullopt;
    if (first == "synchronized" && words.find_first_not_of(" \t", first_end) == std::string::npos)
        return std::nullopt; // synchronized (lock) {
    const std::string name = m[2].str();
    if (kStatementKeywords.contains(name) && name != "synchronized")
        return std::nullopt;
    return Declaration{name, strip_modifiers(words)};
}

std::set<std::string> touched_methods(const DiffHunk& hunk)
{
    std::set<std::string> out;
    std::optional<std::string> section_decl;
    if (auto d = parse_declaration(hunk.section()))
        section_decl = d->name;

    std::optional<std::string> nearest;
    for (const auto& line : hunk.lines) {
        auto decl = parse_declaration(line.text);
        if (decl)
            nearest = decl->name;
        if (!is_changed(line))
            continue;
        if (decl)
            out.insert(decl->name);
        else if (nearest)
            out.insert(*nearest);
        else if (section_decl)
            out.insert(*section_decl);
    }
    return out;
}

std::string missing_method_pattern(std::string_view token)
{
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    const std::string escaped = std::regex_replace(std::string(token), special, R"(\$&)");
    return R"(\b\w[\w\s<>,]*\s+)" + escaped + R"(\s*\()";
}

std::vector<ScoredDiff> extract_causing_diffs(const FailureIndicator& indicator,
                                              const FailureIdentifierSet& identifiers,
                                              const std::vector<DiffFile>& diff, const ContextOptions& options)
{
    const auto& k = identifiers.tokens;
    std::vector<ScoredDiff> out;
    auto add = [&](const DiffHunk& hunk, double score) {
        out.push_back(ScoredDiff{{hunk.hunk_id}, score, DiffOrigin::Cause, 0});
    };

    switch (indicator.kind) {
    case FailureKind::MissingPackage:
    case FailureKind::MissingClass: {
        const bool package = indicator.kind == FailureKind::MissingPackage;
        for (const auto& file : diff) {
            const bool hit = package ? file_matches_package(file, indicator.symbols, k, options)
                                     : file_matches_class(file, indicator.symbols, k, options);
            if (hit)
                for (const auto& hunk : file.hunks)
                    add(hunk, 10);
        }
        break;
    }
    case FailureKind::MissingMethod: {
        std::vector<std::regex> patterns;
        for (const auto& token : k)
            patterns.emplace_back(missing_method_pattern(token));
        for (const auto& file : diff) {
            for (const auto& hunk : file.hunks) {
                const bool hit = std::any_of(hunk.lines.begin(), hunk.lines.end(), [&](const DiffLine& line) {
                    if (line.kind == LineKind::Added)
                        return false;
                    return std::any_of(patterns.begin(), patterns.end(),
                                       [&](const std::regex& re) { return std::regex_search(line.text, re); });
                });
                if (hit)
                    add(hunk, 10);
            }
        }
        break;
    }
    case FailureKind::IncompatibleType:
    case FailureKind::WrongReturn: {
        for (const auto& file : diff)
            for (const auto& hunk : file.hunks)
                if (intersects(changed_declaration_names(hunk, nullptr), k))
                    add(hunk, 10);
        if (out.empty()) {
            for (const auto& file : diff)
                for (const auto& hunk : file.hunks)
                    if (!changed_declaration_names(hunk, &k).empty())
                        add(hunk, 10);
        }
        break;
    }
    case FailureKind::RuntimeError: {
        for (const auto& file : diff) {
            const bool manifest = is_manifest(file, options);
            const auto paths = file_paths(file);
            const bool stem_hit = std::any_of(paths.begin(), paths.end(),
                                              [&](const std::string& p) { return k.contains(stem_of(p)); });
            for (const auto& hunk : file.hunks) {
                bool hit = stem_hit || intersects(changed_declaration_names(hunk, nullptr), k) ||
                           intersects(touched_methods(hunk), k);
                if (!hit && manifest)
                    hit = intersects(hunk_tokens(hunk), k);
                if (hit)
                    add(hunk, 10);
            }
        }
        break;
    }
    case FailureKind::AssertionMismatch: {
        std::set<std::string> calls;
        for (auto& name : harvest_call_names(options.exploit_source))
            calls.insert(std::move(name));
        calls.insert(options.stack_methods.begin(), options.stack_methods.end());
        std::set<std::string> targets;
        for (const auto& c : calls)
            if (k.contains(c))
                targets.insert(c);
        if (targets.empty())
            break;
        for (const auto& file : diff)
            for (const auto& hunk : file.hunks)
                if (intersects(touched_methods(hunk), targets))
                    add(hunk, 10);
        break;
    }
    case FailureKind::Other: {
        for (const auto& file : diff) {
            for (const auto& hunk : file.hunks) {
                const auto tokens = hunk_tokens(hunk);
                const auto found = std::count_if(k.begin(), k.end(),
                                                 [&](const std::string& t) { return tokens.contains(t); });
                if (found > 0)
                    add(hunk, 2.0 * static_cast<double>(found));
            }
        }
        break;
    }
    }
    sort_descending(out);
    return out;
}

std::vector<ScoredDiff> extract_supporting_diffs(const FailureIdentifierSet& identifiers,
                                                 const std::vector<DiffFile>& diff, double tau, std::size_t window)
{
    std::vector<ScoredDiff> out;
    if (identifiers.tokens.empty())
        return out;
    for (const auto& file : diff) {
        for (const auto& hunk : file.hunks) {
            const auto blocks = extract_blocks(hunk, identifiers.tokens, window);
            double best = -1.0;
            for (const auto& plus : blocks.added)
                for (const auto& minus : blocks.removed)
                    best = std::max(best, block_similarity(plus, minus));
            if (best > tau)
                out.push_back(ScoredDiff{{hunk.hunk_id}, static_cast<double>(similarity_score(best)),
                                         DiffOrigin::Support, 0});
        }
    }
    sort_descending(out);
    return out;
}

MigrationContext build_context(const FailureIndicator& indicator, const FailureIdentifierSet& identifiers,
                               const std::vector<DiffFile>& diff, const ContextOptions& options)
{
    MigrationContext ctx;
    ctx.indicator = indicator;
    ctx.identifiers = identifiers;
    if (!options.no_causing)
        ctx.causing = extract_causing_diffs(indicator, identifiers, diff, options);
    if (!options.no_supporting)
        ctx.supporting = extract_supporting_diffs(identifiers, diff, options.tau, options.anchor_window);
    return ctx;
}

std::vector<ScoredDiff> fallback_pool(const FailureIdentifierSet& identifiers, const std::vector<DiffFile>& diff,
                                      std::size_t limit)
{
    std::vector<std::pair<std::size_t, const DiffHunk*>> counted;
    for (const auto& file : diff) {
        for (const auto& hunk : file.hunks) {
            std::size_t n = 0;
            for (const auto& line : hunk.lines)
                for (const auto& t : tokenize(line.text))
                    n += identifiers.tokens.contains(t) ? 1 : 0;
            if (n > 0)
                counted.emplace_back(n, &hunk);
        }
    }
    std::stable_sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ScoredDiff> out;
    for (std::size_t i = 0; i < counted.size() && i < limit; ++i)
        out.push_back(ScoredDiff{{counted[i].second->hunk_id}, 2.0, DiffOrigin::Cause, 0});
    return out;
}

} // namespace exmig
