#include <exmig/migration.hpp>

#include <algorithm>
#include <regex>

namespace exmig {

namespace {
#include "prompt_template_v1.inc"

constexpr std::size_t kMaxSupportingInPrompt = 3;

std::string fill(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& values)
{
    std::string out(tmpl);
    for (const auto& [name, value] : values) {
        const std::string key = "{{" + std::string(name) + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    }
    return out;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

int line_count(const std::string& text)
{
    if (text.empty())
        return 0;
    int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    return text.back() == '\n' ? n : n + 1;
}

std::string numbered(const std::string& text)
{
    std::string out;
    int no = 1;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        auto label = std::to_string(no++);
        out += std::string(label.size() < 4 ? 4 - label.size() : 0, ' ') + label + "| " + line + "\n";
        if (nl == std::string::npos)
            break;
        pos = nl + 1;
    }
    return out;
}

std::string fence_language(const std::string& path)
{
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos)
        return "text";
    auto ext = path.substr(dot + 1);
    if (ext == "java")
        return "java";
    if (ext == "xml")
        return "xml";
    return "text";
}

std::string hunk_block(const HunkIndex& index, const std::string& id, const std::set<std::string>& anchors,
                       std::optional<std::size_t> radius)
{
    const DiffHunk* hunk = index.find(id);
    if (!hunk)
        return "(hunk " + id + " not found)\n";
    std::string out = "```diff\n--- a/" + hunk->file_path_old + "\n+++ b/" + hunk->file_path_new + "\n";
    out += radius ? truncate_around_anchors(*hunk, anchors, *radius) : serialize_hunk(*hunk);
    out += "```\n";
    return out;
}

std::string exploit_listing(const Exploit& exploit, LlmStage stage)
{
    std::string out;
    auto emit = [&](const std::string& path, const std::string& text) {
        out += "```" + fence_language(path) + " " + path + "\n";
        out += stage == LlmStage::Localize && path == exploit.entry ? numbered(text) : text;
        if (!out.empty() && out.back() != '\n')
            out += '\n';
        out += "```\n";
    };
    if (exploit.files.contains(exploit.entry))
        emit(exploit.entry, exploit.files.at(exploit.entry));
    for (const auto& [path, text] : exploit.files)
        if (path != exploit.entry)
            emit(path, text);
    return out;
}

std::string resolve_exploit_path(std::string_view raw, const Exploit& exploit)
{
    std::string p = trim(raw);
    while (!p.empty() && (p.front() == '"' || p.front() == '\'' || p.front() == '`'))
        p.erase(p.begin());
    while (!p.empty() && (p.back() == '"' || p.back() == '\'' || p.back() == '`' || p.back() == ','))
        p.pop_back();
    if (p.starts_with("./"))
        p = p.substr(2);
    if (p.starts_with("exploit/") && !exploit.owns(p))
        p = p.substr(8);
    if (exploit.owns(p))
        return p;
    std::string found;
    for (const auto& [path, text] : exploit.files) {
        const bool suffix = path.size() > p.size() && path.ends_with(p) && path[path.size() - p.size() - 1] == '/';
        if (suffix) {
            if (!found.empty())
                return {};
            found = path;
        }
    }
    return found;
}

bool looks_like_path(std::string_view token)
{
    return token.find('/') != std::string_view::npos || token.find('.') != std::string_view::npos;
}

} // namespace

std::string_view prompt_template_version()
{
    return kTemplateVersion;
}

std::string EditLocation::to_string() const
{
    if (first_line == last_line)
        return file + ":" + std::to_string(first_line);
    return file + ":" + std::to_string(first_line) + "-" + std::to_string(last_line);
}

std::string truncate_around_anchors(const DiffHunk& hunk, const std::set<std::string>& anchors, std::size_t radius)
{
    const std::size_t n = hunk.lines.size();
    std::vector<bool> keep(n, false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto tokens = tokenize(hunk.lines[i].text);
        if (std::none_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return anchors.contains(t); }))
            continue;
        any = true;
        const std::size_t lo = i >= radius ? i - radius : 0;
        const std::size_t hi = std::min(n - 1, i + radius);
        for (std::size_t j = lo; j <= hi; ++j)
            keep[j] = true;
    }
    if (!any)
        for (std::size_t j = 0; j < n && j <= 2 * radius; ++j)
            keep[j] = true;

    std::string out = hunk.header + "\n";
    bool gap = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) {
            if (!gap)
                out += "...\n";
            gap = true;
            continue;
        }
        gap = false;
        out += prefix_char(hunk.lines[i].kind);
        out += hunk.lines[i].text;
        out += '\n';
    }
    return out;
}

std::string build_prompt(const MigrationContext& context, const ScoredDiff& diff, const Exploit& exploit,
                         LlmStage stage, const HunkIndex& index, const EditLocation* location, std::size_t cap_tokens)
{
    const auto& anchors = context.identifiers.tokens;

    std::string identifiers;
    for (const auto& t : anchors)
        identifiers += (identifiers.empty() ? "" : ", ") + t;
    if (identifiers.empty())
        identifiers = "(none)";

    std::vector<std::string> supporting_ids;
    for (const auto& s : context.supporting) {
        if (supporting_ids.size() >= kMaxSupportingInPrompt)
            break;
        const auto& id = s.hunk_ids.front();
        if (std::find(diff.hunk_ids.begin(), diff.hunk_ids.end(), id) == diff.hunk_ids.end())
            supporting_ids.push_back(id);
    }

    const std::string head = std::string(kPreamble) +
                             fill(kIndicatorSection, {{"kind", std::string(to_string(context.indicator.kind))},
                                                      {"phase", std::string(to_string(context.indicator.phase))},
                                                      {"message", context.indicator.message}}) +
                             fill(kIdentifierSection, {{"identifiers", identifiers}});
    std::string tail = fill(kExploitSection, {{"exploit", exploit_listing(exploit, stage)}});
    if (stage == LlmStage::Adapt) {
        const std::string where = location ? location->to_string() : exploit.entry;
        tail += fill(kAdaptInstruction, {{"location", where}, {"assertion", exploit.assertion.message}});
    } else {
        tail += std::string(kLocalizeInstruction);
    }

    auto assemble = [&](std::optional<std::size_t> radius, bool with_supporting) {
        std::string selected;
        for (const auto& id : diff.hunk_ids)
            selected += hunk_block(index, id, anchors, radius);
        std::string out = head + fill(kSelectedSection, {{"selected", selected}});
        if (with_supporting && !supporting_ids.empty()) {
            std::string supporting;
            for (const auto& id : supporting_ids)
                supporting += hunk_block(index, id, anchors, radius);
            out += fill(kSupportingSection, {{"supporting", supporting}});
        }
        return out + tail;
    };

    const std::size_t cap_chars = cap_tokens * 4;
    std::string prompt = assemble(std::nullopt, true);
    if (prompt.size() <= cap_chars)
        return prompt;
    for (std::size_t radius : {8u, 4u, 2u, 1u, 0u}) {
        prompt = assemble(radius, true);
        if (prompt.size() <= cap_chars)
            return prompt;
    }
    prompt = assemble(0, false);
    if (prompt.size() > cap_chars) {
        // Last resort: cut the diff text itself, keeping the exploit and the instruction.
        const std::size_t keep = cap_chars > head.size() + tail.size() + 8 ? cap_chars - head.size() - tail.size() - 8 : 0;
        std::string middle = prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
        middle = middle.substr(0, keep) + "\n...\n";
        prompt = head + middle + tail;
    }
    return prompt;
}

EditLocation parse_location(std::string_view answer, const Exploit& exploit)
{
    EditLocation whole;
    whole.file = exploit.entry;
    whole.first_line = 1;
    whole.last_line = std::max(1, line_count(exploit.entry_source()));
    whole.clamped = true;

    static const std::regex loc(R"(([\w./$\-]+):(\d+)(?:\s*-\s*(\d+))?)");
    const std::string text(answer);
    std::smatch m;
    if (!std::regex_search(text, m, loc)) {
        whole.warning = "unparseable location answer";
        return whole;
    }
    const std::string path = resolve_exploit_path(m[1].str(), exploit);
    if (path.empty()) {
        whole.warning = "location names a file outside the exploit: " + m[1].str();
        return whole;
    }
    EditLocation out;
    out.file = path;
    out.first_line = std::stoi(m[2].str());
    out.last_line = m[3].matched ? std::stoi(m[3].str()) : out.first_line;
    const int lines = line_count(exploit.files.at(path));
    if (out.first_line < 1 || out.last_line < out.first_line || out.last_line > std::max(1, lines)) {
        whole.warning = "location out of range: " + m[0].str();
        return whole;
    }
    return out;
}

std::vector<FencedBlock> parse_fenced_blocks(std::string_view text)
{
    std::vector<FencedBlock> blocks;
    std::optional<FencedBlock> open;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        const std::string stripped = trim(line);
        if (!open) {
            if (stripped.starts_with("```")) {
                FencedBlock b;
                b.info = trim(std::string_view(stripped).substr(3));
                open = std::move(b);
            }
        } else if (stripped == "```") {
            blocks.push_back(std::move(*open));
            open.reset();
        } else {
            open->body.append(line);
            open->body += '\n';
        }
        if (nl == std::string_view::npos)
            break;
        pos = nl + 1;
    }
    for (auto& b : blocks) {
        std::string last;
        std::size_t p = 0;
        while (p < b.info.size()) {
            auto s = b.info.find_first_not_of(" \t", p);
            if (s == std::string::npos)
                break;
            auto e = b.info.find_first_of(" \t", s);
            auto token = b.info.substr(s, e == std::string::npos ? std::string::npos : e - s);
            for (std::string_view prefix : {"path=", "file=", "title="})
                if (token.starts_with(prefix))
                    token = token.substr(prefix.size());
            if (looks_like_path(token))
                last = token;
            p = e == std::string::npos ? b.info.size() : e;
        }
        b.path = last;
    }
    return blocks;
}

AdaptResult apply_adaptation(std::string_view response, const Exploit& exploit, const EditLocation& location)
{
    AdaptResult result;
    result.exploit = exploit;
    auto reject = [&](std::string why) {
        result.accepted = false;
        result.rejection = std::move(why);
        result.exploit = exploit;
        result.changed.clear();
        return result;
    };

    if (trim(response).empty())
        return reject("empty response");
    const auto blocks = parse_fenced_blocks(response);
    if (blocks.empty())
        return reject("no fenced code block");

    Exploit edited = exploit;
    for (const auto& b : blocks) {
        std::string path;
        if (b.path.empty()) {
            path = location.file.empty() ? exploit.entry : location.file;
        } else {
            path = resolve_exploit_path(b.path, exploit);
            if (path.empty())
                return reject("edit outside exploit-owned files: " + b.path);
        }
        if (trim(b.body).empty())
            return reject("empty file in response: " + path);
        edited.files[path] = b.body;
    }

    const auto& literal = exploit.assertion.message;
    if (!literal.empty()) {
        const bool kept = std::any_of(edited.files.begin(), edited.files.end(),
                                      [&](const auto& f) { return f.second.find(literal) != std::string::npos; });
        if (!kept)
            return reject("edit removes the expected assertion");
    }

    for (const auto& [path, text] : edited.files)
        if (exploit.files.at(path) != text)
            result.changed.push_back(path);
    result.accepted = true;
    result.exploit = std::move(edited);
    return result;
}

LocalizeResult localize_edit(LlmBackend& llm, const MigrationContext& context, const ScoredDiff& diff,
                             const Exploit& exploit, const HunkIndex& index,
                             std::optional<std::chrono::milliseconds> timeout)
{
    LlmRequest request{LlmStage::Localize, build_prompt(context, diff, exploit, LlmStage::Localize, index), timeout};
    const auto response = llm.complete(request);
    return LocalizeResult{parse_location(response.text, exploit), response.input_tokens, response.output_tokens};
}

AdaptResult adapt_exploit(LlmBackend& llm, const MigrationContext& context, const ScoredDiff& diff,
                          const Exploit& exploit, const EditLocation& location, const HunkIndex& index,
                          std::optional<std::chrono::milliseconds> timeout)
{
    LlmRequest request{LlmStage::Adapt, build_prompt(context, diff, exploit, LlmStage::Adapt, index, &location),
                       timeout};
    const auto response = llm.complete(request);
    auto result = apply_adaptation(response.text, exploit, location);
    result.input_tokens = response.input_tokens;
    result.output_tokens = response.output_tokens;
    return result;
}

} // namespace exmig
