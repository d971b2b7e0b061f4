#include <exmig/config.hpp>
#include <exmig/errors.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace exmig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve_path(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key) || obj.at(key).is_null())
        return fallback;
    return obj.at(key).get<T>();
}

void parse_adapter(MigrationConfig& cfg, const json& a)
{
    const auto preset = get_or<std::string>(a, "preset", "generic");
    if (preset == "maven")
        cfg.adapter = BuildAdapter::maven();
    else if (preset == "generic")
        cfg.adapter = BuildAdapter::generic();
    else
        throw ConfigError("unknown adapter preset '" + preset + "'");

    if (a.contains("commands")) {
        const auto& c = a.at("commands");
        cfg.adapter.resolve = get_or<std::string>(c, "resolve", cfg.adapter.resolve);
        cfg.adapter.set_version = get_or<std::string>(c, "set_version", cfg.adapter.set_version);
        cfg.adapter.build = get_or<std::string>(c, "build", cfg.adapter.build);
        cfg.adapter.test = get_or<std::string>(c, "test", cfg.adapter.test);
    }
    cfg.adapter.artifact = get_or<std::string>(a, "artifact", cfg.adapter.artifact);
    cfg.adapter.checkout_library = get_or<bool>(a, "checkout_library", cfg.adapter.checkout_library);
    cfg.adapter.report_glob = get_or<std::string>(a, "report_glob", cfg.adapter.report_glob);
    cfg.adapter.build_failure_pattern = get_or<std::string>(a, "build_failure_pattern", cfg.adapter.build_failure_pattern);
    if (a.contains("manifest_files"))
        cfg.adapter.manifest_files = a.at("manifest_files").get<std::vector<std::string>>();
    if (a.contains("rules")) {
        const auto& r = a.at("rules");
        if (r.is_string()) {
            if (r.get<std::string>() != "maven")
                throw ConfigError("unknown rule set '" + r.get<std::string>() + "'");
            cfg.adapter.rules = ClassifierRuleSet::maven();
        } else {
            cfg.adapter.rules = ClassifierRuleSet::from_json(r);
        }
    }
    if (cfg.adapter.test.empty())
        throw ConfigError("adapter.commands.test is required");
}

void parse_llm(MigrationConfig& cfg, const json& l)
{
    cfg.llm.backend = get_or<std::string>(l, "backend", cfg.llm.backend);
    if (cfg.llm.backend != "mock" && cfg.llm.backend != "http")
        throw ConfigError("llm.backend must be 'mock' or 'http'");
    if (l.contains("transcript"))
        cfg.llm.transcript = resolve_path(cfg.base_dir, l.at("transcript").get<std::string>());
    auto& h = cfg.llm.http;
    h.url = get_or<std::string>(l, "url", h.url);
    h.model = get_or<std::string>(l, "model", h.model);
    h.temperature = get_or<double>(l, "temperature", h.temperature);
    h.api_key_env = get_or<std::string>(l, "api_key_env", h.api_key_env);
    h.max_in_flight = get_or<int>(l, "max_in_flight", h.max_in_flight);
    h.retries = get_or<int>(l, "retries", h.retries);
    h.backoff = std::chrono::milliseconds(get_or<long>(l, "backoff_ms", static_cast<long>(h.backoff.count())));
    h.request_timeout =
        std::chrono::milliseconds(get_or<long>(l, "request_timeout_ms", static_cast<long>(h.request_timeout.count())));
}

} // namespace

MigrationConfig MigrationConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return from_json(doc, fs::absolute(path).parent_path());
}

MigrationConfig MigrationConfig::from_json(const json& doc, const fs::path& base_dir)
{
    if (!doc.is_object())
        throw ConfigError("config must be a JSON object");
    MigrationConfig cfg;
    cfg.base_dir = base_dir;
    try {
        const int schema = get_or<int>(doc, "schema_version", kConfigSchemaVersion);
        if (schema != kConfigSchemaVersion)
            throw ConfigError("unsupported config schema_version " + std::to_string(schema));

        const auto& lib = doc.at("library");
        cfg.repo = resolve_path(base_dir, lib.at("repo").get<std::string>());
        int ordinal = 0;
        for (const auto& v : lib.at("versions")) {
            VersionRef ref;
            if (v.is_string()) {
                ref.id = v.get<std::string>();
                ref.source_ref = ref.id;
            } else {
                ref.id = v.at("id").get<std::string>();
                ref.source_ref = get_or<std::string>(v, "ref", ref.id);
            }
            ref.ordinal = ordinal++;
            cfg.versions.push_back(std::move(ref));
        }
        cfg.reproduced = doc.at("reproduced").get<std::vector<std::string>>();
        if (doc.contains("targets"))
            cfg.targets = doc.at("targets").get<std::vector<std::string>>();
        else
            for (const auto& v : cfg.versions)
                if (std::find(cfg.reproduced.begin(), cfg.reproduced.end(), v.id) == cfg.reproduced.end())
                    cfg.targets.push_back(v.id);

        const auto& ex = doc.at("exploit");
        cfg.exploit_root = resolve_path(base_dir, ex.at("root").get<std::string>());
        const auto only = get_or<std::vector<std::string>>(ex, "files", {});
        cfg.exploit = Exploit::load(cfg.exploit_root, only);
        cfg.exploit.entry = ex.at("entry").get<std::string>();
        if (!cfg.exploit.owns(cfg.exploit.entry))
            throw ConfigError("exploit.entry '" + cfg.exploit.entry + "' is not an exploit file");
        const auto& as = ex.at("assertion");
        const auto test = as.at("test").get<std::string>();
        const auto dot = test.find_last_of('.');
        if (dot == std::string::npos)
            throw ConfigError("exploit.assertion.test must be Class.method");
        cfg.exploit.assertion.test_class = test.substr(0, dot);
        cfg.exploit.assertion.test_method = test.substr(dot + 1);
        cfg.exploit.assertion.message = as.at("message").get<std::string>();
        cfg.exploit.assertion.markers = get_or<std::vector<std::string>>(ex, "markers", {});

        parse_adapter(cfg, doc.at("adapter"));
        if (doc.contains("llm"))
            parse_llm(cfg, doc.at("llm"));

        if (doc.contains("annealing")) {
            const auto& a = doc.at("annealing");
            auto& p = cfg.annealing;
            p.initial_temperature = get_or<double>(a, "initial_temperature", p.initial_temperature);
            p.cooling_factor = get_or<double>(a, "cooling_factor", p.cooling_factor);
            p.min_temperature = get_or<double>(a, "min_temperature", p.min_temperature);
            p.max_depth = get_or<int>(a, "max_depth", p.max_depth);
            p.penalty = get_or<double>(a, "penalty", p.penalty);
            p.combo_top_k = get_or<int>(a, "combo_top_k", p.combo_top_k);
            p.fallback_size = get_or<std::size_t>(a, "fallback_size", p.fallback_size);
        }
        cfg.annealing.validate();

        if (doc.contains("context")) {
            const auto& c = doc.at("context");
            cfg.context.tau = get_or<double>(c, "tau", cfg.context.tau);
            cfg.context.anchor_window = get_or<std::size_t>(c, "anchor_window", cfg.context.anchor_window);
            if (c.contains("path_aliases"))
                cfg.context.path_aliases = c.at("path_aliases").get<std::map<std::string, std::string>>();
        }
        if (!(cfg.context.tau > 0.0 && cfg.context.tau <= 1.0))
            throw ConfigError("context.tau must lie in (0, 1]");
        cfg.context.manifest_files = cfg.adapter.manifest_files;

        if (doc.contains("ablation")) {
            const auto& a = doc.at("ablation");
            cfg.ablation.no_causing = get_or<bool>(a, "no_causing", false);
            cfg.ablation.no_supporting = get_or<bool>(a, "no_supporting", false);
            cfg.ablation.no_annealing = get_or<bool>(a, "no_annealing", false);
            cfg.ablation.no_combining = get_or<bool>(a, "no_combining", false);
        }

        cfg.timeout_s = get_or<double>(doc, "timeout_s", cfg.timeout_s);
        cfg.concurrency = get_or<int>(doc, "concurrency", cfg.concurrency);
        cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
        cfg.failure_default_steps = get_or<int>(doc, "failure_default_steps", cfg.failure_default_steps);
        cfg.scratch = resolve_path(base_dir, get_or<std::string>(doc, "scratch", "work"));
        if (doc.contains("diff_cache"))
            cfg.diff_cache = resolve_path(base_dir, doc.at("diff_cache").get<std::string>());
        cfg.keep_workspaces = get_or<bool>(doc, "keep_workspaces", false);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    if (cfg.timeout_s <= 0)
        throw ConfigError("timeout_s must be positive");
    if (cfg.concurrency < 1)
        throw ConfigError("concurrency must be at least 1");
    cfg.validate();
    return cfg;
}

void MigrationConfig::validate() const
{
    std::set<std::string> ids;
    for (const auto& v : versions)
        if (!ids.insert(v.id).second)
            throw ConfigError("duplicate version id '" + v.id + "'");
    if (reproduced.empty())
        throw ConfigError("reproduced set is empty: nothing to migrate from");
    for (const auto& r : reproduced)
        if (!ids.contains(r))
            throw ConfigError("reproduced version '" + r + "' is not in library.versions");
    for (const auto& t : targets) {
        if (!ids.contains(t))
            throw ConfigError("target version '" + t + "' is not in library.versions");
        if (std::find(reproduced.begin(), reproduced.end(), t) != reproduced.end())
            throw ConfigError("target version '" + t + "' is already reproduced");
    }
}

const VersionRef& MigrationConfig::version(const std::string& id) const
{
    for (const auto& v : versions)
        if (v.id == id)
            return v;
    throw ConfigError("unknown version '" + id + "'");
}

std::vector<VersionRef> MigrationConfig::reproduced_refs() const
{
    std::vector<VersionRef> out;
    for (const auto& r : reproduced)
        out.push_back(version(r));
    return out;
}

std::vector<VersionRef> MigrationConfig::target_refs() const
{
    std::vector<VersionRef> out;
    for (const auto& t : targets)
        out.push_back(version(t));
    return out;
}

AnnealingParams MigrationConfig::effective_annealing() const
{
    AnnealingParams p = annealing;
    p.no_annealing = ablation.no_annealing;
    p.no_combining = ablation.no_combining;
    return p;
}

} // namespace exmig
