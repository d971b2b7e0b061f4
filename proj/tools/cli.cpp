#include "cli.hpp"

#include <exmig/config.hpp>
#include <exmig/errors.hpp>
#include <exmig/fixtures.hpp>
#include <exmig/orchestrator.hpp>
#include <exmig/report.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <sstream>

namespace exmig {

namespace {

struct Options {
    std::string config;
    std::string target;
    bool no_causing = false;
    bool no_supporting = false;
    bool no_annealing = false;
    bool no_combining = false;
    std::optional<double> timeout;
    std::optional<std::uint64_t> seed;
    std::string llm_backend;
    std::string transcript;
    std::optional<int> concurrency;
    std::string out_path;
    std::string record_path;
    std::string expect_path;
    std::string report_path;
    std::string manifest_path;
    std::string case_name;
    std::string scratch;
    bool json = false;
    bool wall_time = false;
};

void add_run_flags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config,-c", o.config, "Migration config file")->required();
    cmd->add_flag("--no-causing", o.no_causing, "Disable causing-diff retrieval");
    cmd->add_flag("--no-supporting", o.no_supporting, "Disable supporting-diff retrieval");
    cmd->add_flag("--no-annealing", o.no_annealing, "Try candidates in descending score order");
    cmd->add_flag("--no-combining", o.no_combining, "Do not build combined candidates");
    cmd->add_option("--timeout", o.timeout, "Per-version time budget in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--llm-backend", o.llm_backend, "LLM backend")->check(CLI::IsMember({"http", "mock"}));
    cmd->add_option("--transcript", o.transcript, "Mock transcript file");
    cmd->add_option("--concurrency", o.concurrency, "Versions migrated in parallel")->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", o.out_path, "Write the canonical JSON report here");
    cmd->add_option("--record", o.record_path, "Record LLM exchanges to a transcript file");
    cmd->add_flag("--json", o.json, "Print the JSON report instead of the summary");
    cmd->add_flag("--wall-time", o.wall_time, "Include wall-clock times in the JSON report");
}

MigrationConfig load_config(const Options& o)
{
    auto cfg = MigrationConfig::load(o.config);
    cfg.ablation.no_causing |= o.no_causing;
    cfg.ablation.no_supporting |= o.no_supporting;
    cfg.ablation.no_annealing |= o.no_annealing;
    cfg.ablation.no_combining |= o.no_combining;
    if (o.timeout)
        cfg.timeout_s = *o.timeout;
    if (o.seed)
        cfg.seed = *o.seed;
    if (!o.llm_backend.empty())
        cfg.llm.backend = o.llm_backend;
    if (!o.transcript.empty())
        cfg.llm.transcript = std::filesystem::absolute(o.transcript);
    if (o.concurrency)
        cfg.concurrency = *o.concurrency;
    return cfg;
}

int exit_status(const MigrationReport& report)
{
    int status = 0;
    for (const auto& v : report.versions) {
        if (v.verdict == Verdict::Error)
            return 2;
        if (v.verdict == Verdict::Failure)
            status = 1;
    }
    return status;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw EnvironmentError("cannot write " + path);
    f << text;
}

std::string read_text(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(const Options& o, const MigrationConfig& cfg, const std::vector<VersionRef>& targets, std::ostream& out,
        std::ostream& err, const std::string& expect)
{
    auto backend = make_backend(cfg.llm);
    std::optional<RecordingBackend> recorder;
    LlmBackend* llm = backend.get();
    if (!o.record_path.empty())
        llm = &recorder.emplace(*backend);

    Migrator migrator(cfg, *llm);
    const auto report = migrator.migrate(targets);
    const auto text = dump_report(report, o.wall_time);
    if (!o.out_path.empty())
        write_text(o.out_path, text);
    if (recorder)
        recorder->save(o.record_path);
    if (o.json)
        out << text;
    else
        out << render_summary(report);

    if (!expect.empty()) {
        const auto expected = read_text(expect);
        if (dump_report(report, false) != expected) {
            err << "replay differs from " << o.expect_path << '\n';
            return 1;
        }
        out << "replay matches " << o.expect_path << '\n';
    }
    return exit_status(report);
}

} // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Migrate a vulnerability exploit across library versions"};
    app.require_subcommand(1);
    Options o;

    auto* migrate = app.add_subcommand("migrate", "Migrate the exploit to one target version");
    add_run_flags(migrate, o);
    migrate->add_option("--target,-t", o.target, "Target version id")->required();

    auto* matrix = app.add_subcommand("run-matrix", "Migrate the exploit to every configured target");
    add_run_flags(matrix, o);

    auto* replay = app.add_subcommand("replay", "Re-run all targets from a recorded transcript and seed");
    add_run_flags(replay, o);
    replay->add_option("--expect", o.expect_path, "Report the replay must reproduce byte for byte");

    auto* report = app.add_subcommand("report", "Render a stored JSON report");
    report->add_option("report", o.report_path, "Report file")->required();
    report->add_flag("--json", o.json, "Print the canonical JSON instead of the summary");
    report->add_flag("--wall-time", o.wall_time, "Show wall-clock times");

    auto* fixture = app.add_subcommand("materialize-fixture", "Set up a fixture case as a runnable config");
    fixture->add_option("--manifest", o.manifest_path, "Fixture manifest")->required();
    fixture->add_option("--case", o.case_name, "Case name")->required();
    fixture->add_option("--scratch", o.scratch, "Directory to build the case in")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (report->parsed()) {
            const auto doc = nlohmann::json::parse(read_text(o.report_path));
            const auto r = report_from_json(doc);
            if (o.json)
                out << dump_report(r, o.wall_time);
            else
                out << render_summary(r, o.wall_time);
            return 0;
        }

        if (fixture->parsed()) {
            const auto manifest = FixtureManifest::load(o.manifest_path);
            const auto m = materialize(manifest.find(o.case_name), manifest.root, o.scratch);
            out << m.config.string() << '\n';
            return 0;
        }

        auto cfg = load_config(o);
        if (migrate->parsed())
            return run(o, cfg, {cfg.version(o.target)}, out, err, {});
        if (replay->parsed()) {
            cfg.llm.backend = "mock";
            if (cfg.llm.transcript.empty())
                throw ConfigError("replay needs --transcript or llm.transcript in the config");
            return run(o, cfg, cfg.target_refs(), out, err, o.expect_path);
        }
        return run(o, cfg, cfg.target_refs(), out, err, {});
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace exmig
