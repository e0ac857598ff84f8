// agentsched command-line front end: run, sweep, calibrate, compare, profiles.
#include <agentsched/errors.hpp>
#include <agentsched/experiment.hpp>
#include <agentsched/metrics.hpp>
#include <agentsched/profiles.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace agentsched;

namespace {

enum class Format { Csv, JsonLines };

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
};

Format parse_format(const std::string& s) { return s == "json-lines" ? Format::JsonLines : Format::Csv; }

void write_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << body;
}

std::string csv_preamble(const std::string& config_fp) {
    return "# agentsched " + std::string(version()) + " config=" + config_fp + "\n";
}

fs::path output_dir(const Common& c, const fs::path& from_config, const std::string& fallback) {
    if (!c.out.empty()) return c.out;
    if (!from_config.empty()) return from_config;
    return fs::path("out") / fallback;
}

int cmd_run(const Common& c) {
    auto cfg = load_experiment(c.config);
    if (c.seed) cfg.workload.seed = *c.seed;
    const auto result = run_experiment(cfg);
    const auto dir = output_dir(c, cfg.output, cfg.name.empty() ? "run" : cfg.name);
    const auto fp = cfg.fingerprint();

    std::string trace = trace_to_string(result.trace);
    trace.insert(trace.find('\n') + 1, "# config_fingerprint " + fp + "\n");
    write_file(dir / "trace.txt", trace);
    write_file(dir / "report.json", report_to_json(result.report));
    const std::string csv = report_csv_header() + "\n" + report_csv_row(result.report) + "\n";
    write_file(dir / "report.csv", csv_preamble(fp) + csv);

    if (parse_format(c.format) == Format::JsonLines)
        std::cout << report_to_json_line(result.report);
    else
        std::cout << csv;
    std::cerr << "wrote " << (dir / "trace.txt").string() << ", report.json, report.csv\n";
    return 0;
}

int cmd_sweep(const Common& c, int jobs) {
    auto sweep = load_sweep(c.config);
    if (c.seed) sweep.base.workload.seed = *c.seed;
    const auto result = run_sweep(sweep, jobs);
    const auto dir = output_dir(c, sweep.base.output, sweep.base.name.empty() ? "sweep" : sweep.base.name + "_sweep");
    const bool jsonl = parse_format(c.format) == Format::JsonLines;
    const std::string body = jsonl ? sweep_json_lines(sweep, result) : sweep_csv(sweep, result);
    write_file(dir / (jsonl ? "sweep.jsonl" : "sweep.csv"), body);
    if (result.curve) {
        const std::string curve = "# agentsched " + std::string(version()) + " config=" + sweep.fingerprint() + "\n" +
                                  curve_to_yaml(*result.curve, sweep.base.name);
        write_file(dir / "throughput_curve.yaml", curve);
    }
    std::cout << body;
    std::cerr << "wrote " << result.rows.size() << " rows to " << dir.string() << "\n";
    return 0;
}

int cmd_calibrate(const Common& c) {
    const fs::path path = c.config;
    const auto profile = calibrate_profile(read_text_file(path), path.string(), path.parent_path());
    const std::string yaml = "# agentsched " + std::string(version()) + " calibrated from " +
                             path.filename().string() + " config=" + fingerprint(read_text_file(path)) + "\n" +
                             model_profile_to_yaml(profile);
    if (c.out.empty()) {
        std::cout << yaml;
    } else {
        const auto file = fs::path(c.out) / (profile.name + ".yaml");
        write_file(file, yaml);
        std::cerr << "wrote " << file.string() << "\n";
    }
    return 0;
}

int cmd_compare(const Common& c, const std::string& a, const std::string& b) {
    const auto ra = report_from_json(read_text_file(a));
    const auto rb = report_from_json(read_text_file(b));
    const auto s = compare(ra, rb);
    const std::string csv = speedup_to_csv(s);
    if (parse_format(c.format) == Format::JsonLines) {
        for (const auto& [name, value] : s.ratios) std::cout << "{\"metric\":\"" << name << "\",\"ratio\":" << value << "}\n";
    } else {
        std::cout << speedup_to_text(s);
    }
    if (!c.out.empty()) write_file(fs::path(c.out) / "compare.csv", "# agentsched " + std::string(version()) + " workload=" + s.workload_fingerprint + "\n" + csv);
    return 0;
}

int cmd_profiles_list() {
    std::cout << "pipelines (" << profile_dir().string() << "/pipelines):\n";
    for (const auto& name : available_profiles()) {
        const auto p = load_profile(name);
        std::cout << "  " << name << "  [" << to_string(p.orchestrator) << ", " << to_string(p.path) << ", "
                  << to_string(p.flow) << "]";
        for (const auto& s : p.stages) std::cout << "  " << to_string(s.kind) << ":" << s.base_latency;
        std::cout << "\n";
    }
    std::cout << "models:\n";
    for (const auto& name : available_models()) std::cout << "  " << name << "\n";
    return 0;
}

int cmd_profiles_show(const std::string& name) {
    const auto pipes = available_profiles();
    if (std::find(pipes.begin(), pipes.end(), name) != pipes.end()) {
        std::cout << pipeline_to_yaml(load_profile(name));
        return 0;
    }
    const auto models = available_models();
    if (std::find(models.begin(), models.end(), name) == models.end()) {
        std::string all;
        for (const auto& n : pipes) all += (all.empty() ? "" : ", ") + n;
        for (const auto& n : models) all += ", " + n;
        throw LookupError("unknown profile '" + name + "'; available: " + all);
    }
    std::cout << model_profile_to_yaml(load_model_profile(name));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator for batched agentic AI scheduling policies"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    Common common;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Configuration file")->required()->check(CLI::ExistingFile);
    };
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out", common.out, "Output directory"); };
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", common.seed, "Override the workload seed"); };
    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", common.format, "Output format")
            ->check(CLI::IsMember({"csv", "json-lines"}))
            ->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "Simulate one experiment and write trace + report");
    add_config(run);
    add_out(run);
    add_seed(run);
    add_format(run);

    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run an experiment for every value of one axis");
    add_config(sweep);
    add_out(sweep);
    add_seed(sweep);
    add_format(sweep);
    sweep->add_option("--jobs", jobs, "Parallel member runs")->check(CLI::Range(1, 64));

    auto* calibrate = app.add_subcommand("calibrate", "Fit a model profile from an observations file");
    add_config(calibrate);
    add_out(calibrate);

    std::string report_a, report_b;
    auto* cmp = app.add_subcommand("compare", "Per-metric ratios baseline/candidate of two reports");
    add_out(cmp);
    add_format(cmp);
    cmp->add_option("baseline", report_a, "Baseline report.json")->required()->check(CLI::ExistingFile);
    cmp->add_option("candidate", report_b, "Candidate report.json")->required()->check(CLI::ExistingFile);

    std::string show_name;
    auto* profiles = app.add_subcommand("profiles", "Bundled profiles");
    profiles->require_subcommand(1);
    auto* list = profiles->add_subcommand("list", "List bundled pipelines and model profiles");
    auto* show = profiles->add_subcommand("show", "Print a bundled profile");
    show->add_option("name", show_name, "Profile name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::Config);
    }

    try {
        if (run->parsed()) return cmd_run(common);
        if (sweep->parsed()) return cmd_sweep(common, jobs);
        if (calibrate->parsed()) return cmd_calibrate(common);
        if (cmp->parsed()) return cmd_compare(common, report_a, report_b);
        if (list->parsed()) return cmd_profiles_list();
        if (show->parsed()) return cmd_profiles_show(show_name);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Infeasible);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Config);
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Internal);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Internal);
    }
    return static_cast<int>(ExitCode::Internal);
}
