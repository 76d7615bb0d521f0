#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hant/hant.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw hant::Error("io", "cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path default_output_dir() {
    if (const char* env = std::getenv("HANT_OUTPUT_DIR"); env && *env) return env;
    return "hant-out";
}

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::string out;
    int verbosity = 1;
};

hant::ScenarioConfig load(const Common& c) {
    auto cfg = hant::parse_scenario(read_file(c.scenario));
    if (c.seed) cfg.seed = *c.seed;
    if (c.duration) cfg.duration = *c.duration;
    if (auto issues = hant::validate_scenario(cfg); !issues.empty()) throw hant::ScenarioError(std::move(issues));
    return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_seed) {
    app->add_option("scenario", c.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    if (with_seed) app->add_option("--seed", c.seed, "Override the scenario seed");
    app->add_option("--duration", c.duration, "Override the simulated duration in seconds");
    app->add_option("-o,--out", c.out, "Output directory (default $HANT_OUTPUT_DIR or ./hant-out)");
}

// Trace goes to trace.jsonl, the final record to summary.json.
int run_once(const Common& c, bool echo) {
    const auto cfg = load(c);
    const fs::path dir = c.out.empty() ? default_output_dir() : fs::path(c.out);
    std::ostringstream trace;
    const auto stats = hant::run(cfg, c.verbosity > 0 ? &trace : nullptr, c.verbosity);
    const std::string summary = stats.to_json().dump(2) + "\n";
    if (c.verbosity > 0) hant::write_atomic(dir / "trace.jsonl", trace.str());
    hant::write_atomic(dir / "summary.json", summary);
    if (echo) std::cout << summary;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical ant-colony QoS routing simulator"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "Run one scenario");
    add_common(run, run_opts, true);
    run->add_option("-v,--trace-verbosity", run_opts.verbosity, "0 none, 1 structural events, 2 every packet")->check(CLI::Range(0, 2));

    Common trace_opts;
    trace_opts.verbosity = 2;
    auto* trace = app.add_subcommand("trace", "Run one scenario with full trace emission");
    add_common(trace, trace_opts, true);
    trace->add_option("-v,--trace-verbosity", trace_opts.verbosity, "1 structural events, 2 every packet")->check(CLI::Range(1, 2));

    Common sweep_opts;
    std::string seeds = "1..20";
    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a seed range and aggregate delivery ratio");
    add_common(sweep, sweep_opts, false);
    sweep->add_option("--seeds", seeds, "Seed or inclusive range, e.g. 1..20");
    sweep->add_option("-j,--threads", threads, "Worker threads (default: hardware concurrency)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Parse and check a scenario file");
    validate->add_option("scenario", validate_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            hant::parse_scenario(read_file(validate_path));
            return 0;
        }
        if (*run) return run_once(run_opts, true);
        if (*trace) return run_once(trace_opts, false);
        if (*sweep) {
            const auto cfg = load(sweep_opts);
            const fs::path dir = sweep_opts.out.empty() ? default_output_dir() : fs::path(sweep_opts.out);
            if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
            const auto summary = hant::sweep(cfg, hant::parse_seed_range(seeds), threads, dir);
            const std::string text = summary.to_json().dump(2) + "\n";
            hant::write_atomic(dir / "sweep.json", text);
            std::cout << text;
            return 0;
        }
    } catch (const hant::ScenarioError& e) {
        for (const auto& i : e.issues()) std::cerr << i.to_string() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
