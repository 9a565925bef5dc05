#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "nurf/nurf.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_failed_cell = 2;

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Leftover arguments of the form --a.b=value or --a.b value.
Overrides parse_overrides(const std::vector<std::string>& extras)
{
    Overrides out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() <= 2) {
            throw nurf::Error(nurf::ErrorKind::config, "unexpected argument '" + arg + "'");
        }
        const std::string body = arg.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        } else if (i + 1 < extras.size()) {
            out.emplace_back(body, extras[++i]);
        } else {
            throw nurf::Error(nurf::ErrorKind::config, "override '" + arg + "' has no value");
        }
    }
    return out;
}

int run_command(const std::string& config_path, const Overrides& overrides, const std::string& output)
{
    const nurf::ExperimentConfig config = nurf::load_config(config_path, overrides);
    std::size_t done = 0;
    std::size_t total = config.samplers.size() * config.n_grid.size() * config.replicates;
    const auto rows = nurf::run_experiment(config, [&](const nurf::ResultRow& row) {
        ++done;
        std::cerr << "[" << done << "/" << total << "] " << row.sampler << " N=" << row.N << " rep=" << row.replicate
                  << " " << row.status << "\n";
    });
    const std::filesystem::path path =
        output.empty() ? std::filesystem::path(config.output_dir) / "results.csv" : std::filesystem::path(output);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw nurf::Error(nurf::ErrorKind::config, "cannot write '" + path.string() + "'");
    }
    nurf::write_results_csv(out, rows);
    std::cout << path.string() << "\n";
    for (const auto& row : rows) {
        if (row.status != "ok") {
            return exit_failed_cell;
        }
    }
    return exit_ok;
}

int summarize_command(const std::string& results_path, const std::string& output)
{
    std::ifstream in(results_path);
    if (!in) {
        throw nurf::Error(nurf::ErrorKind::config, "cannot open '" + results_path + "'");
    }
    const auto rows = nurf::read_results_csv(in);
    const auto summary = nurf::summarize(rows);
    std::filesystem::path path = output;
    if (path.empty()) {
        path = std::filesystem::path(results_path).replace_filename("summary.csv");
    }
    std::ofstream out(path);
    if (!out) {
        throw nurf::Error(nurf::ErrorKind::config, "cannot write '" + path.string() + "'");
    }
    nurf::write_summary_csv(out, summary);
    nurf::write_summary_csv(std::cout, summary);

    std::map<std::pair<std::string, int>, std::vector<nurf::SummaryRow>> per_benchmark;
    for (const auto& s : summary) {
        per_benchmark[{s.benchmark, s.d}].push_back(s);
    }
    for (const auto& [key, group] : per_benchmark) {
        const std::string name = key.first + "_d" + std::to_string(key.second);
        std::ofstream svg(std::filesystem::path(path).replace_filename("summary_" + name + ".svg"));
        nurf::write_summary_svg(svg, group, name);
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random-feature regression with derivative-informed weight sampling"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output;
    auto* run = app.add_subcommand("run", "Run an experiment grid; further --dotted.key value pairs override the config");
    run->add_option("config", config_path, "JSON configuration")->required();
    run->add_option("-o,--output", output, "Results CSV path (default <output_dir>/results.csv)");
    run->allow_extras();

    std::string results_path;
    std::string summary_output;
    auto* summarize = app.add_subcommand("summarize", "Medians and quartiles per sampler and N, plus SVG charts");
    summarize->add_option("results", results_path, "Results CSV")->required();
    summarize->add_option("-o,--output", summary_output, "Summary CSV path (default next to the input)");

    std::string export_config;
    std::string sampler;
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    std::string weights_output;
    auto* export_cmd = app.add_subcommand("export-weights", "Write sampled inner weights, one neuron per line");
    export_cmd->add_option("config", export_config, "JSON configuration")->required();
    export_cmd->add_option("--sampler", sampler, "Sampler label or kind")->required();
    export_cmd->add_option("--n", count, "Number of neurons")->check(CLI::PositiveNumber);
    export_cmd->add_option("--seed", seed, "Master seed");
    export_cmd->add_option("-o,--output", weights_output, "Output file");
    export_cmd->allow_extras();

    auto* list = app.add_subcommand("list-benchmarks", "List benchmark names and default dimensions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) {
            return run_command(config_path, parse_overrides(run->remaining()), output);
        }
        if (*summarize) {
            return summarize_command(results_path, summary_output);
        }
        if (*export_cmd) {
            const auto config = nurf::load_config(export_config, parse_overrides(export_cmd->remaining()));
            std::cout << nurf::export_weights(config, sampler, count, seed, weights_output).string() << "\n";
            return exit_ok;
        }
        if (*list) {
            for (const auto& name : nurf::benchmark_names()) {
                std::cout << name << " " << nurf::default_benchmark_dim(name) << "\n";
            }
            return exit_ok;
        }
    } catch (const nurf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == nurf::ErrorKind::config ? exit_config : exit_failed_cell;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failed_cell;
    }
    return exit_ok;
}
