// rise_sim: run scenarios, reproduce the RISE vs ASMC comparison, recompute
// metrics and draw plots from saved traces.
//
// exit codes: 0 ok, 1 config error, 2 divergence, 3 I/O error

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rise/experiment.hpp"
#include "rise/io.hpp"

namespace fs = std::filesystem;
using namespace rise;

namespace {

enum Exit { kOk = 0, kConfig = 1, kDiverged = 2, kIo = 3 };

fs::path default_out_root() {
    if (const char* env = std::getenv("RISE_SIM_OUT"); env && *env) return env;
    return "out";
}

int report(const ExperimentOutcome& outcome) {
    for (const auto& r : outcome.results) {
        std::cout << r.label << ": ";
        if (r.failure) {
            std::cout << "failed (" << *r.failure << ")\n";
        } else if (r.diverged()) {
            std::cout << "diverged (" << *r.trace.error << ")\n";
        } else {
            const auto& m = *r.metrics;
            std::cout << "ok, " << r.trace.records.size() << " records, " << r.trace.stats.wall_seconds << " s wall";
            std::cout << ", chattering " << m.chattering << ", clamp events " << m.clamp_events << "\n";
        }
        for (const auto& n : r.trace.notices) std::cerr << "  " << r.label << ": " << n << "\n";
    }
    for (const auto& e : outcome.errors) std::cerr << "error: " << e << "\n";
    std::cout << "outputs in " << outcome.out_dir.string() << "\n";
    if (outcome.any_failed()) return kIo;
    if (outcome.any_diverged()) return kDiverged;
    return kOk;
}

/// Scenario config for `metrics`/`plot`: explicit file, else effective_config.json next to the trace, else defaults.
ScenarioConfig config_for_trace(const fs::path& trace, const std::string& explicit_config) {
    fs::path path = explicit_config;
    if (path.empty()) {
        const fs::path sibling = trace.parent_path() / "effective_config.json";
        if (fs::exists(sibling)) path = sibling;
    }
    if (path.empty()) return ScenarioConfig::paper();
    return scenario_from_json(parse_json_text(read_text_file(path), path.filename().string()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RISE controller with finite-time parameter estimation: simulation and comparison tool"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    unsigned jobs = 0;
    auto* run = app.add_subcommand("run", "run every scenario of an experiment config");
    run->add_option("config", config_path, "experiment JSON")->required();
    run->add_option("--out", out_dir, "output directory (default: config output_dir, else $RISE_SIM_OUT or ./out)");
    run->add_option("--jobs", jobs, "parallel scenarios (0 = all cores)");

    double noise = kDefaultNoiseStd;
    std::uint64_t seed = 1;
    auto* repro = app.add_subcommand("reproduce-paper", "RISE vs ASMC on the reference scenario");
    repro->add_option("--noise", noise, "force disturbance std in N (torque std = 0.05 x this)")->check(CLI::NonNegativeNumber);
    repro->add_option("--seed", seed, "disturbance seed");
    repro->add_option("--out", out_dir, "output directory (default: $RISE_SIM_OUT/paper or ./out/paper)");
    repro->add_option("--jobs", jobs, "parallel scenarios (0 = all cores)");

    std::string trace_path, metrics_config, metrics_out;
    auto* metrics = app.add_subcommand("metrics", "recompute metrics from a trace CSV");
    metrics->add_option("trace", trace_path, "trace CSV")->required();
    metrics->add_option("--config", metrics_config, "scenario JSON (default: effective_config.json beside the trace)");
    metrics->add_option("--out", metrics_out, "write the JSON here instead of stdout");

    std::vector<std::string> plot_traces;
    std::string plot_config;
    auto* plot_cmd = app.add_subcommand("plot", "SVG charts overlaying one or more traces");
    plot_cmd->add_option("traces", plot_traces, "trace CSV files")->required();
    plot_cmd->add_option("--out", out_dir, "output directory (default: ./plots)");
    plot_cmd->add_option("--config", plot_config, "scenario JSON providing the true parameters");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ExperimentSpec spec = load_config(config_path);
            fs::path out = !out_dir.empty() ? fs::path(out_dir)
                         : !spec.output_dir.empty() ? fs::path(spec.output_dir)
                                                    : default_out_root();
            return report(run_experiment(spec, out, jobs));
        }
        if (*repro) {
            const ExperimentSpec spec = reproduce_paper_spec(noise, seed);
            const fs::path out = out_dir.empty() ? default_out_root() / "paper" : fs::path(out_dir);
            return report(run_experiment(spec, out, jobs));
        }
        if (*metrics) {
            const ScenarioConfig cfg = config_for_trace(trace_path, metrics_config);
            std::vector<SimRecord> records = trace_from_csv(read_text_file(trace_path));
            if (records.empty()) throw IoError("trace has no records");
            const LyapunovReport lyap = lyapunov_diagnostic(records, cfg);
            json j;
            j["schema"] = kMetricsSchema;
            j["trace"] = trace_path;
            j["metrics"] = to_json(compute_metrics(records, cfg));
            j["lyapunov"] = to_json(lyap);
            if (cfg.controller == ControllerId::Rise) j["finite_time"] = to_json(ft_analysis(records, cfg));
            if (metrics_out.empty()) {
                std::cout << dump_json(j);
            } else {
                write_file_atomic(metrics_out, dump_json(j));
            }
            return kOk;
        }
        if (*plot_cmd) {
            const ScenarioConfig cfg = config_for_trace(plot_traces.front(), plot_config);
            std::vector<std::vector<SimRecord>> traces;
            std::vector<PlotInput> inputs;
            traces.reserve(plot_traces.size());
            for (const auto& p : plot_traces) traces.push_back(trace_from_csv(read_text_file(p)));
            for (std::size_t i = 0; i < traces.size(); ++i) {
                const fs::path p = plot_traces[i];
                std::string label = p.parent_path().filename().string();
                if (label.empty()) label = p.stem().string();
                inputs.push_back({label, &traces[i]});
            }
            const fs::path out = out_dir.empty() ? fs::path("plots") : fs::path(out_dir);
            for (const auto& f : emit_plots(inputs, cfg.vehicle.to_params())) write_file_atomic(out / f.name, f.svg);
            std::cout << "plots in " << out.string() << "\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDiverged;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    }
    return kOk;
}
