#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rise/config.hpp"
#include "rise/io.hpp"
#include "rise/metrics.hpp"
#include "rise/plot.hpp"
#include "rise/sim.hpp"

namespace rise {

struct ScenarioResult {
    std::string label;
    ScenarioConfig config;
    SimTrace trace;
    std::optional<RunMetrics> metrics;
    LyapunovReport lyapunov;
    FtAnalysis ft;
    std::optional<std::string> failure;  // non-divergence failure (e.g. I/O)

    bool diverged() const { return trace.diverged(); }
    bool ok() const { return !diverged() && !failure; }
};

/// Simulation plus all post-run diagnostics.
inline ScenarioResult evaluate_scenario(const ScenarioConfig& cfg) {
    ScenarioResult r;
    r.label = cfg.label;
    r.config = cfg;
    r.trace = run_scenario(cfg);
    r.lyapunov = lyapunov_diagnostic(r.trace.records, cfg);
    if (!r.trace.records.empty()) {
        r.metrics = compute_metrics(r.trace.records, cfg);
        if (cfg.diagnostics.enabled) r.ft = ft_analysis(r.trace.records, cfg);
    }
    return r;
}

inline json summary_json(const ScenarioResult& r) {
    json j;
    j["schema"] = kMetricsSchema;
    j["trace_schema"] = kTraceSchema;
    j["label"] = r.label;
    j["controller"] = enum_name(r.config.controller, kControllerNames);
    j["status"] = r.failure ? "failed" : r.diverged() ? "diverged" : "ok";
    j["error"] = r.failure ? json(*r.failure) : r.trace.error ? json(*r.trace.error) : json(nullptr);
    j["records"] = r.trace.records.size();
    j["metrics"] = r.metrics ? to_json(*r.metrics) : json(nullptr);
    j["stats"] = to_json(r.trace.stats);
    j["lyapunov"] = to_json(r.lyapunov);
    if (r.config.controller == ControllerId::Rise && r.metrics) {
        j["finite_time"] = to_json(r.ft);
        if (!r.trace.gram_history.empty() && r.trace.gram_history.back().t - r.trace.gram_history.front().t >= 1.0) {
            const PeReport pe = pe_diagnostic(r.trace.gram_history);
            j["excitation"] = {{"outer_min", pe.outer_min},
                               {"inner_lambda_min", pe.inner_lambda_min},
                               {"inner_axis_min", {pe.inner_axis_min.x(), pe.inner_axis_min.y(), pe.inner_axis_min.z()}},
                               {"outer_warning", pe.outer_warning},
                               {"inner_warning", pe.inner_warning}};
        }
    }
    j["notices"] = r.trace.notices;
    return j;
}

/// trace.csv, metrics.json and effective_config.json under dir.
inline void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioResult& r) {
    write_file_atomic(dir / "effective_config.json", dump_json(to_json(r.config)));
    write_file_atomic(dir / "trace.csv", trace_to_csv(r.trace.records));
    write_file_atomic(dir / "metrics.json", dump_json(summary_json(r)));
}

// ---------------------------------------------------------------------------
// Plots

struct PlotInput {
    std::string label;
    const std::vector<SimRecord>* records;
};

inline plot::Series column_series(const PlotInput& in, const std::string& suffix,
                                  const std::function<double(const SimRecord&)>& f, bool dashed = false) {
    plot::Series s;
    s.label = suffix.empty() ? in.label : in.label + " " + suffix;
    s.dashed = dashed;
    for (const auto& r : *in.records) {
        s.x.push_back(r.t);
        s.y.push_back(f(r));
    }
    return s;
}

struct PlotFile {
    std::string name;
    std::string svg;
};

/// Estimates, mass, position/attitude errors and thrust charts overlaying all inputs.
inline std::vector<PlotFile> emit_plots(const std::vector<PlotInput>& inputs, const MassInertia& truth) {
    using plot::Panel;
    std::vector<PlotFile> files;

    std::vector<Panel> est;
    const std::array<std::pair<const char*, double>, 4> params{
        {{"m", truth.mass}, {"Ix", truth.inertia.x()}, {"Iy", truth.inertia.y()}, {"Iz", truth.inertia.z()}}};
    for (int p = 0; p < 4; ++p) {
        Panel panel{std::string("estimate of ") + params[p].first, "t [s]",
                    p == 0 ? "mass [kg]" : "inertia [kg m^2]", {}, {{"truth", params[p].second}}};
        for (const auto& in : inputs) {
            panel.series.push_back(column_series(in, "", [p](const SimRecord& r) {
                return p == 0 ? r.mass_hat : r.inertia_hat[p - 1];
            }));
        }
        est.push_back(panel);
    }
    files.push_back({"estimates.svg", plot::render(est)});

    Panel mass{"mass estimate", "t [s]", "mass [kg]", {}, {{"truth", truth.mass}, {"+2%", 1.02 * truth.mass},
                                                          {"-2%", 0.98 * truth.mass}}};
    for (const auto& in : inputs) mass.series.push_back(column_series(in, "", [](const SimRecord& r) { return r.mass_hat; }));
    files.push_back({"mass.svg", plot::render({mass})});

    auto error_panels = [&](bool outer) {
        std::vector<Panel> panels;
        const char* axes_o[] = {"x", "y", "z"};
        const char* axes_i[] = {"roll", "pitch", "yaw"};
        for (int a = 0; a < 3; ++a) {
            Panel panel{std::string(outer ? "position error " : "attitude error ") + (outer ? axes_o[a] : axes_i[a]),
                        "t [s]", outer ? "e_o1 [m]" : "e_i1 [rad]", {}, {}};
            for (const auto& in : inputs) {
                panel.series.push_back(column_series(in, "", [a, outer](const SimRecord& r) {
                    return outer ? r.outer.e1[a] : r.inner.e1[a];
                }));
            }
            panels.push_back(panel);
        }
        return panels;
    };
    files.push_back({"position_errors.svg", plot::render(error_panels(true), 900, 240)});
    files.push_back({"attitude_errors.svg", plot::render(error_panels(false), 900, 240)});

    Panel thrust{"commanded thrust magnitude", "t [s]", "|F| [N]", {}, {}};
    for (const auto& in : inputs) {
        thrust.series.push_back(column_series(in, "", [](const SimRecord& r) { return r.wrench.force.norm(); }));
    }
    files.push_back({"thrust.svg", plot::render({thrust})});
    return files;
}

// ---------------------------------------------------------------------------
// Experiments

/// Runs `count` tasks on up to `jobs` threads; task i writes only slot i.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) task(i);
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
}

struct ExperimentOutcome {
    std::filesystem::path out_dir;
    std::vector<ScenarioResult> results;
    std::vector<std::string> errors;

    bool any_diverged() const {
        for (const auto& r : results)
            if (r.diverged()) return true;
        return false;
    }
    bool any_failed() const {
        for (const auto& r : results)
            if (r.failure) return true;
        return !errors.empty();
    }
};

inline json comparison_report(const ComparisonSpec& c, const ScenarioResult& a, const ScenarioResult& b) {
    json j;
    j["schema"] = kMetricsSchema;
    j["label"] = c.label;
    j["scenarios"] = {summary_json(a)["metrics"], summary_json(b)["metrics"]};
    j["labels"] = {a.label, b.label};
    if (a.metrics && b.metrics) {
        const double chat_b = b.metrics->chattering;
        j["chattering_ratio"] = chat_b > 0.0 ? json(a.metrics->chattering / chat_b) : json(nullptr);
        j["clamp_events"] = {a.metrics->clamp_events, b.metrics->clamp_events};
        j["mass_settling"] = {optional_json(a.metrics->settling[0]), optional_json(b.metrics->settling[0])};
    }
    return j;
}

/**
 * Runs every scenario (in parallel), writes per-scenario outputs, then the
 * comparison reports and plots. A failed or diverged scenario does not stop
 * the others.
 */
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir, unsigned jobs = 1) {
    ExperimentOutcome outcome;
    outcome.out_dir = out_dir;
    write_file_atomic(out_dir / "effective_config.json", dump_json(to_json(spec)));

    outcome.results.resize(spec.scenarios.size());
    parallel_for(spec.scenarios.size(), jobs, [&](std::size_t i) {
        ScenarioResult& r = outcome.results[i];
        try {
            r = evaluate_scenario(spec.scenarios[i]);
        } catch (const std::exception& e) {
            r.label = spec.scenarios[i].label;
            r.config = spec.scenarios[i];
            r.failure = e.what();
        }
        try {
            write_scenario_outputs(out_dir / r.label, r);
        } catch (const std::exception& e) {
            r.failure = e.what();
        }
    });

    auto find = [&](const std::string& label) -> const ScenarioResult* {
        for (const auto& r : outcome.results)
            if (r.label == label) return &r;
        return nullptr;
    };
    for (const auto& c : spec.comparisons) {
        const ScenarioResult* a = find(c.a);
        const ScenarioResult* b = find(c.b);
        try {
            const auto dir = out_dir / c.label;
            write_file_atomic(dir / "report.json", dump_json(comparison_report(c, *a, *b)));
            if (spec.plots) {
                const auto files = emit_plots({{a->label, &a->trace.records}, {b->label, &b->trace.records}},
                                              a->config.vehicle.to_params());
                for (const auto& f : files) write_file_atomic(dir / f.name, f.svg);
            }
        } catch (const std::exception& e) {
            outcome.errors.push_back(c.label + ": " + e.what());
        }
    }
    return outcome;
}

/// The two-controller comparison on the reference scenario.
inline ExperimentSpec reproduce_paper_spec(double noise_std, std::uint64_t seed) {
    ExperimentSpec spec;
    for (ControllerId id : {ControllerId::Rise, ControllerId::Asmc}) {
        ScenarioConfig cfg = ScenarioConfig::paper(id);
        set_noise(cfg, noise_std, seed);
        spec.scenarios.push_back(cfg);
    }
    spec.comparisons.push_back({"rise_vs_asmc", "rise", "asmc"});
    return spec;
}

}  // namespace rise
