#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "rise/config.hpp"
#include "rise/errors.hpp"
#include "rise/metrics.hpp"
#include "rise/sim.hpp"

namespace rise {

using json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kTraceSchema = "rise-trace/1";
inline constexpr const char* kMetricsSchema = "rise-metrics/1";

// ---------------------------------------------------------------------------
// Files

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto " + path.string());
    }
}

// ---------------------------------------------------------------------------
// JSON helpers

/// Parses JSON text; syntax errors carry line and column.
inline json parse_json_text(std::string_view text, const std::string& source = "config") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
            throw ConfigError(source + " is empty; expected a JSON object", "");
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what(), "");
    }
}

/**
 * Strict view over one JSON object. Reading a key marks it used; finish()
 * rejects anything left over. Missing keys keep the caller's default.
 */
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError("expected an object", path_.empty() ? "/" : path_);
    }

    std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }
    bool has(std::string_view key) const { return j_.contains(std::string(key)); }

    template <class T>
    void read(std::string_view key, T& out) {
        const std::string k(key);
        used_.insert(k);
        if (!j_.contains(k)) return;
        read_value(j_.at(k), at(key), out);
    }

    template <class F>
    void object(std::string_view key, F&& body) {
        const std::string k(key);
        used_.insert(k);
        if (!j_.contains(k)) return;
        ObjectReader child(j_.at(k), at(key));
        body(child);
        child.finish();
    }

    const json& raw(std::string_view key) {
        used_.insert(std::string(key));
        return j_.at(std::string(key));
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'", path_ + "/" + k);
        }
    }

    static void read_value(const json& v, const std::string& path, double& out) {
        if (!v.is_number()) throw ConfigError("expected a number", path);
        out = v.get<double>();
    }
    static void read_value(const json& v, const std::string& path, int& out) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
        out = v.get<int>();
    }
    static void read_value(const json& v, const std::string& path, std::uint64_t& out) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError("expected a non-negative integer", path);
        }
        out = v.get<std::uint64_t>();
    }
    static void read_value(const json& v, const std::string& path, bool& out) {
        if (!v.is_boolean()) throw ConfigError("expected true or false", path);
        out = v.get<bool>();
    }
    static void read_value(const json& v, const std::string& path, std::string& out) {
        if (!v.is_string()) throw ConfigError("expected a string", path);
        out = v.get<std::string>();
    }
    static void read_value(const json& v, const std::string& path, std::array<double, 3>& out) {
        if (!v.is_array() || v.size() != 3) throw ConfigError("expected an array of 3 numbers", path);
        for (std::size_t i = 0; i < 3; ++i) read_value(v[i], path + "/" + std::to_string(i), out[i]);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& text, const std::array<std::pair<const char*, Enum>, N>& table,
                const std::string& path) {
    std::string options;
    for (const auto& [name, value] : table) {
        if (text == name) return value;
        options += options.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError("unknown value '" + text + "' (expected one of: " + options + ")", path);
}

template <class Enum, std::size_t N>
const char* enum_name(Enum value, const std::array<std::pair<const char*, Enum>, N>& table) {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    return "?";
}

inline constexpr std::array<std::pair<const char*, ControllerId>, 2> kControllerNames{
    {{"rise", ControllerId::Rise}, {"asmc", ControllerId::Asmc}}};
inline constexpr std::array<std::pair<const char*, DisturbanceMode>, 2> kDisturbanceModeNames{
    {{"dynamic", DisturbanceMode::Dynamic}, {"measurement", DisturbanceMode::Measurement}}};
inline constexpr std::array<std::pair<const char*, ThrustMode>, 2> kThrustModeNames{
    {{"ideal", ThrustMode::Ideal}, {"projected", ThrustMode::Projected}}};
inline constexpr std::array<std::pair<const char*, OffsetMode>, 2> kOffsetModeNames{
    {{"constant", OffsetMode::Constant}, {"decaying", OffsetMode::Decaying}}};
inline constexpr std::array<std::pair<const char*, TrajectoryFamily>, 2> kFamilyNames{
    {{"sinusoid", TrajectoryFamily::Sinusoid}, {"constant", TrajectoryFamily::Constant}}};

// ---------------------------------------------------------------------------
// Scenario <-> JSON

inline json to_json(const SinusoidAxis& a) {
    return {{"amplitude", a.amplitude}, {"frequency", a.frequency}, {"phase", a.phase}, {"offset", a.offset}};
}
inline json to_json(const OuChannel& c) { return {{"std", c.std}, {"bandwidth", c.bandwidth}, {"clamp", c.clamp}}; }
inline json to_json(const LoopGains& g) { return {{"k1", g.k1}, {"k2", g.k2}, {"ks", g.ks}, {"beta", g.beta}}; }
inline json to_json(const LoopFilterConfig& f) {
    return {{"alpha", f.alpha}, {"rho", f.rho}, {"forgetting", f.forgetting}};
}
inline json to_json(const SmcLoopGains& g) { return {{"lambda", g.lambda}, {"eta_sw", g.eta_sw}, {"k_grad", g.k_grad}}; }
inline json to_json(const DisturbanceBounds& b) { return {{"xi", b.xi}, {"xi_dot", b.xi_dot}}; }
inline json to_json(const ParamsConfig& p) { return {{"mass", p.mass}, {"inertia", p.inertia}}; }

inline json to_json(const ScenarioConfig& c) {
    json j;
    j["label"] = c.label;
    j["controller"] = enum_name(c.controller, kControllerNames);
    j["duration"] = c.duration;
    j["dt"] = c.dt;
    j["log_interval"] = c.log_interval;
    j["gravity"] = c.gravity;
    j["vehicle"] = to_json(c.vehicle);
    j["initial_state"] = {{"position", c.initial_state.position},
                          {"velocity", c.initial_state.velocity},
                          {"attitude", c.initial_state.attitude},
                          {"attitude_rate", c.initial_state.attitude_rate}};
    j["initial_estimate"] = to_json(c.initial_estimate);
    const auto& tr = c.trajectory;
    j["trajectory"] = {{"family", enum_name(tr.family, kFamilyNames)},
                       {"position", json::array({to_json(tr.position[0]), to_json(tr.position[1]), to_json(tr.position[2])})},
                       {"yaw", to_json(tr.yaw)},
                       {"setpoint", tr.setpoint},
                       {"yaw_setpoint", tr.yaw_setpoint}};
    j["disturbance"] = {{"mode", enum_name(c.disturbance.mode, kDisturbanceModeNames)},
                        {"seed", c.disturbance.seed},
                        {"force", to_json(c.disturbance.force)},
                        {"torque", to_json(c.disturbance.torque)}};
    j["thrust_mode"] = enum_name(c.thrust_mode, kThrustModeNames);
    j["reference"] = {{"attitude_filter_tau", c.reference.attitude_filter_tau},
                      {"thrust_epsilon", c.reference.thrust_epsilon},
                      {"cross_epsilon", c.reference.cross_epsilon}};
    j["rise"] = {{"outer", to_json(c.rise.outer)}, {"inner", to_json(c.rise.inner)}};
    const auto& e = c.estimator;
    j["estimator"] = {{"offset_mode", enum_name(e.offset_mode, kOffsetModeNames)},
                      {"outer", to_json(e.outer)},
                      {"inner", to_json(e.inner)},
                      {"outer_gains", {{"gamma", e.outer_gains.gamma}, {"gamma1", e.outer_gains.gamma1}}},
                      {"inner_gains",
                       {{"gamma", e.inner_gains.gamma_diag},
                        {"sigma1", e.inner_gains.sigma1},
                        {"sigma2", e.inner_gains.sigma2},
                        {"h_epsilon", e.inner_gains.h_epsilon}}}};
    const auto& a = c.asmc;
    j["asmc"] = {{"outer", to_json(a.outer)},
                 {"inner", to_json(a.inner)},
                 {"mass_min", a.mass_min},
                 {"mass_max", a.mass_max},
                 {"inertia_min", a.inertia_min},
                 {"inertia_max", a.inertia_max},
                 {"attitude_filter_tau", a.attitude_filter_tau}};
    const auto& d = c.diagnostics;
    j["diagnostics"] = {{"enabled", d.enabled},
                        {"outer_bounds", to_json(d.outer_bounds)},
                        {"inner_bounds", to_json(d.inner_bounds)},
                        {"xi_delta_outer", d.xi_delta_outer},
                        {"xi_delta_inner", d.xi_delta_inner},
                        {"lambda_i", d.lambda_i},
                        {"monotonic_window", d.monotonic_window},
                        {"transient", d.transient},
                        {"trailing_window", d.trailing_window},
                        {"settling_band", d.settling_band}};
    return j;
}

namespace detail {

inline void read_axis(ObjectReader& r, SinusoidAxis& a) {
    r.read("amplitude", a.amplitude);
    r.read("frequency", a.frequency);
    r.read("phase", a.phase);
    r.read("offset", a.offset);
}
inline void read_channel(ObjectReader& r, OuChannel& c) {
    r.read("std", c.std);
    r.read("bandwidth", c.bandwidth);
    r.read("clamp", c.clamp);
}
inline void read_loop(ObjectReader& r, LoopGains& g) {
    r.read("k1", g.k1);
    r.read("k2", g.k2);
    r.read("ks", g.ks);
    r.read("beta", g.beta);
}
inline void read_filter(ObjectReader& r, LoopFilterConfig& f) {
    r.read("alpha", f.alpha);
    r.read("rho", f.rho);
    r.read("forgetting", f.forgetting);
}
inline void read_smc(ObjectReader& r, SmcLoopGains& g) {
    r.read("lambda", g.lambda);
    r.read("eta_sw", g.eta_sw);
    r.read("k_grad", g.k_grad);
}
inline void read_bounds(ObjectReader& r, DisturbanceBounds& b) {
    r.read("xi", b.xi);
    r.read("xi_dot", b.xi_dot);
}
inline void read_params(ObjectReader& r, ParamsConfig& p) {
    r.read("mass", p.mass);
    r.read("inertia", p.inertia);
}

template <class Enum, std::size_t N>
void read_enum(ObjectReader& r, std::string_view key, Enum& out, const std::array<std::pair<const char*, Enum>, N>& table) {
    std::string text = enum_name(out, table);
    r.read(key, text);
    out = parse_enum(text, table, r.at(key));
}

}  // namespace detail

/// Reads one scenario at `path` over `base` (defaults), then validates it.
inline ScenarioConfig scenario_from_json(const json& j, const std::string& path = "",
                                         const ScenarioConfig& base = ScenarioConfig{}) {
    using namespace detail;
    ScenarioConfig c = base;
    ObjectReader r(j, path);
    r.read("label", c.label);
    read_enum(r, "controller", c.controller, kControllerNames);
    r.read("duration", c.duration);
    r.read("dt", c.dt);
    r.read("log_interval", c.log_interval);
    r.read("gravity", c.gravity);
    r.object("vehicle", [&](ObjectReader& o) { read_params(o, c.vehicle); });
    r.object("initial_state", [&](ObjectReader& o) {
        o.read("position", c.initial_state.position);
        o.read("velocity", c.initial_state.velocity);
        o.read("attitude", c.initial_state.attitude);
        o.read("attitude_rate", c.initial_state.attitude_rate);
    });
    r.object("initial_estimate", [&](ObjectReader& o) { read_params(o, c.initial_estimate); });
    r.object("trajectory", [&](ObjectReader& o) {
        read_enum(o, "family", c.trajectory.family, kFamilyNames);
        if (o.has("position")) {
            const json& arr = o.raw("position");
            if (!arr.is_array() || arr.size() != 3) throw ConfigError("expected 3 axis objects", o.at("position"));
            for (std::size_t i = 0; i < 3; ++i) {
                ObjectReader axis(arr[i], o.at("position") + "/" + std::to_string(i));
                read_axis(axis, c.trajectory.position[i]);
                axis.finish();
            }
        }
        o.object("yaw", [&](ObjectReader& y) { read_axis(y, c.trajectory.yaw); });
        o.read("setpoint", c.trajectory.setpoint);
        o.read("yaw_setpoint", c.trajectory.yaw_setpoint);
    });
    r.object("disturbance", [&](ObjectReader& o) {
        read_enum(o, "mode", c.disturbance.mode, kDisturbanceModeNames);
        o.read("seed", c.disturbance.seed);
        o.object("force", [&](ObjectReader& ch) { read_channel(ch, c.disturbance.force); });
        o.object("torque", [&](ObjectReader& ch) { read_channel(ch, c.disturbance.torque); });
    });
    read_enum(r, "thrust_mode", c.thrust_mode, kThrustModeNames);
    r.object("reference", [&](ObjectReader& o) {
        o.read("attitude_filter_tau", c.reference.attitude_filter_tau);
        o.read("thrust_epsilon", c.reference.thrust_epsilon);
        o.read("cross_epsilon", c.reference.cross_epsilon);
    });
    r.object("rise", [&](ObjectReader& o) {
        o.object("outer", [&](ObjectReader& g) { read_loop(g, c.rise.outer); });
        o.object("inner", [&](ObjectReader& g) { read_loop(g, c.rise.inner); });
    });
    r.object("estimator", [&](ObjectReader& o) {
        read_enum(o, "offset_mode", c.estimator.offset_mode, kOffsetModeNames);
        o.object("outer", [&](ObjectReader& f) { read_filter(f, c.estimator.outer); });
        o.object("inner", [&](ObjectReader& f) { read_filter(f, c.estimator.inner); });
        o.object("outer_gains", [&](ObjectReader& g) {
            g.read("gamma", c.estimator.outer_gains.gamma);
            g.read("gamma1", c.estimator.outer_gains.gamma1);
        });
        o.object("inner_gains", [&](ObjectReader& g) {
            g.read("gamma", c.estimator.inner_gains.gamma_diag);
            g.read("sigma1", c.estimator.inner_gains.sigma1);
            g.read("sigma2", c.estimator.inner_gains.sigma2);
            g.read("h_epsilon", c.estimator.inner_gains.h_epsilon);
        });
    });
    r.object("asmc", [&](ObjectReader& o) {
        o.object("outer", [&](ObjectReader& g) { read_smc(g, c.asmc.outer); });
        o.object("inner", [&](ObjectReader& g) { read_smc(g, c.asmc.inner); });
        o.read("mass_min", c.asmc.mass_min);
        o.read("mass_max", c.asmc.mass_max);
        o.read("inertia_min", c.asmc.inertia_min);
        o.read("inertia_max", c.asmc.inertia_max);
        o.read("attitude_filter_tau", c.asmc.attitude_filter_tau);
    });
    r.object("diagnostics", [&](ObjectReader& o) {
        auto& d = c.diagnostics;
        o.read("enabled", d.enabled);
        o.object("outer_bounds", [&](ObjectReader& b) { read_bounds(b, d.outer_bounds); });
        o.object("inner_bounds", [&](ObjectReader& b) { read_bounds(b, d.inner_bounds); });
        o.read("xi_delta_outer", d.xi_delta_outer);
        o.read("xi_delta_inner", d.xi_delta_inner);
        o.read("lambda_i", d.lambda_i);
        o.read("monotonic_window", d.monotonic_window);
        o.read("transient", d.transient);
        o.read("trailing_window", d.trailing_window);
        o.read("settling_band", d.settling_band);
    });
    r.finish();

    try {
        validate_scenario(c);
    } catch (const ConfigError& e) {
        throw e.nested(path);
    }
    if (!(c.diagnostics.lambda_i > 0.0 && c.diagnostics.lambda_i < c.estimator.inner.rho)) {
        throw ConfigError("lambda_i must lie in (0, rho2)", path + "/diagnostics/lambda_i");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Experiment spec

struct ComparisonSpec {
    std::string label;
    std::string a;  // scenario labels
    std::string b;

    bool operator==(const ComparisonSpec&) const = default;
};

struct ExperimentSpec {
    std::string output_dir;  // empty: decided by the caller
    bool plots = true;
    std::vector<ScenarioConfig> scenarios;
    std::vector<ComparisonSpec> comparisons;

    bool operator==(const ExperimentSpec&) const = default;
};

inline bool valid_label(const std::string& s) {
    if (s.empty() || s.size() > 64) return false;
    for (char ch : s) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
                        ch == '-' || ch == '.';
        if (!ok) return false;
    }
    return s != "." && s != "..";
}

inline json to_json(const ExperimentSpec& spec) {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["output_dir"] = spec.output_dir;
    j["plots"] = spec.plots;
    j["scenarios"] = json::array();
    for (const auto& s : spec.scenarios) j["scenarios"].push_back(to_json(s));
    j["comparisons"] = json::array();
    for (const auto& c : spec.comparisons) j["comparisons"].push_back({{"label", c.label}, {"a", c.a}, {"b", c.b}});
    return j;
}

inline ExperimentSpec spec_from_json(const json& j) {
    ExperimentSpec spec;
    ObjectReader r(j, "");
    int version = kConfigSchemaVersion;
    r.read("schema_version", version);
    if (version != kConfigSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(version), "/schema_version");
    }
    r.read("output_dir", spec.output_dir);
    r.read("plots", spec.plots);
    if (!r.has("scenarios")) throw ConfigError("missing required key", "/scenarios");
    const json& scenarios = r.raw("scenarios");
    if (!scenarios.is_array() || scenarios.empty()) throw ConfigError("expected a non-empty array", "/scenarios");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const std::string path = "/scenarios/" + std::to_string(i);
        ScenarioConfig s = scenario_from_json(scenarios[i], path);
        if (!valid_label(s.label)) throw ConfigError("label must match [A-Za-z0-9_.-]{1,64}", path + "/label");
        if (!labels.insert(s.label).second) throw ConfigError("duplicate label '" + s.label + "'", path + "/label");
        spec.scenarios.push_back(std::move(s));
    }
    if (r.has("comparisons")) {
        const json& comps = r.raw("comparisons");
        if (!comps.is_array()) throw ConfigError("expected an array", "/comparisons");
        std::set<std::string> comp_labels;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const std::string path = "/comparisons/" + std::to_string(i);
            ComparisonSpec c;
            ObjectReader cr(comps[i], path);
            cr.read("label", c.label);
            cr.read("a", c.a);
            cr.read("b", c.b);
            cr.finish();
            if (c.label.empty()) c.label = c.a + "_vs_" + c.b;
            if (!valid_label(c.label)) throw ConfigError("label must match [A-Za-z0-9_.-]{1,64}", path + "/label");
            if (labels.count(c.label) || !comp_labels.insert(c.label).second) {
                throw ConfigError("duplicate label '" + c.label + "'", path + "/label");
            }
            if (!labels.count(c.a)) throw ConfigError("no scenario labelled '" + c.a + "'", path + "/a");
            if (!labels.count(c.b)) throw ConfigError("no scenario labelled '" + c.b + "'", path + "/b");
            if (c.a == c.b) throw ConfigError("a comparison needs two different scenarios", path + "/b");
            spec.comparisons.push_back(c);
        }
    }
    r.finish();
    return spec;
}

inline ExperimentSpec load_config(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    return spec_from_json(parse_json_text(text, path.filename().string()));
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Trace CSV

struct TraceColumn {
    const char* name;
    double (*get)(const SimRecord&);
    void (*set)(SimRecord&, double);
};

#define RISE_TRACE_COLUMN(NAME, EXPR) \
    TraceColumn { NAME, [](const SimRecord& r) -> double { return r.EXPR; }, [](SimRecord& r, double v) { r.EXPR = v; } }

/// Fixed column order of the trace CSV (see docs/schema.md).
inline const std::vector<TraceColumn>& trace_columns() {
    static const std::vector<TraceColumn> cols = {
        RISE_TRACE_COLUMN("t", t),
        RISE_TRACE_COLUMN("x", state.position.x()),
        RISE_TRACE_COLUMN("y", state.position.y()),
        RISE_TRACE_COLUMN("z", state.position.z()),
        RISE_TRACE_COLUMN("vx", state.velocity.x()),
        RISE_TRACE_COLUMN("vy", state.velocity.y()),
        RISE_TRACE_COLUMN("vz", state.velocity.z()),
        RISE_TRACE_COLUMN("roll", state.attitude.x()),
        RISE_TRACE_COLUMN("pitch", state.attitude.y()),
        RISE_TRACE_COLUMN("yaw", state.attitude.z()),
        RISE_TRACE_COLUMN("roll_rate", state.attitude_rate.x()),
        RISE_TRACE_COLUMN("pitch_rate", state.attitude_rate.y()),
        RISE_TRACE_COLUMN("yaw_rate", state.attitude_rate.z()),
        RISE_TRACE_COLUMN("xd", pos_d.x()),
        RISE_TRACE_COLUMN("yd", pos_d.y()),
        RISE_TRACE_COLUMN("zd", pos_d.z()),
        RISE_TRACE_COLUMN("vxd", vel_d.x()),
        RISE_TRACE_COLUMN("vyd", vel_d.y()),
        RISE_TRACE_COLUMN("vzd", vel_d.z()),
        RISE_TRACE_COLUMN("axd", acc_d.x()),
        RISE_TRACE_COLUMN("ayd", acc_d.y()),
        RISE_TRACE_COLUMN("azd", acc_d.z()),
        RISE_TRACE_COLUMN("yaw_d", yaw_d),
        RISE_TRACE_COLUMN("roll_ref", att_ref.angles.x()),
        RISE_TRACE_COLUMN("pitch_ref", att_ref.angles.y()),
        RISE_TRACE_COLUMN("yaw_ref", att_ref.angles.z()),
        RISE_TRACE_COLUMN("roll_rate_ref", att_ref.rates.x()),
        RISE_TRACE_COLUMN("pitch_rate_ref", att_ref.rates.y()),
        RISE_TRACE_COLUMN("yaw_rate_ref", att_ref.rates.z()),
        RISE_TRACE_COLUMN("roll_acc_ref", att_ref.accels.x()),
        RISE_TRACE_COLUMN("pitch_acc_ref", att_ref.accels.y()),
        RISE_TRACE_COLUMN("yaw_acc_ref", att_ref.accels.z()),
        RISE_TRACE_COLUMN("eo1_x", outer.e1.x()),
        RISE_TRACE_COLUMN("eo1_y", outer.e1.y()),
        RISE_TRACE_COLUMN("eo1_z", outer.e1.z()),
        RISE_TRACE_COLUMN("eo2_x", outer.e2.x()),
        RISE_TRACE_COLUMN("eo2_y", outer.e2.y()),
        RISE_TRACE_COLUMN("eo2_z", outer.e2.z()),
        RISE_TRACE_COLUMN("ei1_roll", inner.e1.x()),
        RISE_TRACE_COLUMN("ei1_pitch", inner.e1.y()),
        RISE_TRACE_COLUMN("ei1_yaw", inner.e1.z()),
        RISE_TRACE_COLUMN("ei2_roll", inner.e2.x()),
        RISE_TRACE_COLUMN("ei2_pitch", inner.e2.y()),
        RISE_TRACE_COLUMN("ei2_yaw", inner.e2.z()),
        RISE_TRACE_COLUMN("Fx", wrench.force.x()),
        RISE_TRACE_COLUMN("Fy", wrench.force.y()),
        RISE_TRACE_COLUMN("Fz", wrench.force.z()),
        RISE_TRACE_COLUMN("tau_roll", wrench.torque.x()),
        RISE_TRACE_COLUMN("tau_pitch", wrench.torque.y()),
        RISE_TRACE_COLUMN("tau_yaw", wrench.torque.z()),
        RISE_TRACE_COLUMN("m_hat", mass_hat),
        RISE_TRACE_COLUMN("Ix_hat", inertia_hat.x()),
        RISE_TRACE_COLUMN("Iy_hat", inertia_hat.y()),
        RISE_TRACE_COLUMN("Iz_hat", inertia_hat.z()),
        RISE_TRACE_COLUMN("H1", h1),
        RISE_TRACE_COLUMN("H2_x", h2.x()),
        RISE_TRACE_COLUMN("H2_y", h2.y()),
        RISE_TRACE_COLUMN("H2_z", h2.z()),
        RISE_TRACE_COLUMN("P1", p1),
        RISE_TRACE_COLUMN("P2_lambda_min", p2_lambda_min),
        RISE_TRACE_COLUMN("P2_norm", p2_norm),
        RISE_TRACE_COLUMN("dist_fx", dist.force.x()),
        RISE_TRACE_COLUMN("dist_fy", dist.force.y()),
        RISE_TRACE_COLUMN("dist_fz", dist.force.z()),
        RISE_TRACE_COLUMN("dist_t_roll", dist.torque.x()),
        RISE_TRACE_COLUMN("dist_t_pitch", dist.torque.y()),
        RISE_TRACE_COLUMN("dist_t_yaw", dist.torque.z()),
        RISE_TRACE_COLUMN("ax", accel.x()),
        RISE_TRACE_COLUMN("ay", accel.y()),
        RISE_TRACE_COLUMN("az", accel.z()),
        RISE_TRACE_COLUMN("roll_acc", ang_accel.x()),
        RISE_TRACE_COLUMN("pitch_acc", ang_accel.y()),
        RISE_TRACE_COLUMN("yaw_acc", ang_accel.z()),
        RISE_TRACE_COLUMN("V1", v1),
        RISE_TRACE_COLUMN("V2", v2),
        RISE_TRACE_COLUMN("PinvH1", pinv_h1),
        RISE_TRACE_COLUMN("PinvH2", pinv_h2),
        RISE_TRACE_COLUMN("id_res1", id_res1),
        RISE_TRACE_COLUMN("id_res2", id_res2),
        RISE_TRACE_COLUMN("Phi2_norm", phi2_norm),
        RISE_TRACE_COLUMN("DeltaBar2_norm", delta_bar2_norm),
        RISE_TRACE_COLUMN("clamp_active", clamp_active),
    };
    return cols;
}

#undef RISE_TRACE_COLUMN

inline std::string trace_header() {
    std::string h;
    for (const auto& c : trace_columns()) {
        if (!h.empty()) h += ',';
        h += c.name;
    }
    return h;
}

inline void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline std::string trace_to_csv(std::span<const SimRecord> records) {
    const auto& cols = trace_columns();
    std::string out = trace_header() + "\n";
    out.reserve(out.size() + records.size() * cols.size() * 12);
    for (const auto& r : records) {
        std::size_t written = 0;
        for (const auto& c : cols) {
            if (written++) out += ',';
            append_number(out, c.get(r));
        }
        if (written != cols.size()) throw IoError("trace schema violation while writing");
        out += '\n';
    }
    return out;
}

inline std::vector<SimRecord> trace_from_csv(std::string_view text) {
    const auto& cols = trace_columns();
    std::vector<SimRecord> records;
    std::size_t pos = 0, line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };
    std::string_view line;
    if (!next_line(line)) throw IoError("trace: empty file");
    if (line != trace_header()) throw IoError("trace: header does not match schema " + std::string(kTraceSchema));
    while (next_line(line)) {
        if (line.empty()) continue;
        SimRecord r;
        std::size_t col = 0, start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view field = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
            if (col >= cols.size()) throw IoError("trace: too many fields on line " + std::to_string(line_no));
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
                throw IoError("trace: bad number '" + std::string(field) + "' on line " + std::to_string(line_no));
            }
            cols[col++].set(r, v);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (col != cols.size()) throw IoError("trace: missing fields on line " + std::to_string(line_no));
        records.push_back(r);
    }
    return records;
}

// ---------------------------------------------------------------------------
// Metrics JSON

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// NaN and inf are not representable in JSON; they become null.
inline json finite_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const RunMetrics& m) {
    json j;
    j["duration"] = m.duration;
    j["trailing_window"] = m.window;
    j["position_rmse"] = m.position_rmse;
    j["attitude_rmse"] = m.attitude_rmse;
    j["settling_time"] = {{"m", optional_json(m.settling[0])},
                          {"Ix", optional_json(m.settling[1])},
                          {"Iy", optional_json(m.settling[2])},
                          {"Iz", optional_json(m.settling[3])}};
    j["iz_overshoot_pct"] = m.iz_overshoot_pct;
    j["chattering_index"] = m.chattering;
    j["theta_convergence_time"] = optional_json(m.theta_convergence);
    j["outer_error_peak"] = m.outer_peak;
    j["outer_error_trailing_rms"] = m.outer_trailing_rms;
    j["inner_error_peak"] = m.inner_peak;
    j["inner_error_trailing_rms"] = m.inner_trailing_rms;
    j["clamp_events"] = m.clamp_events;
    j["notices"] = m.notices;
    return j;
}

inline json to_json(const SimStats& s) {
    return {{"steps", s.steps},
            {"min_p1_margin", finite_json(s.min_p1_margin)},
            {"min_p2_margin", finite_json(s.min_p2_margin)},
            {"max_corollary_ratio", finite_json(s.max_corollary_ratio)},
            {"max_identity_residual_outer", finite_json(s.max_id_res1)},
            {"max_identity_residual_inner", finite_json(s.max_id_res2)},
            {"clamp_events", s.clamp_events},
            {"held_extractions", s.held_extractions}};
}

inline json to_json(const LyapunovReport& r) {
    auto mono = [](const MonotonicityReport& m) {
        return json{{"floor", m.floor}, {"windows", m.windows}, {"violations", m.violations}, {"worst_increase", m.worst_increase}};
    };
    return {{"applicable", r.applicable}, {"W0", r.w_initial}, {"C_i", r.c_i}, {"V1", mono(r.v1)}, {"V2", mono(r.v2)}};
}

inline json to_json(const FtAnalysis& f) {
    return {{"lambda_min_P2", finite_json(f.lambda_min)},
            {"P2_norm_max", f.p_norm_max},
            {"Phi_max", f.phi_max},
            {"xi_delta", f.xi_delta},
            {"c1", f.constants.c1},
            {"c2", f.constants.c2},
            {"a", f.constants.a},
            {"bound_time", optional_json(f.report.bound_time)},
            {"crossing_time", optional_json(f.report.crossing_time)},
            {"initial_norm", f.report.initial_norm},
            {"threshold", f.report.threshold},
            {"min_norm", f.report.min_norm},
            {"within_bound", f.report.within_bound()}};
}

}  // namespace rise
