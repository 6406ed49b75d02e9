#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rise/config.hpp"
#include "rise/estimator.hpp"
#include "rise/sim.hpp"

namespace rise {

/// First time after which |v - target| stays within band*|target|, relative to times[0].
inline std::optional<double> settling_time(std::span<const double> times, std::span<const double> values,
                                           double target, double band = 0.02) {
    if (times.size() != values.size()) throw std::invalid_argument("settling_time: length mismatch");
    if (times.empty()) return std::nullopt;
    const double tol = band * std::abs(target);
    std::size_t last_out = values.size();  // index of the last sample outside the band
    for (std::size_t i = values.size(); i-- > 0;) {
        if (!(std::abs(values[i] - target) <= tol)) {
            last_out = i;
            break;
        }
    }
    if (last_out == values.size()) return 0.0;
    if (last_out + 1 == values.size()) return std::nullopt;
    return times[last_out + 1] - times.front();
}

/// Largest excursion beyond target after the first crossing, in % of |target|.
/// The side of the excursion follows the approach direction.
inline double overshoot_percent(std::span<const double> values, double target) {
    if (values.empty() || target == 0.0) return 0.0;
    const double side = values.front() < target ? 1.0 : -1.0;
    std::size_t i = 0;
    while (i < values.size() && side * (values[i] - target) < 0.0) ++i;
    double worst = 0.0;
    for (; i < values.size(); ++i) worst = std::max(worst, side * (values[i] - target));
    return 100.0 * worst / std::abs(target);
}

/// Total variation per unit time.
inline double chattering_index(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw std::invalid_argument("chattering_index: length mismatch");
    if (times.size() < 2) return 0.0;
    double tv = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) tv += std::abs(values[i] - values[i - 1]);
    const double span = times.back() - times.front();
    return span > 0.0 ? tv / span : 0.0;
}

struct RunMetrics {
    double duration = 0.0;
    double window = 0.0;  // trailing window actually used
    std::array<double, 3> position_rmse{};
    std::array<double, 3> attitude_rmse{};
    std::array<std::optional<double>, 4> settling{};  // m, Ix, Iy, Iz
    double iz_overshoot_pct = 0.0;
    double chattering = 0.0;
    std::optional<double> theta_convergence;  // |theta_tilde| / |theta| within the band
    double outer_peak = 0.0;          // max |e_o1|
    double outer_trailing_rms = 0.0;  // RMS of |e_o1| over the window
    double inner_peak = 0.0;
    double inner_trailing_rms = 0.0;
    std::size_t clamp_events = 0;     // logged steps with an active estimate clamp
    std::vector<std::string> notices;
};

/// Metrics over a logged trace. Requires a non-empty trace.
inline RunMetrics compute_metrics(std::span<const SimRecord> records, const ScenarioConfig& cfg) {
    if (records.empty()) throw std::invalid_argument("compute_metrics: empty trace");
    RunMetrics m;
    const std::size_t n = records.size();
    const double t0 = records.front().t;
    m.duration = records.back().t - t0;

    m.window = cfg.diagnostics.trailing_window;
    if (m.duration < m.window) {
        m.notices.push_back("trace shorter than the trailing window; window shrunk to " + std::to_string(m.duration) + " s");
        m.window = m.duration;
    }
    const double t_start = records.back().t - m.window;

    std::vector<double> times(n), series(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = records[i].t;

    std::array<double, 3> pos_sq{}, att_sq{};
    double outer_sq = 0.0, inner_sq = 0.0;
    std::size_t count = 0;
    for (const auto& r : records) {
        m.outer_peak = std::max(m.outer_peak, r.outer.e1.norm());
        m.inner_peak = std::max(m.inner_peak, r.inner.e1.norm());
        if (r.t < t_start) continue;
        ++count;
        for (int a = 0; a < 3; ++a) {
            pos_sq[a] += r.outer.e1[a] * r.outer.e1[a];
            att_sq[a] += r.inner.e1[a] * r.inner.e1[a];
        }
        outer_sq += r.outer.e1.squaredNorm();
        inner_sq += r.inner.e1.squaredNorm();
    }
    for (int a = 0; a < 3; ++a) {
        m.position_rmse[a] = std::sqrt(pos_sq[a] / count);
        m.attitude_rmse[a] = std::sqrt(att_sq[a] / count);
    }
    m.outer_trailing_rms = std::sqrt(outer_sq / count);
    m.inner_trailing_rms = std::sqrt(inner_sq / count);

    const MassInertia truth = cfg.vehicle.to_params();
    const std::array<double, 4> targets{truth.mass, truth.inertia.x(), truth.inertia.y(), truth.inertia.z()};
    for (int p = 0; p < 4; ++p) {
        for (std::size_t i = 0; i < n; ++i) series[i] = p == 0 ? records[i].mass_hat : records[i].inertia_hat[p - 1];
        m.settling[p] = settling_time(times, series, targets[p], cfg.diagnostics.settling_band);
        if (p == 3) m.iz_overshoot_pct = overshoot_percent(series, targets[p]);
    }

    for (std::size_t i = 0; i < n; ++i) series[i] = records[i].wrench.force.norm();
    m.chattering = chattering_index(times, series);

    const Eigen::Vector4d theta(truth.mass, truth.inertia.x(), truth.inertia.y(), truth.inertia.z());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        const Eigen::Vector4d est(r.mass_hat, r.inertia_hat.x(), r.inertia_hat.y(), r.inertia_hat.z());
        series[i] = (est - theta).norm() / theta.norm();
    }
    // relative error settles to 0 within the band: same as settling of 1 + x around 1
    for (auto& v : series) v += 1.0;
    m.theta_convergence = settling_time(times, series, 1.0, cfg.diagnostics.settling_band);

    for (const auto& r : records)
        if (r.clamp_active > 0.0) ++m.clamp_events;
    return m;
}

// ---------------------------------------------------------------------------
// Lyapunov diagnostics (inner loop)

struct MonotonicityReport {
    double floor = 0.0;  // windows ending at or below this level are not checked
    std::size_t windows = 0;
    std::size_t violations = 0;
    double worst_increase = 0.0;  // largest V(t) - V(t - w) found
};

struct LyapunovReport {
    bool applicable = false;
    double w_initial = 0.0;
    double c_i = 0.0;
    MonotonicityReport v1;
    MonotonicityReport v2;
};

/// Checks V(t) <= V(t - window) for all t beyond `transient` + window with V(t) above `floor`.
inline MonotonicityReport monotonicity(std::span<const double> times, std::span<const double> values, double window,
                                       double transient, double floor = 0.0, double rel_tol = 1e-9,
                                       double abs_tol = 1e-15) {
    MonotonicityReport rep;
    rep.floor = floor;
    std::size_t j = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < transient + window) continue;
        while (j + 1 < i && times[j + 1] <= times[i] - window + 1e-12) ++j;
        if (!std::isfinite(values[i]) || !std::isfinite(values[j])) continue;
        if (values[i] <= floor) continue;
        ++rep.windows;
        const double inc = values[i] - values[j];
        if (inc > rel_tol * std::abs(values[j]) + abs_tol) {
            ++rep.violations;
            rep.worst_increase = std::max(rep.worst_increase, inc);
        }
    }
    return rep;
}

/// C_i = s1 (1/lambda_i + 1/rho2) xi^2 + s2 xi / rho2
inline double lyapunov_c_constant(const InnerLearningGains& g, double lambda_i, double rho2, double xi_delta) {
    return g.sigma1 * (1.0 / lambda_i + 1.0 / rho2) * xi_delta * xi_delta + g.sigma2 * xi_delta / rho2;
}

/**
 * Fills v1 and v2 of every RISE record. V1 uses the attitude errors, the
 * filtered error r = e2' + k2 e2 rebuilt from logged accelerations, the
 * auxiliary W integrated from W' = -L with L = r^T (N - beta sgn(e2)) + C,
 * N the disturbance-torque derivative, and the inertia estimation error.
 * V2 = |P2^-1 H2|^2 / 2 is recomputed from the logged norm.
 */
inline LyapunovReport lyapunov_diagnostic(std::vector<SimRecord>& records, const ScenarioConfig& cfg) {
    LyapunovReport rep;
    if (records.empty() || cfg.controller != ControllerId::Rise || !cfg.diagnostics.enabled) return rep;
    rep.applicable = true;
    const auto& gains = cfg.rise.inner;
    const auto& lg = cfg.estimator.inner_gains;
    const Vec3 theta2 = to_vec(cfg.vehicle.inertia);
    const Vec3 gamma_inv = lg.gamma().cwiseInverse();
    rep.c_i = lyapunov_c_constant(lg, cfg.diagnostics.lambda_i, cfg.estimator.inner.rho, cfg.diagnostics.xi_delta_inner);

    auto filtered = [&](const SimRecord& r) {
        const Vec3 e1_dot = r.att_ref.rates - r.state.attitude_rate;
        const Vec3 e2_dot = (r.att_ref.accels - r.ang_accel) + gains.k1 * e1_dot;
        return Vec3(e2_dot + gains.k2 * r.inner.e2);
    };

    double prev_l = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        SimRecord& r = records[i];
        const Vec3 n_delta = i == 0 ? Vec3::Zero()
                                    : Vec3((r.dist.torque - records[i - 1].dist.torque) / (r.t - records[i - 1].t));
        const Vec3 ri = filtered(r);
        const double l = ri.dot(n_delta - gains.beta * sgn(r.inner.e2)) + rep.c_i;
        if (i == 0) {
            w = gains.beta * r.inner.e2.lpNorm<1>() - r.inner.e2.dot(n_delta);
            rep.w_initial = w;
        } else {
            w -= 0.5 * (l + prev_l) * (r.t - records[i - 1].t);
        }
        prev_l = l;

        const Vec3 tt = r.inertia_hat - theta2;
        r.v1 = 0.5 * r.inner.e1.squaredNorm() + 0.5 * r.inner.e2.squaredNorm() +
               0.5 * ri.dot(theta2.cwiseProduct(ri)) + w + 0.5 * tt.dot(gamma_inv.cwiseProduct(tt));
        r.v2 = 0.5 * r.pinv_h2 * r.pinv_h2;
    }

    std::vector<double> times(records.size()), v1(records.size()), v2(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        times[i] = records[i].t;
        v1[i] = records[i].v1;
        v2[i] = records[i].v2;
    }
    rep.v1 = monotonicity(times, v1, cfg.diagnostics.monotonic_window, cfg.diagnostics.transient);
    // the normalized term moves theta_hat by up to Gamma_max s2 dt per step, so near H = 0 V2
    // chatters inside half that step squared; only descent above the band is checked
    const double gamma_max = std::max({lg.gamma_diag[0], lg.gamma_diag[1], lg.gamma_diag[2]});
    const double step = gamma_max * lg.sigma2 * cfg.dt;
    rep.v2 = monotonicity(times, v2, cfg.diagnostics.monotonic_window, cfg.diagnostics.transient, 0.5 * step * step);
    return rep;
}

// ---------------------------------------------------------------------------
// Finite-time check with constants taken from the realized run

struct FtAnalysis {
    FtConstants constants;
    double lambda_min = 0.0;  // min over the run of lambda_min(P2)
    double p_norm_max = 0.0;  // max Frobenius norm of P2
    double phi_max = 0.0;
    double xi_delta = 0.0;
    FtReport report;
};

/**
 * Evaluates the finite-time bound of the inner estimator. lambda, |P| and
 * |Phi| bounds come from the logged trajectory; xi_delta comes from the
 * config, or from the realized max |P2 theta2 - Q2| when the config leaves it
 * at zero.
 */
inline FtAnalysis ft_analysis(std::span<const SimRecord> records, const ScenarioConfig& cfg,
                              double threshold_ratio = 1e-3) {
    FtAnalysis out;
    if (records.empty() || cfg.controller != ControllerId::Rise) return out;
    out.lambda_min = std::numeric_limits<double>::infinity();
    double delta_max = 0.0;
    std::vector<double> times, norms;
    times.reserve(records.size());
    norms.reserve(records.size());
    for (const auto& r : records) {
        out.lambda_min = std::min(out.lambda_min, r.p2_lambda_min);
        out.p_norm_max = std::max(out.p_norm_max, r.p2_norm);
        out.phi_max = std::max(out.phi_max, r.phi2_norm);
        delta_max = std::max(delta_max, r.delta_bar2_norm);
        times.push_back(r.t);
        norms.push_back(r.pinv_h2);
    }
    const double rho2 = cfg.estimator.inner.rho;
    out.xi_delta = cfg.diagnostics.xi_delta_inner > 0.0 ? cfg.diagnostics.xi_delta_inner : delta_max;
    const Vec3 theta2 = to_vec(cfg.vehicle.inertia);
    const double a = ft_initial_level((records.front().inertia_hat - theta2).norm(), out.xi_delta, rho2);
    const auto& g = cfg.estimator.inner_gains;
    const double gamma_min = std::min({g.gamma_diag[0], g.gamma_diag[1], g.gamma_diag[2]});
    out.constants = ft_constants(out.lambda_min, out.p_norm_max, out.phi_max, gamma_min, g, a);
    out.report = ft_diagnostic(times, norms, out.constants, out.xi_delta, rho2, threshold_ratio);
    return out;
}

}  // namespace rise
