#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rise/asmc.hpp"
#include "rise/config.hpp"
#include "rise/disturbance.hpp"
#include "rise/estimator.hpp"
#include "rise/model.hpp"
#include "rise/rise_controller.hpp"
#include "rise/trajectory.hpp"

namespace rise {

/// Classical RK4 step of x' = f(x).
template <class Vector, class F>
Vector rk4_step(const Vector& x, F&& f, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
    const Vector k1 = f(x);
    const Vector k2 = f(Vector(x + 0.5 * dt * k1));
    const Vector k3 = f(Vector(x + 0.5 * dt * k2));
    const Vector k4 = f(Vector(x + dt * k3));
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One plant step with wrench and disturbance held constant over dt.
inline VehicleState rk4_step(const VehicleState& state, const ControlWrench& wrench, const MassInertia& params,
                             const Disturbance& dist, double dt, double gravity = kDefaultGravity) {
    auto f = [&](const StateVector& x) {
        return dynamics_deriv(VehicleState::from_vector(x), wrench, params, dist, gravity);
    };
    const StateVector next = rk4_step(state.to_vector(), f, dt);
    if (!next.allFinite()) throw DivergenceError("rk4_step: non-finite state");
    return VehicleState::from_vector(next);
}

/// One logged sample. Everything is a double so the CSV schema maps 1:1.
struct SimRecord {
    double t = 0.0;
    VehicleState state;
    Vec3 pos_d = Vec3::Zero();
    Vec3 vel_d = Vec3::Zero();
    Vec3 acc_d = Vec3::Zero();
    double yaw_d = 0.0;
    AttitudeRef att_ref;
    TrackingErrors outer;
    TrackingErrors inner;
    ControlWrench wrench;  // commanded
    double mass_hat = 0.0;
    Vec3 inertia_hat = Vec3::Zero();
    double h1 = 0.0;
    Vec3 h2 = Vec3::Zero();
    double p1 = 0.0;
    double p2_lambda_min = 0.0;
    double p2_norm = 0.0;  // Frobenius
    Disturbance dist;
    Vec3 accel = Vec3::Zero();      // plant translational acceleration
    Vec3 ang_accel = Vec3::Zero();  // plant Euler-angle acceleration
    double v1 = 0.0;
    double v2 = 0.0;
    double pinv_h1 = 0.0;
    double pinv_h2 = 0.0;
    double id_res1 = 0.0;
    double id_res2 = 0.0;
    double phi2_norm = 0.0;
    double delta_bar2_norm = 0.0;
    double clamp_active = 0.0;
};

/// Per-step checks accumulated over the whole run (every step, not only logged ones).
struct SimStats {
    std::size_t steps = 0;
    double min_p1_margin = std::numeric_limits<double>::infinity();  // P1 - rho1
    double min_p2_margin = std::numeric_limits<double>::infinity();  // lambda_min(P2) - rho2
    double max_corollary_ratio = 0.0;  // |P2|_2 / (zeta2^2 / l2 + rho2)
    double max_id_res1 = 0.0;
    double max_id_res2 = 0.0;
    std::size_t clamp_events = 0;
    std::size_t held_extractions = 0;
    double wall_seconds = 0.0;
};

struct SimTrace {
    std::vector<SimRecord> records;
    std::vector<GramSample> gram_history;
    SimStats stats;
    std::vector<std::string> notices;
    std::optional<std::string> error;  // set when the run aborted

    bool diverged() const { return error.has_value(); }
};

struct ControlStep {
    ControlWrench wrench;
    TrackingErrors outer;
    TrackingErrors inner;
    AttitudeRef ref;
};

/// Estimator-side quantities reported after each adaptation step.
struct AdaptInfo {
    double mass_hat = 0.0;  // estimate used by the control of this step
    Vec3 inertia_hat = Vec3::Zero();
    double h1 = std::numeric_limits<double>::quiet_NaN();
    Vec3 h2 = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    double p1 = std::numeric_limits<double>::quiet_NaN();
    Mat3 p2 = Mat3::Constant(std::numeric_limits<double>::quiet_NaN());
    double q1 = std::numeric_limits<double>::quiet_NaN();
    Vec3 q2 = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    double offset1 = 0.0;
    double offset2 = 0.0;
    double p1_rate = 0.0;
    Mat3 p2_rate = Mat3::Zero();
    Vec3 q2_rate = Vec3::Zero();
    double outer_excitation = 0.0;
    Mat3 inner_excitation = Mat3::Zero();
    double zeta2 = 0.0;  // spectral norm of the filtered inner regressor
    bool clamped = false;
    bool has_gram = false;
};

class ControllerSession {
public:
    virtual ~ControllerSession() = default;
    virtual ControlStep control(double t, const VehicleState& state, const DesiredFlatOutput& flat) = 0;
    /// psi1/psi2 are the plant regressors, `applied` the wrench that drove the plant.
    virtual AdaptInfo adapt(const Vec3& psi1, const Mat3& psi2, const ControlWrench& applied, double dt) = 0;
    virtual std::size_t held_extractions() const = 0;
};

class RiseSession final : public ControllerSession {
public:
    explicit RiseSession(const ScenarioConfig& cfg)
        : cfg_(cfg),
          refgen_(cfg.dt, cfg.reference.attitude_filter_tau, cfg.reference.thrust_epsilon, cfg.reference.cross_epsilon),
          outer_est_(cfg.estimator.outer, cfg.estimator.outer_gains, cfg.initial_estimate.mass, cfg.estimator.offset_mode),
          inner_est_(cfg.estimator.inner, cfg.estimator.inner_gains, to_vec(cfg.initial_estimate.inertia),
                     cfg.estimator.offset_mode) {}

    ControlStep control(double t, const VehicleState& state, const DesiredFlatOutput& flat) override {
        ControlStep out;
        out.outer = outer_errors(state, flat, cfg_.rise.outer);
        const Vec3 mu1 = mu_outer_.step(out.outer.e2, cfg_.rise.outer, cfg_.dt);
        const Vec3 psi1d = regressor_outer(flat.position[2], cfg_.gravity);
        out.wrench.force = outer_force(psi1d, outer_est_.estimate(), mu1, cfg_.reference.thrust_epsilon);

        out.ref = refgen_.update(t, out.wrench.force, flat);
        out.inner = inner_errors(state, out.ref, cfg_.rise.inner);
        const Vec3 mu2 = mu_inner_.step(out.inner.e2, cfg_.rise.inner, cfg_.dt);
        out.wrench.torque = inner_torque(regressor_inner(out.ref.rates, out.ref.accels), inner_est_.estimate(), mu2);
        if (!out.wrench.finite()) throw DivergenceError("rise: non-finite control");
        return out;
    }

    AdaptInfo adapt(const Vec3& psi1, const Mat3& psi2, const ControlWrench& applied, double dt) override {
        const auto s1 = outer_est_.step(psi1, applied.force, dt);
        const auto s2 = inner_est_.step(psi2, applied.torque, dt);
        const auto& g1 = outer_est_.gram();
        const auto& g2 = inner_est_.gram();

        AdaptInfo info;
        info.has_gram = true;
        info.mass_hat = s1.theta_hat(0);
        info.inertia_hat = s2.theta_hat;
        info.h1 = s1.h(0);
        info.h2 = s2.h;
        info.p1 = s1.p(0, 0);
        info.p2 = s2.p;
        info.q1 = s1.q(0);
        info.q2 = s2.q;
        info.offset1 = g1.offset();
        info.offset2 = g2.offset();
        info.p1_rate = g1.p_rate()(0, 0);
        info.p2_rate = g2.p_rate();
        info.q2_rate = g2.q_rate();
        info.outer_excitation = g1.accumulated()(0, 0);
        info.inner_excitation = g2.accumulated();
        Eigen::JacobiSVD<Mat3> svd(inner_est_.bank().psi_f());
        info.zeta2 = svd.singularValues()(0);
        return info;
    }

    std::size_t held_extractions() const override { return refgen_.held_count(); }

private:
    ScenarioConfig cfg_;
    RiseTerm mu_outer_;
    RiseTerm mu_inner_;
    AttitudeReferenceGenerator refgen_;
    OuterEstimator outer_est_;
    InnerEstimator inner_est_;
};

class AsmcSession final : public ControllerSession {
public:
    explicit AsmcSession(const ScenarioConfig& cfg)
        : cfg_(cfg),
          refgen_(cfg.dt, cfg.asmc.attitude_filter_tau, cfg.reference.thrust_epsilon, cfg.reference.cross_epsilon),
          mass_(cfg.initial_estimate.mass),
          inertia_(to_vec(cfg.initial_estimate.inertia)) {}

    ControlStep control(double t, const VehicleState& state, const DesiredFlatOutput& flat) override {
        ControlStep out;
        const auto o = smc_force(state, flat, mass_, cfg_.asmc.outer, cfg_.gravity, cfg_.reference.thrust_epsilon);
        out.wrench.force = o.command;
        out.outer.e1 = o.e1;
        out.outer.e2 = o.s;
        // attitude reference from the continuous part of the command; the
        // switching part only acts through the applied force
        out.ref = refgen_.update(t, Vec3(o.regressor * mass_), flat);
        const auto i = smc_torque(state, out.ref, inertia_, cfg_.asmc.inner);
        out.wrench.torque = i.command;
        out.inner.e1 = i.e1;
        out.inner.e2 = i.s;
        if (!out.wrench.finite()) throw DivergenceError("asmc: non-finite control");

        psi1d_ = o.regressor;
        psi2d_ = i.regressor;
        s_outer_ = o.s;
        s_inner_ = i.s;
        return out;
    }

    AdaptInfo adapt(const Vec3&, const Mat3&, const ControlWrench&, double dt) override {
        AdaptInfo info;
        info.mass_hat = mass_;
        info.inertia_hat = inertia_;
        const auto& g = cfg_.asmc;
        const auto m = smc_adapt<1>(Eigen::Matrix<double, 1, 1>(mass_), psi1d_, s_outer_, g.outer.k_grad, dt,
                                    Eigen::Matrix<double, 1, 1>(g.mass_min), Eigen::Matrix<double, 1, 1>(g.mass_max));
        const auto j = smc_adapt<3>(inertia_, psi2d_, s_inner_, g.inner.k_grad, dt, to_vec(g.inertia_min),
                                    to_vec(g.inertia_max));
        mass_ = m.theta(0);
        inertia_ = j.theta;
        info.clamped = m.clamped || j.clamped;
        return info;
    }

    std::size_t held_extractions() const override { return refgen_.held_count(); }

private:
    ScenarioConfig cfg_;
    AttitudeReferenceGenerator refgen_;
    double mass_;
    Vec3 inertia_;
    Vec3 psi1d_ = Vec3::Zero();
    Mat3 psi2d_ = Mat3::Zero();
    Vec3 s_outer_ = Vec3::Zero();
    Vec3 s_inner_ = Vec3::Zero();
};

inline std::unique_ptr<ControllerSession> make_session(const ScenarioConfig& cfg) {
    if (cfg.controller == ControllerId::Asmc) return std::make_unique<AsmcSession>(cfg);
    return std::make_unique<RiseSession>(cfg);
}

/// Throws ConfigError for structurally invalid scenarios and gain hard failures.
inline GainReport validate_scenario(const ScenarioConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive", "/dt");
    if (!(cfg.duration >= 0.0) || !std::isfinite(cfg.duration)) throw ConfigError("duration must be >= 0", "/duration");
    if (cfg.duration > 0.0 && cfg.duration < cfg.dt) throw ConfigError("duration must be >= dt", "/duration");
    if (cfg.log_interval < 1) throw ConfigError("log_interval must be >= 1", "/log_interval");
    if (!cfg.vehicle.to_params().valid()) throw ConfigError("mass and inertia must be positive", "/vehicle");
    if (!cfg.initial_estimate.to_params().valid()) {
        throw ConfigError("initial estimates must be positive", "/initial_estimate");
    }
    const auto& e = cfg.estimator;
    for (const auto& [loop, f] : {std::pair{"outer", e.outer}, std::pair{"inner", e.inner}}) {
        const std::string base = std::string("/estimator/") + loop;
        if (!(f.alpha > 0.0)) throw ConfigError("alpha must be positive", base + "/alpha");
        if (!(f.rho > 0.0)) throw ConfigError("rho must be positive", base + "/rho");
        if (!(f.forgetting >= 0.0)) throw ConfigError("forgetting must be >= 0", base + "/forgetting");
    }
    if (!(e.outer_gains.gamma > 0.0)) throw ConfigError("gamma must be positive", "/estimator/outer_gains/gamma");
    if (!(e.outer_gains.gamma1 > 0.0)) throw ConfigError("gamma1 must be positive", "/estimator/outer_gains/gamma1");
    for (int i = 0; i < 3; ++i) {
        if (!(e.inner_gains.gamma_diag[i] > 0.0)) {
            throw ConfigError("Gamma entries must be positive", "/estimator/inner_gains/gamma/" + std::to_string(i));
        }
    }
    if (!(e.inner_gains.sigma1 > 0.0)) throw ConfigError("sigma1 must be positive", "/estimator/inner_gains/sigma1");
    if (!(e.inner_gains.sigma2 > 0.0)) throw ConfigError("sigma2 must be positive", "/estimator/inner_gains/sigma2");
    if (!(cfg.reference.attitude_filter_tau >= 0.0)) {
        throw ConfigError("attitude_filter_tau must be >= 0", "/reference/attitude_filter_tau");
    }
    for (const auto& [name, ch] : {std::pair{"force", cfg.disturbance.force}, std::pair{"torque", cfg.disturbance.torque}}) {
        const std::string base = std::string("/disturbance/") + name;
        if (!(ch.std >= 0.0)) throw ConfigError("std must be >= 0", base + "/std");
        if (!(ch.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive", base + "/bandwidth");
        if (!(ch.clamp >= 0.0)) throw ConfigError("clamp must be >= 0", base + "/clamp");
    }

    const auto& a = cfg.asmc;
    for (const auto& [loop, g] : {std::pair{"outer", a.outer}, std::pair{"inner", a.inner}}) {
        const std::string base = std::string("/asmc/") + loop;
        for (int i = 0; i < 3; ++i) {
            if (!(g.lambda[i] > 0.0)) throw ConfigError("lambda must be positive", base + "/lambda/" + std::to_string(i));
            if (!(g.eta_sw[i] > 0.0)) throw ConfigError("eta_sw must be positive", base + "/eta_sw/" + std::to_string(i));
        }
        if (!(g.k_grad > 0.0)) throw ConfigError("k_grad must be positive", base + "/k_grad");
    }
    if (!(a.mass_min > 0.0 && a.mass_max > a.mass_min && std::isfinite(a.mass_max))) {
        throw ConfigError("mass bounds must satisfy 0 < min < max < inf", "/asmc/mass_bounds");
    }
    for (int i = 0; i < 3; ++i) {
        if (!(a.inertia_min[i] > 0.0 && a.inertia_max[i] > a.inertia_min[i] && std::isfinite(a.inertia_max[i]))) {
            throw ConfigError("inertia bounds must satisfy 0 < min < max < inf", "/asmc/inertia_bounds");
        }
    }
    if (!(a.attitude_filter_tau >= 0.0)) throw ConfigError("attitude_filter_tau must be >= 0", "/asmc/attitude_filter_tau");

    GainReport report = validate_gains(cfg.rise.outer, cfg.rise.inner, cfg.diagnostics.outer_bounds,
                                       cfg.diagnostics.inner_bounds);
    for (const auto& c : report.checks) {
        if (!c.passed && c.severity == CheckSeverity::Hard) {
            const auto dot = c.name.find('.');
            const auto gt = c.name.find('>');
            throw ConfigError("gain must be positive (" + c.detail + ")",
                              "/rise/" + c.name.substr(0, dot) + "/" + c.name.substr(dot + 1, gt - dot - 1));
        }
    }
    return report;
}

/**
 * Fixed-step closed loop. Per step: reference, controller (outer loop,
 * attitude extraction and derivatives, inner loop), disturbance, plant
 * accelerations, estimator update, log, RK4. A divergence stops the run and
 * leaves the partial trace with an error record.
 */
inline SimTrace run_scenario(const ScenarioConfig& cfg) {
    const auto wall_start = std::chrono::steady_clock::now();
    SimTrace trace;
    const GainReport gains = validate_scenario(cfg);
    for (const auto& c : gains.checks) {
        if (!c.passed && c.severity == CheckSeverity::Warning) trace.notices.push_back("gain warning: " + c.name + " (" + c.detail + ")");
    }

    const MassInertia truth = cfg.vehicle.to_params();
    const Vec3 theta2 = truth.inertia;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
    trace.records.reserve(steps / static_cast<std::size_t>(cfg.log_interval) + 1);

    auto session = make_session(cfg);
    DisturbanceGenerator disturbance(cfg.disturbance.force, cfg.disturbance.torque, cfg.disturbance.seed);
    const bool dynamic_noise = cfg.disturbance.mode == DisturbanceMode::Dynamic;
    VehicleState state = cfg.initial_state.to_state();
    double zeta2_max = 0.0;
    const double l2 = cfg.estimator.inner.forgetting;
    const double rho1 = cfg.estimator.outer.rho;
    const double rho2 = cfg.estimator.inner.rho;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        try {
            const DesiredFlatOutput flat = reference_trajectory(t, cfg.trajectory);
            const ControlStep ctrl = session->control(t, state, flat);

            const Disturbance noise = disturbance.current();
            ControlWrench applied = ctrl.wrench;
            if (cfg.thrust_mode == ThrustMode::Projected) {
                const Vec3 z_b = rotation_matrix(state.attitude).col(2);
                applied.force = z_b * ctrl.wrench.force.dot(z_b);
            }
            const Disturbance plant_dist = dynamic_noise ? noise : Disturbance{};
            const StateVector deriv = dynamics_deriv(state, applied, truth, plant_dist, cfg.gravity);
            const Vec3 accel = deriv.segment<3>(3);
            const Vec3 ang_accel = deriv.segment<3>(9);

            Vec3 meas_accel = accel;
            Vec3 meas_ang_accel = ang_accel;
            if (!dynamic_noise) {
                meas_accel += noise.force / truth.mass;
                meas_ang_accel += noise.torque.cwiseQuotient(truth.inertia);
            }
            const Vec3 psi1 = regressor_outer(meas_accel, cfg.gravity);
            const Mat3 psi2 = regressor_inner(state.attitude_rate, meas_ang_accel);
            const AdaptInfo info = session->adapt(psi1, psi2, applied, cfg.dt);

            SimRecord rec;
            if (info.has_gram) {
                const double theta1 = truth.mass;
                // H = P (theta_hat - theta) + offset theta when the regression is exact
                const double tt1 = info.mass_hat - theta1;
                const Vec3 tt2 = info.inertia_hat - theta2;
                rec.id_res1 = std::abs(info.h1 - (info.p1 * tt1 + info.offset1 * theta1)) / (1.0 + std::abs(info.p1));
                rec.id_res2 = (info.h2 - (info.p2 * tt2 + info.offset2 * theta2)).norm() / (1.0 + info.p2.norm());

                trace.stats.min_p1_margin = std::min(trace.stats.min_p1_margin, info.p1 - rho1);
                Eigen::SelfAdjointEigenSolver<Mat3> eig(info.p2, Eigen::EigenvaluesOnly);
                rec.p2_lambda_min = eig.eigenvalues()(0);
                const double p2_spectral = eig.eigenvalues()(2);
                trace.stats.min_p2_margin = std::min(trace.stats.min_p2_margin, rec.p2_lambda_min - rho2);
                zeta2_max = std::max(zeta2_max, info.zeta2);
                const double upper = l2 > 0.0 ? zeta2_max * zeta2_max / l2 + rho2 : INFINITY;
                trace.stats.max_corollary_ratio = std::max(trace.stats.max_corollary_ratio, p2_spectral / upper);
                trace.stats.max_id_res1 = std::max(trace.stats.max_id_res1, rec.id_res1);
                trace.stats.max_id_res2 = std::max(trace.stats.max_id_res2, rec.id_res2);

                const Mat3 p2_inv = info.p2.inverse();
                rec.pinv_h1 = std::abs(info.h1 / info.p1);
                const Vec3 pinv_h2 = p2_inv * info.h2;
                rec.pinv_h2 = pinv_h2.norm();
                rec.v2 = 0.5 * pinv_h2.squaredNorm();
                // Delta_bar = P theta - Q and its perturbation term Phi = -P^-1 P' P^-1 D + P^-1 D'
                const Vec3 delta_bar = info.p2 * theta2 - info.q2;
                const Vec3 delta_bar_rate = info.p2_rate * theta2 - info.q2_rate;
                rec.delta_bar2_norm = delta_bar.norm();
                rec.phi2_norm = (-p2_inv * info.p2_rate * p2_inv * delta_bar + p2_inv * delta_bar_rate).norm();
            } else {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                rec.id_res1 = rec.id_res2 = nan;
                rec.p2_lambda_min = nan;
                rec.pinv_h1 = rec.pinv_h2 = rec.v2 = nan;
                rec.delta_bar2_norm = rec.phi2_norm = nan;
            }
            if (info.clamped) ++trace.stats.clamp_events;

            if (k % static_cast<std::size_t>(cfg.log_interval) == 0) {
                rec.t = t;
                rec.state = state;
                rec.pos_d = flat.position[0];
                rec.vel_d = flat.position[1];
                rec.acc_d = flat.position[2];
                rec.yaw_d = flat.yaw[0];
                rec.att_ref = ctrl.ref;
                rec.outer = ctrl.outer;
                rec.inner = ctrl.inner;
                rec.wrench = ctrl.wrench;
                rec.mass_hat = info.mass_hat;
                rec.inertia_hat = info.inertia_hat;
                rec.h1 = info.h1;
                rec.h2 = info.h2;
                rec.p1 = info.p1;
                rec.p2_norm = info.has_gram ? info.p2.norm() : std::numeric_limits<double>::quiet_NaN();
                rec.dist = noise;
                rec.accel = accel;
                rec.ang_accel = ang_accel;
                rec.v1 = std::numeric_limits<double>::quiet_NaN();  // filled by lyapunov_diagnostic
                rec.clamp_active = info.clamped ? 1.0 : 0.0;
                trace.records.push_back(rec);
                if (info.has_gram) trace.gram_history.push_back({t, info.outer_excitation, info.inner_excitation});
            }

            state = rk4_step(state, applied, truth, plant_dist, cfg.dt, cfg.gravity);
            disturbance.step(cfg.dt);
            ++trace.stats.steps;
            if (!state.within_small_angle_regime()) {
                throw DivergenceError("roll or pitch left (-pi/2, pi/2)");
            }
        } catch (const Error& e) {
            trace.error = "t = " + std::to_string(t) + ": " + e.what();
            break;
        }
    }
    trace.stats.held_extractions = session->held_extractions();
    trace.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return trace;
}

}  // namespace rise
