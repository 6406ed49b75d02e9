#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "rise/errors.hpp"
#include "rise/model.hpp"
#include "rise/types.hpp"

namespace rise {

/// Gains of one cascade loop: error filter gains k1, k2, RISE proportional
/// gain ks and signum gain beta.
struct LoopGains {
    double k1 = 1.0;
    double k2 = 1.0;
    double ks = 1.0;
    double beta = 1.0;

    bool operator==(const LoopGains&) const = default;
};

struct TrackingErrors {
    Vec3 e1 = Vec3::Zero();
    Vec3 e2 = Vec3::Zero();
};

/// e1 = p_d - p, e2 = (v_d - v) + k1 e1 using measured velocity.
inline TrackingErrors outer_errors(const VehicleState& state, const DesiredFlatOutput& flat,
                                   const LoopGains& gains) {
    TrackingErrors e;
    e.e1 = flat.position[0] - state.position;
    e.e2 = (flat.position[1] - state.velocity) + gains.k1 * e.e1;
    return e;
}

/// Attitude counterpart of outer_errors.
inline TrackingErrors inner_errors(const VehicleState& state, const AttitudeRef& ref, const LoopGains& gains) {
    TrackingErrors e;
    e.e1 = ref.angles - state.attitude;
    e.e2 = (ref.rates - state.attitude_rate) + gains.k1 * e.e1;
    return e;
}

/**
 * Robust integral of the sign of the error:
 *
 *   mu(t) = (ks + 1) (e2(t) - e2(0)) + integral_0^t [(ks + 1) k2 e2 + beta sgn(e2)]
 *
 * The integral is advanced with the left-endpoint rule, so mu at the first call
 * is exactly zero and the signum only ever enters through the integral.
 */
class RiseTerm {
public:
    void initialize(const Vec3& e2_initial) {
        if (!e2_initial.allFinite()) throw StateError("RiseTerm: non-finite initial error");
        e2_initial_ = e2_initial;
        integral_.setZero();
        initialized_ = true;
    }

    Vec3 step(const Vec3& e2, const LoopGains& gains, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("RiseTerm::step: dt must be positive");
        if (!initialized_) {
            if (!integral_.isZero(0.0)) throw StateError("RiseTerm: integral accumulated before e2(0) was captured");
            initialize(e2);
        }
        if (!e2_initial_.allFinite()) throw StateError("RiseTerm: corrupted e2(0) snapshot");

        const double kp = gains.ks + 1.0;
        const Vec3 mu = kp * (e2 - e2_initial_) + integral_;
        integral_ += (kp * gains.k2 * e2 + gains.beta * sgn(e2)) * dt;
        return mu;
    }

    void reset() {
        integral_.setZero();
        e2_initial_.setZero();
        initialized_ = false;
    }

    const Vec3& integral() const { return integral_; }
    const Vec3& e2_initial() const { return e2_initial_; }
    bool initialized() const { return initialized_; }

private:
    Vec3 integral_ = Vec3::Zero();
    Vec3 e2_initial_ = Vec3::Zero();
    bool initialized_ = false;
};

inline constexpr double kDefaultThrustEpsilon = 1e-6;
inline constexpr double kDefaultCrossEpsilon = 1e-6;

/// F = psi1d * theta1_hat + mu1. Throws SingularThrustError when |F| <= eps.
inline Vec3 outer_force(const Vec3& psi1d, double theta1_hat, const Vec3& mu1,
                        double thrust_epsilon = kDefaultThrustEpsilon) {
    const Vec3 force = psi1d * theta1_hat + mu1;
    if (!force.allFinite()) throw DivergenceError("outer_force: non-finite force");
    if (force.norm() <= thrust_epsilon) {
        throw SingularThrustError("outer_force: commanded force below singularity guard");
    }
    return force;
}

/// tau = psi2d * theta2_hat + mu2.
inline Vec3 inner_torque(const Mat3& psi2d, const Vec3& theta2_hat, const Vec3& mu2) {
    return psi2d * theta2_hat + mu2;
}

struct ExtractedAttitude {
    Vec3 angles = Vec3::Zero();  // (roll_d, pitch_d, yaw_d)
    Mat3 rotation = Mat3::Identity();
};

/**
 * Desired attitude from the force direction and desired yaw. The body z axis is
 * aligned with F, x_B = (x_C x z_B)/|x_C x z_B| with x_C = [-sin yaw, cos yaw, 0],
 * and roll/pitch are read back from the ZYX parameterization.
 */
inline ExtractedAttitude attitude_extraction(const Vec3& force, double yaw_d,
                                             double thrust_epsilon = kDefaultThrustEpsilon,
                                             double cross_epsilon = kDefaultCrossEpsilon) {
    const double f_norm = force.norm();
    if (!(f_norm > thrust_epsilon)) throw SingularThrustError("attitude_extraction: |F| below guard");

    const Vec3 z_b = force / f_norm;
    const Vec3 x_c(-std::sin(yaw_d), std::cos(yaw_d), 0.0);
    const Vec3 cross = x_c.cross(z_b);
    const double c_norm = cross.norm();
    if (!(c_norm > cross_epsilon)) throw ExtractionError("attitude_extraction: thrust parallel to heading axis");

    const Vec3 x_b = cross / c_norm;
    const Vec3 y_b = z_b.cross(x_b);

    ExtractedAttitude out;
    out.rotation.col(0) = x_b;
    out.rotation.col(1) = y_b;
    out.rotation.col(2) = z_b;
    const Mat3& r = out.rotation;
    out.angles.x() = std::atan2(r(2, 1), r(2, 2));
    out.angles.y() = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
    out.angles.z() = yaw_d;
    return out;
}

/**
 * Causal derivative estimate of a sampled angle signal: three-point backward
 * differences smoothed by a first-order low-pass with time constant `tau`.
 * Derivatives stay at zero until three samples are available.
 */
class AttitudeDerivativeFilter {
public:
    AttitudeDerivativeFilter(double dt, double tau) : dt_(dt), tau_(tau) {
        if (!(dt > 0.0)) throw std::invalid_argument("AttitudeDerivativeFilter: dt must be positive");
        if (!(tau >= 0.0)) throw std::invalid_argument("AttitudeDerivativeFilter: tau must be >= 0");
        blend_ = tau > 0.0 ? -std::expm1(-dt / tau) : 1.0;
    }

    AttitudeRef push(double t, const Vec3& angles) {
        if (count_ > 0) {
            const double spacing = t - last_t_;
            if (std::abs(spacing - dt_) > 1e-9 * std::max(1.0, dt_) + 1e-12) {
                std::ostringstream msg;
                msg << "AttitudeDerivativeFilter: non-uniform sample spacing " << spacing << " (expected " << dt_ << ")";
                throw StateError(msg.str());
            }
        }
        last_t_ = t;
        history_[2] = history_[1];
        history_[1] = history_[0];
        history_[0] = angles;
        if (count_ < 3) ++count_;

        if (count_ >= 3) {
            const Vec3 raw_rate = (3.0 * history_[0] - 4.0 * history_[1] + history_[2]) / (2.0 * dt_);
            const Vec3 raw_accel = (history_[0] - 2.0 * history_[1] + history_[2]) / (dt_ * dt_);
            rate_ += blend_ * (raw_rate - rate_);
            accel_ += blend_ * (raw_accel - accel_);
        }
        return {angles, rate_, accel_};
    }

    void reset() {
        count_ = 0;
        rate_.setZero();
        accel_.setZero();
    }

    double dt() const { return dt_; }
    double tau() const { return tau_; }

private:
    double dt_;
    double tau_;
    double blend_ = 1.0;
    double last_t_ = 0.0;
    std::size_t count_ = 0;
    std::array<Vec3, 3> history_{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    Vec3 rate_ = Vec3::Zero();
    Vec3 accel_ = Vec3::Zero();
};

/**
 * Turns the commanded force into an attitude reference for the inner loop.
 * Roll/pitch derivatives come from AttitudeDerivativeFilter; the yaw channel
 * uses the analytic derivatives of the flat output. A degenerate extraction
 * holds the previous angles.
 */
class AttitudeReferenceGenerator {
public:
    AttitudeReferenceGenerator(double dt, double filter_tau, double thrust_epsilon = kDefaultThrustEpsilon,
                               double cross_epsilon = kDefaultCrossEpsilon)
        : filter_(dt, filter_tau), thrust_epsilon_(thrust_epsilon), cross_epsilon_(cross_epsilon) {}

    AttitudeRef update(double t, const Vec3& force, const DesiredFlatOutput& flat) {
        Vec3 angles = last_angles_;
        try {
            angles = attitude_extraction(force, flat.yaw[0], thrust_epsilon_, cross_epsilon_).angles;
        } catch (const ExtractionError&) {
            ++held_;
            angles.z() = flat.yaw[0];
        }
        last_angles_ = angles;
        AttitudeRef ref = filter_.push(t, angles);
        ref.rates.z() = flat.yaw[1];
        ref.accels.z() = flat.yaw[2];
        return ref;
    }

    /// Number of steps on which the previous reference was held.
    std::size_t held_count() const { return held_; }

private:
    AttitudeDerivativeFilter filter_;
    double thrust_epsilon_;
    double cross_epsilon_;
    Vec3 last_angles_ = Vec3::Zero();
    std::size_t held_ = 0;
};

// ---------------------------------------------------------------------------
// Gain validation

enum class CheckSeverity { Hard, Warning, Info };

struct GainCheck {
    std::string name;
    bool passed = true;
    CheckSeverity severity = CheckSeverity::Warning;
    std::string detail;
};

struct GainReport {
    std::vector<GainCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed && c.severity != CheckSeverity::Info) return false;
        return true;
    }

    bool hard_failure() const {
        for (const auto& c : checks)
            if (!c.passed && c.severity == CheckSeverity::Hard) return true;
        return false;
    }

    const GainCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Disturbance bound xi and derivative bound xi_dot for one loop.
struct DisturbanceBounds {
    double xi = 0.0;
    double xi_dot = 0.0;

    bool operator==(const DisturbanceBounds&) const = default;
};

/**
 * Checks the sufficient conditions of the stability analysis. Non-positive
 * gains are hard failures; the signum-gain inequality and k > 1/2 are warnings;
 * ks has no closed-form threshold and is reported as information only.
 */
inline GainReport validate_gains(const LoopGains& outer, const LoopGains& inner, const DisturbanceBounds& outer_bounds,
                                 const DisturbanceBounds& inner_bounds) {
    GainReport report;
    auto fmt = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };

    auto loop_checks = [&](const char* loop, const LoopGains& g, const DisturbanceBounds& b) {
        const std::string prefix = loop;
        const std::array<std::pair<const char*, double>, 4> all = {
            {{"k1", g.k1}, {"k2", g.k2}, {"ks", g.ks}, {"beta", g.beta}}};
        for (const auto& [name, value] : all) {
            report.checks.push_back({prefix + "." + name + ">0", std::isfinite(value) && value > 0.0, CheckSeverity::Hard,
                                     std::string(name) + " = " + fmt(value)});
        }
        report.checks.push_back({prefix + ".k1>1/2", g.k1 > 0.5, CheckSeverity::Warning, "k1 = " + fmt(g.k1)});
        report.checks.push_back({prefix + ".k2>1/2", g.k2 > 0.5, CheckSeverity::Warning, "k2 = " + fmt(g.k2)});
        const double threshold = g.k2 > 0.0 ? b.xi + b.xi_dot / g.k2 : INFINITY;
        report.checks.push_back({prefix + ".beta>xi+xi_dot/k2", g.beta > threshold, CheckSeverity::Warning,
                                 "beta = " + fmt(g.beta) + ", threshold = " + fmt(threshold)});
        report.checks.push_back({prefix + ".ks_sufficiently_large", true, CheckSeverity::Info,
                                 "ks = " + fmt(g.ks) + " (no closed-form threshold)"});
    };
    loop_checks("outer", outer, outer_bounds);
    loop_checks("inner", inner, inner_bounds);
    return report;
}

}  // namespace rise
