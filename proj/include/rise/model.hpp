#pragma once

#include <cmath>

#include "rise/errors.hpp"
#include "rise/types.hpp"

namespace rise {

/// Skew-symmetric matrix with skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

/// Body-to-inertial rotation for Euler angles (roll, pitch, yaw), ZYX order.
inline Mat3 rotation_matrix(const Vec3& euler) {
    const double sf = std::sin(euler.x()), cf = std::cos(euler.x());
    const double st = std::sin(euler.y()), ct = std::cos(euler.y());
    const double sp = std::sin(euler.z()), cp = std::cos(euler.z());
    Mat3 r;
    r << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
         sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
         -st,     ct * sf,                ct * cf;
    return r;
}

/**
 * Time derivative of the 12-dimensional state under the simplified Newton-Euler
 * model: translational acceleration (F - [0 0 mg] - d1) / m and Euler-angle
 * acceleration J^-1 (tau - w x Jw - d2), with w the Euler rates.
 *
 * Throws DivergenceError on non-finite input and std::invalid_argument on
 * invalid parameters.
 */
inline StateVector dynamics_deriv(const VehicleState& state, const ControlWrench& wrench,
                                  const MassInertia& params, const Disturbance& dist,
                                  double gravity = kDefaultGravity) {
    if (!params.valid()) {
        throw std::invalid_argument("dynamics_deriv: mass and inertia must be positive and finite");
    }
    if (!state.finite() || !wrench.finite() || !dist.force.allFinite() || !dist.torque.allFinite() ||
        !std::isfinite(gravity)) {
        throw DivergenceError("dynamics_deriv: non-finite input");
    }

    const Vec3& rate = state.attitude_rate;
    const Vec3 j_rate = params.inertia.cwiseProduct(rate);

    const Vec3 accel = (wrench.force - Vec3(0.0, 0.0, params.mass * gravity) - dist.force) / params.mass;
    const Vec3 ang_accel = (wrench.torque - rate.cross(j_rate) - dist.torque).cwiseQuotient(params.inertia);

    StateVector dx;
    dx << state.velocity, accel, rate, ang_accel;
    return dx;
}

/// Outer regressor: psi1 * m == m * accel + [0 0 m g].
inline Vec3 regressor_outer(const Vec3& accel, double gravity = kDefaultGravity) {
    return accel + Vec3(0.0, 0.0, gravity);
}

/**
 * Inner regressor: psi2 * (Ix, Iy, Iz) == J * accel + rate x (J * rate).
 */
inline Mat3 regressor_inner(const Vec3& rate, const Vec3& accel) {
    const double p = rate.x(), q = rate.y(), r = rate.z();
    Mat3 psi;
    psi << accel.x(), -q * r,     q * r,
           p * r,     accel.y(), -p * r,
           -p * q,    p * q,      accel.z();
    return psi;
}

struct DesiredRegressors {
    Vec3 outer;
    Mat3 inner;
};

/// Regressors evaluated on desired signals (feedforward terms of both loops).
inline DesiredRegressors regressor_desired(const DesiredFlatOutput& flat, const AttitudeRef& attitude,
                                           double gravity = kDefaultGravity) {
    return {regressor_outer(flat.position[2], gravity), regressor_inner(attitude.rates, attitude.accels)};
}

}  // namespace rise
