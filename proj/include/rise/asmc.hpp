#pragma once

#include <algorithm>
#include <array>

#include "rise/model.hpp"
#include "rise/rise_controller.hpp"
#include "rise/types.hpp"

// Adaptive sliding-mode baseline with gradient parameter adaptation. This is a
// reconstruction meant for qualitative comparison (switching chatter, gradient
// noise sensitivity, estimate clamping), not a replica of any specific design.

namespace rise {

struct SmcLoopGains {
    std::array<double, 3> lambda{1.0, 1.0, 1.0};  // sliding-surface slope per axis
    std::array<double, 3> eta_sw{1.0, 1.0, 1.0};  // switching gain per axis
    double k_grad = 1.0;                          // gradient adaptation gain

    bool operator==(const SmcLoopGains&) const = default;

    Vec3 lambda_vec() const { return {lambda[0], lambda[1], lambda[2]}; }
    Vec3 eta_vec() const { return {eta_sw[0], eta_sw[1], eta_sw[2]}; }
};

struct SmcGains {
    SmcLoopGains outer;
    SmcLoopGains inner;
    // estimate clamps
    double mass_min = 0.5;
    double mass_max = 6.0;
    std::array<double, 3> inertia_min{0.01, 0.01, 0.01};
    std::array<double, 3> inertia_max{1.0, 1.0, 1.0};
    double attitude_filter_tau = 0.005;  // derivative filter of the baseline's attitude reference, s

    bool operator==(const SmcGains&) const = default;
};

/// s = e1' + lambda e1 per axis.
inline Vec3 sliding_variable(const Vec3& e1, const Vec3& e1_dot, const Vec3& lambda) {
    return e1_dot + lambda.cwiseProduct(e1);
}

template <int N>
struct SmcLoopOutput {
    Vec3 command = Vec3::Zero();
    Vec3 e1 = Vec3::Zero();
    Vec3 s = Vec3::Zero();
    Eigen::Matrix<double, 3, N> regressor = Eigen::Matrix<double, 3, N>::Zero();  // feedforward regressor used
};

// Both loops use the usual sliding-mode equivalent control: the model
// feedforward is evaluated at the reference acceleration a_d + lambda e1'
// rather than a_d alone, so that s' is driven only by the switching term and
// the parameter error.

/// F = psi1(a_d + lambda e1') m_hat + eta sgn(s) for the position loop.
inline SmcLoopOutput<1> smc_force(const VehicleState& state, const DesiredFlatOutput& flat, double mass_hat,
                                  const SmcLoopGains& gains, double gravity = kDefaultGravity,
                                  double thrust_epsilon = kDefaultThrustEpsilon) {
    SmcLoopOutput<1> out;
    const Vec3 e1_dot = flat.position[1] - state.velocity;
    out.e1 = flat.position[0] - state.position;
    out.s = sliding_variable(out.e1, e1_dot, gains.lambda_vec());
    out.regressor = regressor_outer(flat.position[2] + gains.lambda_vec().cwiseProduct(e1_dot), gravity);
    out.command = outer_force(out.regressor, mass_hat, gains.eta_vec().cwiseProduct(sgn(out.s)), thrust_epsilon);
    return out;
}

/// tau = psi2(rates_d, accels_d + lambda e1') theta2_hat + eta sgn(s) for the attitude loop.
inline SmcLoopOutput<3> smc_torque(const VehicleState& state, const AttitudeRef& ref, const Vec3& inertia_hat,
                                   const SmcLoopGains& gains) {
    SmcLoopOutput<3> out;
    const Vec3 e1_dot = ref.rates - state.attitude_rate;
    out.e1 = ref.angles - state.attitude;
    out.s = sliding_variable(out.e1, e1_dot, gains.lambda_vec());
    out.regressor = regressor_inner(ref.rates, ref.accels + gains.lambda_vec().cwiseProduct(e1_dot));
    out.command = inner_torque(out.regressor, inertia_hat, gains.eta_vec().cwiseProduct(sgn(out.s)));
    return out;
}

struct SmcControl {
    ControlWrench wrench;
    Vec3 s_outer = Vec3::Zero();
    Vec3 s_inner = Vec3::Zero();
};

/// Both loops for a given attitude reference.
inline SmcControl smc_control(const VehicleState& state, const DesiredFlatOutput& flat, const AttitudeRef& ref,
                              const MassInertia& estimate, const SmcGains& gains, double gravity = kDefaultGravity) {
    const auto outer = smc_force(state, flat, estimate.mass, gains.outer, gravity);
    const auto inner = smc_torque(state, ref, estimate.inertia, gains.inner);
    return {{outer.command, inner.command}, outer.s, inner.s};
}

template <int N>
struct SmcAdaptResult {
    Eigen::Matrix<double, N, 1> theta;
    bool clamped = false;
};

/// theta <- clamp(theta + k psi_d^T s dt, lo, hi); `clamped` reports an active bound.
template <int N>
SmcAdaptResult<N> smc_adapt(const Eigen::Matrix<double, N, 1>& theta, const Eigen::Matrix<double, 3, N>& psi_d,
                            const Vec3& s, double k_grad, double dt, const Eigen::Matrix<double, N, 1>& lo,
                            const Eigen::Matrix<double, N, 1>& hi) {
    if (!(dt > 0.0)) throw std::invalid_argument("smc_adapt: dt must be positive");
    const Eigen::Matrix<double, N, 1> raw = theta + k_grad * psi_d.transpose() * s * dt;
    SmcAdaptResult<N> result;
    result.theta = raw.cwiseMax(lo).cwiseMin(hi);
    result.clamped = (raw.array() <= lo.array()).any() || (raw.array() >= hi.array()).any();
    return result;
}

}  // namespace rise
