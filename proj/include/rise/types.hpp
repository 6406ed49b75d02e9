#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace rise {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using StateVector = Eigen::Matrix<double, 12, 1>;

inline constexpr double kDefaultGravity = 9.81;

/// Integrated vehicle state: inertial position/velocity and Euler angles/rates
/// (roll, pitch, yaw).
struct VehicleState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 attitude = Vec3::Zero();
    Vec3 attitude_rate = Vec3::Zero();

    StateVector to_vector() const {
        StateVector x;
        x << position, velocity, attitude, attitude_rate;
        return x;
    }

    static VehicleState from_vector(const StateVector& x) {
        return {x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), x.segment<3>(9)};
    }

    bool finite() const { return to_vector().allFinite(); }

    /// Roll and pitch strictly inside (-pi/2, pi/2), the regime of the Euler-rate model.
    bool within_small_angle_regime() const {
        constexpr double half_pi = std::numbers::pi / 2.0;
        return std::abs(attitude.x()) < half_pi && std::abs(attitude.y()) < half_pi;
    }
};

/// Mass and diagonal inertia. `mass` is the outer-loop parameter, `inertia` the
/// inner-loop parameter vector (Ix, Iy, Iz).
struct MassInertia {
    double mass = 1.0;
    Vec3 inertia = Vec3::Ones();

    bool valid() const {
        return std::isfinite(mass) && mass > 0.0 && inertia.allFinite() && (inertia.array() > 0.0).all();
    }

    Mat3 inertia_matrix() const { return inertia.asDiagonal(); }
};

/// Inertial-frame force and body torque.
struct ControlWrench {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();

    bool finite() const { return force.allFinite() && torque.allFinite(); }
};

/// Additive translational (N) and rotational (N m) disturbances.
struct Disturbance {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
};

/// Desired position and yaw with derivatives 0..4 (index = derivative order).
struct DesiredFlatOutput {
    std::array<Vec3, 5> position{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<double, 5> yaw{};
};

/// Desired Euler angles and their first two derivatives.
struct AttitudeRef {
    Vec3 angles = Vec3::Zero();
    Vec3 rates = Vec3::Zero();
    Vec3 accels = Vec3::Zero();
};

/// Signum with sgn(0) = 0.
inline double sgn(double x) noexcept {
    return static_cast<double>((0.0 < x) - (x < 0.0));
}

inline Vec3 sgn(const Vec3& v) noexcept {
    return {sgn(v.x()), sgn(v.y()), sgn(v.z())};
}

}  // namespace rise
