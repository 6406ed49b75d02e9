#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "rise/errors.hpp"
#include "rise/types.hpp"

namespace rise {

/// offset + amplitude * sin(frequency * t + phase)
struct SinusoidAxis {
    double amplitude = 0.0;
    double frequency = 0.0;  // rad/s
    double phase = 0.0;      // rad
    double offset = 0.0;

    /// Closed-form derivative of the given order (0..4 or higher).
    double derivative(int order, double t) const {
        const double arg = frequency * t + phase;
        const double scale = amplitude * std::pow(frequency, order);
        double value = 0.0;
        switch (order % 4) {
            case 0: value = scale * std::sin(arg); break;
            case 1: value = scale * std::cos(arg); break;
            case 2: value = -scale * std::sin(arg); break;
            default: value = -scale * std::cos(arg); break;
        }
        return order == 0 ? value + offset : value;
    }

    bool operator==(const SinusoidAxis&) const = default;
};

enum class TrajectoryFamily { Sinusoid, Constant };

inline TrajectoryFamily parse_trajectory_family(std::string_view name) {
    if (name == "sinusoid") return TrajectoryFamily::Sinusoid;
    if (name == "constant") return TrajectoryFamily::Constant;
    throw ConfigError("unknown trajectory family '" + std::string(name) + "'", "/trajectory/family");
}

inline const char* to_string(TrajectoryFamily family) {
    return family == TrajectoryFamily::Sinusoid ? "sinusoid" : "constant";
}

struct TrajectoryConfig {
    TrajectoryFamily family = TrajectoryFamily::Sinusoid;
    // sinusoid family
    std::array<SinusoidAxis, 3> position{};
    SinusoidAxis yaw{};
    // constant family
    std::array<double, 3> setpoint{};
    double yaw_setpoint = 0.0;

    bool operator==(const TrajectoryConfig&) const = default;

    /// 2 sin(t) on every axis, yaw sin(1.1 t).
    static TrajectoryConfig paper() {
        TrajectoryConfig cfg;
        cfg.family = TrajectoryFamily::Sinusoid;
        for (auto& axis : cfg.position) axis = {2.0, 1.0, 0.0, 0.0};
        cfg.yaw = {1.0, 1.1, 0.0, 0.0};
        return cfg;
    }
};

/// Desired position/yaw and derivatives up to order 4, analytic.
inline DesiredFlatOutput reference_trajectory(double t, const TrajectoryConfig& cfg) {
    if (!(t >= 0.0)) throw std::invalid_argument("reference_trajectory: t must be >= 0");
    DesiredFlatOutput out;
    switch (cfg.family) {
        case TrajectoryFamily::Sinusoid:
            for (int order = 0; order < 5; ++order) {
                for (int axis = 0; axis < 3; ++axis) {
                    out.position[order][axis] = cfg.position[axis].derivative(order, t);
                }
                out.yaw[order] = cfg.yaw.derivative(order, t);
            }
            break;
        case TrajectoryFamily::Constant:
            out.position[0] = Vec3(cfg.setpoint[0], cfg.setpoint[1], cfg.setpoint[2]);
            out.yaw[0] = cfg.yaw_setpoint;
            break;
    }
    return out;
}

}  // namespace rise
