#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "rise/asmc.hpp"
#include "rise/disturbance.hpp"
#include "rise/errors.hpp"
#include "rise/estimator.hpp"
#include "rise/rise_controller.hpp"
#include "rise/trajectory.hpp"

namespace rise {

enum class ControllerId { Rise, Asmc };
enum class DisturbanceMode { Dynamic, Measurement };
enum class ThrustMode { Ideal, Projected };

using Triple = std::array<double, 3>;

inline Vec3 to_vec(const Triple& a) { return {a[0], a[1], a[2]}; }

struct ParamsConfig {
    double mass = 3.12;
    Triple inertia{0.1, 0.1, 0.2};

    bool operator==(const ParamsConfig&) const = default;
    MassInertia to_params() const { return {mass, to_vec(inertia)}; }
};

struct InitialStateConfig {
    Triple position{};
    Triple velocity{};
    Triple attitude{};
    Triple attitude_rate{};

    bool operator==(const InitialStateConfig&) const = default;
    VehicleState to_state() const {
        return {to_vec(position), to_vec(velocity), to_vec(attitude), to_vec(attitude_rate)};
    }
};

struct DisturbanceConfig {
    DisturbanceMode mode = DisturbanceMode::Dynamic;
    OuChannel force{0.0, 20.0, 0.0};
    OuChannel torque{0.0, 20.0, 0.0};
    std::uint64_t seed = 1;

    bool operator==(const DisturbanceConfig&) const = default;
};

/// Attitude-reference generation shared by both controllers.
struct ReferenceConfig {
    double attitude_filter_tau = 5e-4;  // s
    double thrust_epsilon = kDefaultThrustEpsilon;
    double cross_epsilon = kDefaultCrossEpsilon;

    bool operator==(const ReferenceConfig&) const = default;
};

struct RiseConfig {
    LoopGains outer{1.0, 1.0, 5.4, 1.0};
    LoopGains inner{2.0, 1.0, 4.5, 1.0};

    bool operator==(const RiseConfig&) const = default;
};

struct EstimatorConfig {
    LoopFilterConfig outer{3.0, 0.5, 1.0};
    LoopFilterConfig inner{5.0, 0.5, 1.0};
    OuterLearningGains outer_gains{0.3, 0.17};
    InnerLearningGains inner_gains{};
    OffsetMode offset_mode = OffsetMode::Constant;

    bool operator==(const EstimatorConfig&) const = default;
};

struct DiagnosticsConfig {
    bool enabled = true;
    DisturbanceBounds outer_bounds{};
    DisturbanceBounds inner_bounds{};
    double xi_delta_outer = 0.0;
    double xi_delta_inner = 0.0;
    double lambda_i = 0.25;         // positive constant below rho2 in C_i
    double monotonic_window = 0.5;  // s
    double transient = 5.0;         // s ignored by monotonicity checks
    double trailing_window = 10.0;  // s, RMSE window
    double settling_band = 0.02;    // relative

    bool operator==(const DiagnosticsConfig&) const = default;
};

struct ScenarioConfig {
    std::string label = "rise";
    ControllerId controller = ControllerId::Rise;
    double duration = 30.0;
    double dt = 1e-3;
    int log_interval = 1;
    double gravity = kDefaultGravity;
    ParamsConfig vehicle{};
    InitialStateConfig initial_state{};
    ParamsConfig initial_estimate{1.56, {0.2, 0.2, 0.3}};
    TrajectoryConfig trajectory = TrajectoryConfig::paper();
    DisturbanceConfig disturbance{};
    ThrustMode thrust_mode = ThrustMode::Ideal;
    ReferenceConfig reference{};
    RiseConfig rise{};
    EstimatorConfig estimator{};
    SmcGains asmc = default_smc_gains();
    DiagnosticsConfig diagnostics{};

    bool operator==(const ScenarioConfig&) const = default;

    /// Baseline gains, tuned once on the reference scenario (see README).
    static SmcGains default_smc_gains() {
        SmcGains g;
        g.outer.lambda = {1.0, 1.0, 1.0};
        g.outer.eta_sw = {3.0, 3.0, 3.0};  // above the 2 N disturbance clamp at the default noise
        g.outer.k_grad = 0.1;
        g.inner.lambda = {5.0, 5.0, 5.0};
        g.inner.eta_sw = {1.0, 1.0, 1.0};
        g.inner.k_grad = 0.01;
        g.mass_min = 1.0;
        g.mass_max = 6.0;
        g.inertia_min = {0.02, 0.02, 0.02};
        g.inertia_max = {0.5, 0.5, 0.5};
        g.attitude_filter_tau = 0.005;
        return g;
    }

    /// Reference scenario: paper vehicle, gains and trajectory, vehicle at rest at the origin.
    static ScenarioConfig paper(ControllerId id = ControllerId::Rise) {
        ScenarioConfig cfg;
        cfg.controller = id;
        cfg.label = id == ControllerId::Rise ? "rise" : "asmc";
        return cfg;
    }
};

/// Default noise level of the comparison runs (force std in N).
inline constexpr double kDefaultNoiseStd = 0.5;
/// Torque std as a fraction of the force std when a single noise level is given.
inline constexpr double kTorqueNoiseRatio = 0.05;

/// Sets a matched OU disturbance level on both channels; clamp at 4 std.
inline void set_noise(ScenarioConfig& cfg, double force_std, std::uint64_t seed) {
    cfg.disturbance.force.std = force_std;
    cfg.disturbance.force.clamp = 4.0 * force_std;
    cfg.disturbance.torque.std = kTorqueNoiseRatio * force_std;
    cfg.disturbance.torque.clamp = 4.0 * kTorqueNoiseRatio * force_std;
    cfg.disturbance.seed = seed;
}

}  // namespace rise
