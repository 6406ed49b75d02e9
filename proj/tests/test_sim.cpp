#include <cmath>

#include <gtest/gtest.h>

#include "rise/sim.hpp"

using namespace rise;

namespace {

ScenarioConfig short_run(double duration, ControllerId id = ControllerId::Rise) {
    ScenarioConfig cfg = ScenarioConfig::paper(id);
    cfg.duration = duration;
    return cfg;
}

}  // namespace

TEST(Rk4, FreeFallIsExact) {
    const MassInertia p{3.12, Vec3(0.1, 0.1, 0.2)};
    const double dt = 1e-3;
    const VehicleState next = rk4_step(VehicleState{}, ControlWrench{}, p, Disturbance{}, dt);
    EXPECT_DOUBLE_EQ(next.position.z(), -0.5 * kDefaultGravity * dt * dt);
    EXPECT_DOUBLE_EQ(next.velocity.z(), -kDefaultGravity * dt);
}

TEST(Rk4, HoverUnchanged) {
    const MassInertia p{3.12, Vec3(0.1, 0.1, 0.2)};
    VehicleState s;
    s.position = Vec3(1, -1, 2);
    const ControlWrench w{Vec3(0, 0, p.mass * kDefaultGravity), Vec3::Zero()};
    for (int k = 0; k < 1000; ++k) s = rk4_step(s, w, p, Disturbance{}, 1e-3);
    EXPECT_EQ(s.position, Vec3(1, -1, 2));
    EXPECT_EQ(s.velocity, Vec3::Zero());
}

// Torque-free spin: the error against a fine reference drops by ~2^4 per halving.
TEST(Rk4, FourthOrderConvergence) {
    const MassInertia p{1.0, Vec3(0.1, 0.15, 0.2)};
    VehicleState s0;
    s0.attitude_rate = Vec3(2.0, -1.0, 3.0);
    auto integrate = [&](double dt) {
        VehicleState s = s0;
        const int n = static_cast<int>(std::llround(1.0 / dt));
        for (int k = 0; k < n; ++k) s = rk4_step(s, ControlWrench{Vec3(0, 0, 9.81), Vec3::Zero()}, p, Disturbance{}, dt);
        return s.to_vector();
    };
    const StateVector fine = integrate(1e-4);
    const double e1 = (integrate(0.02) - fine).norm();
    const double e2 = (integrate(0.01) - fine).norm();
    EXPECT_GE(std::log2(e1 / e2), 3.9);
}

TEST(Rk4, GenericScalarOde) {
    // x' = x: one step equals the degree-4 Taylor polynomial of e^dt
    Eigen::Matrix<double, 1, 1> x(1.0);
    const double h = 0.1;
    const auto y = rk4_step(x, [](const Eigen::Matrix<double, 1, 1>& v) { return Eigen::Matrix<double, 1, 1>(v); }, h);
    EXPECT_NEAR(y(0), 1 + h + h * h / 2 + h * h * h / 6 + h * h * h * h / 24, 1e-15);
}

TEST(Sim, ZeroDurationGivesEmptyTrace) {
    const SimTrace trace = run_scenario(short_run(0.0));
    EXPECT_TRUE(trace.records.empty());
    EXPECT_FALSE(trace.diverged());
    EXPECT_EQ(trace.stats.steps, 0u);
}

TEST(Sim, StepCountAndLogInterval) {
    ScenarioConfig cfg = short_run(0.5);
    cfg.log_interval = 10;
    const SimTrace trace = run_scenario(cfg);
    EXPECT_EQ(trace.stats.steps, 500u);
    ASSERT_EQ(trace.records.size(), 50u);
    EXPECT_NEAR(trace.records[1].t, 0.01, 1e-15);
}

TEST(Sim, Deterministic) {
    ScenarioConfig cfg = short_run(2.0);
    set_noise(cfg, 0.5, 11);
    const SimTrace a = run_scenario(cfg), b = run_scenario(cfg);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        ASSERT_EQ(a.records[i].state.to_vector(), b.records[i].state.to_vector());
        ASSERT_EQ(a.records[i].mass_hat, b.records[i].mass_hat);
    }
}

TEST(Sim, EstimatorInvariantsHoldEveryStep) {
    ScenarioConfig cfg = short_run(5.0);
    set_noise(cfg, 0.5, 2);
    const SimTrace trace = run_scenario(cfg);
    ASSERT_FALSE(trace.diverged()) << *trace.error;
    EXPECT_GE(trace.stats.min_p1_margin, -1e-12);
    EXPECT_GE(trace.stats.min_p2_margin, -1e-12);
    EXPECT_LE(trace.stats.max_corollary_ratio, 1.0);
}

// Starting at the true parameters with no disturbance, H = rho theta, so the
// mass estimate can only drift downward, toward theta - rho theta / P.
TEST(Sim, ExactEstimateStaysWithinBiasBand) {
    ScenarioConfig cfg = short_run(10.0);
    cfg.initial_estimate = cfg.vehicle;
    const SimTrace trace = run_scenario(cfg);
    ASSERT_FALSE(trace.diverged()) << *trace.error;
    EXPECT_LE(trace.stats.max_id_res1, 1e-9);
    EXPECT_LE(trace.stats.max_id_res2, 1e-9);
    const double theta = cfg.vehicle.mass, rho = cfg.estimator.outer.rho;
    for (const auto& r : trace.records) ASSERT_LE(r.mass_hat, theta + 1e-12);
    const auto& last = trace.records.back();
    const double bias = zero_disturbance_bias(rho, theta, last.p1);
    EXPECT_NEAR(theta - last.mass_hat, bias, 0.1 * bias);
}

TEST(Sim, DivergenceLeavesPartialTrace) {
    ScenarioConfig cfg = short_run(5.0);
    cfg.vehicle.mass = 0.3;  // commanded hover force launches the vehicle, large gains wreck attitude
    cfg.rise.inner = {50.0, 50.0, 500.0, 50.0};
    cfg.initial_estimate.inertia = {5.0, 5.0, 5.0};
    const SimTrace trace = run_scenario(cfg);
    ASSERT_TRUE(trace.diverged());
    EXPECT_FALSE(trace.records.empty());
    EXPECT_LT(trace.records.size(), 5000u);
    EXPECT_EQ(trace.error->rfind("t = ", 0), 0u);
}

TEST(Sim, InvalidConfigThrowsWithPath) {
    ScenarioConfig cfg = short_run(1.0);
    cfg.rise.outer.k1 = -1.0;
    try {
        run_scenario(cfg);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "/rise/outer/k1");
    }
    cfg = short_run(1.0);
    cfg.dt = 0.0;
    EXPECT_THROW(run_scenario(cfg), ConfigError);
}

TEST(Sim, ProjectedThrustAndMeasurementNoise) {
    ScenarioConfig cfg = short_run(3.0);
    cfg.thrust_mode = ThrustMode::Projected;
    const SimTrace projected = run_scenario(cfg);
    ASSERT_FALSE(projected.diverged()) << *projected.error;

    cfg = short_run(3.0);
    set_noise(cfg, 0.5, 3);
    cfg.disturbance.mode = DisturbanceMode::Measurement;
    const SimTrace measured = run_scenario(cfg);
    ASSERT_FALSE(measured.diverged()) << *measured.error;
    // plant acceleration is noise free: psi1 m = F exactly
    for (const auto& r : measured.records) {
        ASSERT_LE((regressor_outer(r.accel) * cfg.vehicle.mass - r.wrench.force).norm(), 1e-9);
    }
}

TEST(Sim, AsmcRuns) {
    ScenarioConfig cfg = short_run(5.0, ControllerId::Asmc);
    set_noise(cfg, 0.5, 1);
    const SimTrace trace = run_scenario(cfg);
    ASSERT_FALSE(trace.diverged()) << *trace.error;
    EXPECT_TRUE(std::isnan(trace.records.back().h1));
    EXPECT_LT(trace.records.back().outer.e1.norm(), 0.5);
}
