#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rise/metrics.hpp"

using namespace rise;

namespace {

std::vector<double> grid(double t_end, double dt) {
    std::vector<double> t;
    for (int k = 0; k * dt <= t_end + 1e-12; ++k) t.push_back(k * dt);
    return t;
}

}  // namespace

TEST(Settling, FirstOrderResponse) {
    // 1 - e^{-t/2} enters the 2% band at 2 ln 50
    const auto t = grid(20.0, 1e-3);
    std::vector<double> v;
    for (double x : t) v.push_back(1.0 - std::exp(-x / 2.0));
    const auto ts = settling_time(t, v, 1.0, 0.02);
    ASSERT_TRUE(ts.has_value());
    EXPECT_NEAR(*ts, 2.0 * std::log(50.0), 1e-3);
}

TEST(Settling, EdgeCases) {
    const auto t = grid(1.0, 0.1);
    const std::vector<double> inside(t.size(), 1.0);
    EXPECT_EQ(settling_time(t, inside, 1.0).value(), 0.0);
    std::vector<double> outside_at_end = inside;
    outside_at_end.back() = 2.0;
    EXPECT_FALSE(settling_time(t, outside_at_end, 1.0).has_value());
    EXPECT_FALSE(settling_time(std::vector<double>{}, std::vector<double>{}, 1.0).has_value());
    EXPECT_THROW(settling_time(t, std::vector<double>{1.0}, 1.0), std::invalid_argument);
}

TEST(Overshoot, FromBelowAndAbove) {
    EXPECT_NEAR(overshoot_percent(std::vector<double>{0.0, 0.5, 1.2, 0.9, 1.05}, 1.0), 20.0, 1e-12);
    EXPECT_NEAR(overshoot_percent(std::vector<double>{0.3, 0.25, 0.15, 0.2}, 0.2), 25.0, 1e-12);
    EXPECT_EQ(overshoot_percent(std::vector<double>{0.0, 0.5, 0.9}, 1.0), 0.0);
    EXPECT_EQ(overshoot_percent(std::vector<double>(5, 1.0), 1.0), 0.0);
}

TEST(Chattering, ConstantIsZero) {
    const auto t = grid(2.0, 0.01);
    EXPECT_EQ(chattering_index(t, std::vector<double>(t.size(), 3.0)), 0.0);
}

TEST(Chattering, SquareWave) {
    // amplitude a, period T: total variation 4a per period
    const double a = 1.5, period = 0.1, dt = 1e-3;
    const auto t = grid(10.0, dt);
    std::vector<double> v;
    for (std::size_t i = 0; i < t.size(); ++i) v.push_back(((i / 50) % 2 == 0) ? a : -a);
    EXPECT_NEAR(chattering_index(t, v), 4.0 * a / period, 0.5);
}

namespace {

std::vector<SimRecord> synthetic_trace(double duration, double dt) {
    std::vector<SimRecord> recs;
    for (double t : grid(duration, dt)) {
        SimRecord r;
        r.t = t;
        r.mass_hat = 3.12;
        r.inertia_hat = Vec3(0.1, 0.1, 0.2);
        r.outer.e1 = Vec3(0.1, 0.0, 0.0);
        r.wrench.force = Vec3(0, 0, 30.0);
        recs.push_back(r);
    }
    return recs;
}

}  // namespace

TEST(Metrics, ExactTraceScoresPerfectly) {
    const auto recs = synthetic_trace(20.0, 0.01);
    const auto m = compute_metrics(recs, ScenarioConfig::paper());
    EXPECT_TRUE(m.notices.empty());
    EXPECT_NEAR(m.window, 10.0, 1e-12);
    for (const auto& s : m.settling) EXPECT_EQ(s.value(), 0.0);
    EXPECT_EQ(m.theta_convergence.value(), 0.0);
    EXPECT_NEAR(m.position_rmse[0], 0.1, 1e-12);
    EXPECT_EQ(m.position_rmse[1], 0.0);
    EXPECT_NEAR(m.outer_peak, 0.1, 1e-15);
    EXPECT_EQ(m.chattering, 0.0);
    EXPECT_EQ(m.clamp_events, 0u);
}

TEST(Metrics, ShortTraceShrinksWindow) {
    const auto recs = synthetic_trace(3.0, 0.01);
    const auto m = compute_metrics(recs, ScenarioConfig::paper());
    ASSERT_EQ(m.notices.size(), 1u);
    EXPECT_NEAR(m.window, 3.0, 1e-9);
    EXPECT_THROW(compute_metrics(std::vector<SimRecord>{}, ScenarioConfig::paper()), std::invalid_argument);
}

TEST(Monotonicity, DecreasingHasNoViolations) {
    const auto t = grid(20.0, 0.01);
    std::vector<double> v;
    for (double x : t) v.push_back(std::exp(-x));
    const auto rep = monotonicity(t, v, 0.5, 5.0);
    EXPECT_GT(rep.windows, 1400u);
    EXPECT_EQ(rep.violations, 0u);
}

TEST(Monotonicity, IncreaseIsReported) {
    const auto t = grid(10.0, 0.01);
    std::vector<double> v;
    for (double x : t) v.push_back(x > 8.0 ? 1.0 + (x - 8.0) : 1.0);
    const auto rep = monotonicity(t, v, 0.5, 5.0);
    EXPECT_GT(rep.violations, 0u);
    EXPECT_NEAR(rep.worst_increase, 0.5, 1e-9);
}

TEST(Lyapunov, CConstant) {
    InnerLearningGains g;
    EXPECT_EQ(lyapunov_c_constant(g, 0.25, 0.5, 0.0), 0.0);
    EXPECT_NEAR(lyapunov_c_constant(g, 0.25, 0.5, 0.1), 8.0 * 6.0 * 0.01 + 200.0 * 0.2, 1e-12);
}

TEST(Lyapunov, InitialAuxiliaryTerm) {
    auto recs = synthetic_trace(1.0, 0.01);
    recs[0].inner.e2 = Vec3(0.2, -0.3, 0.0);
    const auto rep = lyapunov_diagnostic(recs, ScenarioConfig::paper());
    ASSERT_TRUE(rep.applicable);
    // beta |e2(0)|_1 with beta = 1 and no disturbance derivative at the first sample
    EXPECT_NEAR(rep.w_initial, 0.5, 1e-15);
    EXPECT_TRUE(std::isfinite(recs[0].v1));
    EXPECT_FALSE(lyapunov_diagnostic(recs, ScenarioConfig::paper(ControllerId::Asmc)).applicable);
}

TEST(Monotonicity, FloorSkipsSmallValues) {
    const auto t = grid(10.0, 0.01);
    std::vector<double> v;
    for (double x : t) v.push_back(x > 8.0 ? 1e-8 * (1.0 + std::sin(40.0 * x)) : 1.0 - 0.1 * x);
    EXPECT_GT(monotonicity(t, v, 0.5, 5.0).violations, 0u);
    const auto rep = monotonicity(t, v, 0.5, 5.0, 1e-7);
    EXPECT_EQ(rep.violations, 0u);
    EXPECT_EQ(rep.floor, 1e-7);
}

// Zero noise: V2 descends over every 0.5 s window after the transient, outside the discrete chatter band.
TEST(Lyapunov, DiagnosticOnRealRun) {
    ScenarioConfig cfg = ScenarioConfig::paper();
    SimTrace trace = run_scenario(cfg);
    ASSERT_FALSE(trace.diverged());
    const auto rep = lyapunov_diagnostic(trace.records, cfg);
    EXPECT_GT(rep.v2.windows, 10000u);
    EXPECT_EQ(rep.v2.violations, 0u) << "worst increase " << rep.v2.worst_increase;
    EXPECT_NEAR(rep.v2.floor, 0.5 * std::pow(4.5e-3 * 200.0 * 1e-3, 2), 1e-18);
    for (const auto& r : trace.records) {
        ASSERT_TRUE(std::isfinite(r.v1));
        ASSERT_NEAR(r.v2, 0.5 * r.pinv_h2 * r.pinv_h2, 1e-15);
    }
    const auto ft = ft_analysis(trace.records, cfg);
    EXPECT_GE(ft.lambda_min, cfg.estimator.inner.rho - 1e-12);
    EXPECT_GT(ft.xi_delta, 0.0);  // auto from the realized trace
}
