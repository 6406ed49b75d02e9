#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rise/asmc.hpp"

using namespace rise;

namespace {

SmcLoopGains gains(double lambda, double eta, double k) {
    SmcLoopGains g;
    g.lambda = {lambda, lambda, lambda};
    g.eta_sw = {eta, eta, eta};
    g.k_grad = k;
    return g;
}

}  // namespace

TEST(Asmc, SlidingVariable) {
    EXPECT_EQ(sliding_variable(Vec3(1, 2, 3), Vec3(-1, 0, 1), Vec3(2, 2, 0.5)), Vec3(1, 4, 2.5));
}

TEST(Asmc, ZeroSurfaceGivesFeedforwardOnly) {
    DesiredFlatOutput flat;
    flat.position[2] = Vec3(0.5, -0.5, 1.0);
    const auto out = smc_force(VehicleState{}, flat, 3.0, gains(1.0, 5.0, 0.1));
    EXPECT_EQ(out.s, Vec3::Zero());
    EXPECT_LE((out.command - 3.0 * Vec3(0.5, -0.5, 1.0 + kDefaultGravity)).norm(), 1e-12);
}

TEST(Asmc, HoverForce) {
    const auto out = smc_force(VehicleState{}, DesiredFlatOutput{}, 3.12, gains(1.0, 3.0, 0.1));
    EXPECT_NEAR(out.command.z(), 3.12 * 9.81, 1e-12);
    EXPECT_EQ(out.command.head<2>(), Eigen::Vector2d::Zero());
}

TEST(Asmc, SignFlipJumpsByTwiceEta) {
    const auto g = gains(1.0, 2.5, 0.1);
    DesiredFlatOutput flat;
    VehicleState above, below;
    above.position = Vec3(1e-9, 1e-9, 1e-9);
    below.position = -above.position;
    const Vec3 jump = smc_force(below, flat, 2.0, g).command - smc_force(above, flat, 2.0, g).command;
    EXPECT_LE((jump - Vec3::Constant(5.0)).norm(), 1e-7);
}

TEST(Asmc, TorqueUsesReferenceAcceleration) {
    AttitudeRef ref;
    ref.rates = Vec3(0.1, 0.2, 0.3);
    ref.accels = Vec3(1.0, 2.0, 3.0);
    VehicleState s;
    s.attitude_rate = Vec3(0.0, 0.2, 0.3);  // e1' = (0.1, 0, 0)
    const auto g = gains(4.0, 1.0, 0.01);
    const Vec3 theta(0.1, 0.1, 0.2);
    const auto out = smc_torque(s, ref, theta, g);
    const Mat3 psi = regressor_inner(ref.rates, ref.accels + Vec3(0.4, 0.0, 0.0));
    EXPECT_LE((out.regressor - psi).norm(), 1e-15);
    EXPECT_LE((out.command - (psi * theta + Vec3(1, 0, 0))).norm(), 1e-15);
}

TEST(Asmc, NoAdaptationOnSurface) {
    const Eigen::Matrix<double, 1, 1> m(3.0), lo(1.0), hi(6.0);
    const auto r = smc_adapt<1>(m, Vec3(0, 0, 9.81), Vec3::Zero(), 1.0, 1e-3, lo, hi);
    EXPECT_EQ(r.theta(0), 3.0);
    EXPECT_FALSE(r.clamped);
}

TEST(Asmc, GradientStep) {
    const Vec3 theta(0.1, 0.1, 0.2);
    const Mat3 psi = Vec3(1.0, 2.0, 3.0).asDiagonal();
    const auto r = smc_adapt<3>(theta, psi, Vec3(1, 1, -1), 0.5, 0.01, Vec3::Constant(0.01), Vec3::Constant(1.0));
    EXPECT_LE((r.theta - Vec3(0.105, 0.11, 0.185)).norm(), 1e-15);
}

TEST(Asmc, BoundsPinEstimate) {
    const Eigen::Matrix<double, 1, 1> lo(1.0), hi(6.0);
    Eigen::Matrix<double, 1, 1> m(3.0);
    bool clamped = false;
    for (int k = 0; k < 10000; ++k) {
        const auto r = smc_adapt<1>(m, Vec3(0, 0, 9.81), Vec3(0, 0, 10.0), 1.0, 1e-3, lo, hi);
        m = r.theta;
        clamped = clamped || r.clamped;
    }
    EXPECT_EQ(m(0), 6.0);
    EXPECT_TRUE(clamped);
    EXPECT_THROW(smc_adapt<1>(m, Vec3::Zero(), Vec3::Zero(), 1.0, 0.0, lo, hi), std::invalid_argument);
}

// Zero-mean white s drives the estimate as a random walk with std k |psi| sigma sqrt(n) dt.
TEST(Asmc, GradientRandomWalkSpread) {
    const double k = 0.1, dt = 1e-3, sigma = 1.0;
    const int n = 1000, runs = 400;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, sigma);
    const Eigen::Matrix<double, 1, 1> lo(-1e9), hi(1e9);
    double sum = 0.0, sum_sq = 0.0;
    for (int run = 0; run < runs; ++run) {
        Eigen::Matrix<double, 1, 1> m(0.0);
        for (int i = 0; i < n; ++i) m = smc_adapt<1>(m, Vec3(0, 0, 10.0), Vec3(0, 0, noise(rng)), k, dt, lo, hi).theta;
        sum += m(0);
        sum_sq += m(0) * m(0);
    }
    const double mean = sum / runs;
    const double std = std::sqrt(sum_sq / runs - mean * mean);
    const double expected = k * 10.0 * sigma * std::sqrt(static_cast<double>(n)) * dt;
    EXPECT_NEAR(std / expected, 1.0, 0.1);
}

TEST(Asmc, CombinedControl) {
    SmcGains g;
    g.outer = gains(1.0, 3.0, 0.1);
    g.inner = gains(5.0, 1.0, 0.01);
    const auto c = smc_control(VehicleState{}, DesiredFlatOutput{}, AttitudeRef{}, {3.12, Vec3(0.1, 0.1, 0.2)}, g);
    EXPECT_NEAR(c.wrench.force.z(), 3.12 * 9.81, 1e-12);
    EXPECT_EQ(c.wrench.torque, Vec3::Zero());
}
