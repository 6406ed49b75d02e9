#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rise/disturbance.hpp"

using namespace rise;

TEST(Disturbance, ZeroStdIsZero) {
    DisturbanceGenerator gen({0.0, 20.0, 0.0}, {0.0, 20.0, 0.0}, 3);
    for (int k = 0; k < 100; ++k) {
        const auto d = gen.step(1e-3);
        EXPECT_EQ(d.force, Vec3::Zero());
        EXPECT_EQ(d.torque, Vec3::Zero());
    }
}

TEST(Disturbance, SameSeedSameSequence) {
    DisturbanceGenerator a({0.5, 20.0, 2.0}, {0.025, 20.0, 0.1}, 99), b({0.5, 20.0, 2.0}, {0.025, 20.0, 0.1}, 99);
    DisturbanceGenerator c({0.5, 20.0, 2.0}, {0.025, 20.0, 0.1}, 100);
    bool differs = false;
    for (int k = 0; k < 1000; ++k) {
        const auto da = a.step(1e-3), db = b.step(1e-3), dc = c.step(1e-3);
        ASSERT_EQ(da.force, db.force);
        ASSERT_EQ(da.torque, db.torque);
        differs = differs || da.force != dc.force;
    }
    EXPECT_TRUE(differs);
}

TEST(Disturbance, StationaryStatistics) {
    const double sigma = 0.5, bw = 20.0, dt = 1e-3;
    DisturbanceGenerator gen({sigma, bw, 0.0}, {0.0, bw, 0.0}, 7);
    const int n = 400000;
    double sum = 0.0, sum_sq = 0.0, lag = 0.0;
    double prev = gen.current().force.x();
    for (int k = 0; k < n; ++k) {
        const double x = gen.step(dt).force.x();
        sum += x;
        sum_sq += x * x;
        lag += x * prev;
        prev = x;
    }
    const double mean = sum / n, var = sum_sq / n - mean * mean;
    EXPECT_NEAR(std::sqrt(var) / sigma, 1.0, 0.05);
    // one-step autocorrelation of the exact discretization is e^{-bw dt}
    EXPECT_NEAR(lag / n / var, std::exp(-bw * dt), 0.01);
}

TEST(Disturbance, ClampLimitsMagnitude) {
    DisturbanceGenerator gen({1.0, 20.0, 0.3}, {0.0, 20.0, 0.0}, 5);
    bool hit = false;
    for (int k = 0; k < 20000; ++k) {
        const auto d = gen.step(1e-3);
        ASSERT_LE(d.force.cwiseAbs().maxCoeff(), 0.3);
        hit = hit || d.force.cwiseAbs().maxCoeff() == 0.3;
    }
    EXPECT_TRUE(hit);
}
