#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rise/model.hpp"
#include "rise/rise_controller.hpp"

using namespace rise;

TEST(RiseTerm, ZeroOnFirstCall) {
    RiseTerm term;
    const LoopGains g{1.0, 1.0, 5.4, 1.0};
    const Vec3 mu = term.step(Vec3(0.3, -2.0, 1.0), g, 1e-3);
    EXPECT_EQ(mu, Vec3::Zero());
    EXPECT_TRUE(term.initialized());
}

TEST(RiseTerm, LeftEndpointIntegral) {
    RiseTerm term;
    const LoopGains g{1.0, 2.0, 3.0, 0.5};
    const double dt = 0.01;
    const Vec3 e0(1.0, -1.0, 0.0), e1(0.5, 0.5, 2.0), e2(0.0, 1.0, -1.0);
    term.step(e0, g, dt);
    const Vec3 mu1 = term.step(e1, g, dt);
    const Vec3 mu2 = term.step(e2, g, dt);

    // kp = 4, kp k2 = 8; signum of e0 = (1, -1, 0), of e1 = (1, 1, 1)
    const Vec3 int1 = (8.0 * e0 + 0.5 * Vec3(1, -1, 0)) * dt;
    const Vec3 int2 = int1 + (8.0 * e1 + 0.5 * Vec3(1, 1, 1)) * dt;
    EXPECT_LE((mu1 - (4.0 * (e1 - e0) + int1)).norm(), 1e-15);
    EXPECT_LE((mu2 - (4.0 * (e2 - e0) + int2)).norm(), 1e-15);
}

TEST(RiseTerm, ConstantErrorGrowsLinearly) {
    RiseTerm term;
    const LoopGains g{1.0, 1.0, 1.0, 1.0};
    const Vec3 e(0.1, 0.1, 0.1);
    Vec3 mu;
    for (int k = 0; k <= 1000; ++k) mu = term.step(e, g, 1e-3);
    // 1000 left-endpoint intervals of (2 * 1 * 0.1 + 1) = 1.2 per second
    EXPECT_NEAR(mu.x(), 1.2, 1e-12);
}

TEST(RiseTerm, StateErrors) {
    RiseTerm term;
    EXPECT_THROW(term.initialize(Vec3(NAN, 0, 0)), StateError);
    EXPECT_THROW(term.step(Vec3::Zero(), LoopGains{}, 0.0), std::invalid_argument);
    term.step(Vec3::Ones(), LoopGains{}, 1e-3);
    term.reset();
    EXPECT_FALSE(term.initialized());
    EXPECT_EQ(term.step(Vec3(2, 2, 2), LoopGains{}, 1e-3), Vec3::Zero());
}

TEST(Control, HoverForce) {
    const Vec3 f = outer_force(Vec3(0, 0, kDefaultGravity), 3.12, Vec3::Zero());
    EXPECT_NEAR(f.z(), 3.12 * 9.81, 1e-12);
    EXPECT_EQ(f.x(), 0.0);
    EXPECT_EQ(f.y(), 0.0);
}

TEST(Control, SingularThrust) {
    EXPECT_THROW(outer_force(Vec3(0, 0, 1), 1.0, Vec3(0, 0, -1)), SingularThrustError);
    EXPECT_THROW(attitude_extraction(Vec3::Zero(), 0.0), SingularThrustError);
    EXPECT_THROW(outer_force(Vec3(0, 0, NAN), 1.0, Vec3::Zero()), DivergenceError);
}

TEST(Control, InnerTorque) {
    const Mat3 psi = regressor_inner(Vec3(1, 2, 3), Vec3(0.5, -0.5, 1));
    const Vec3 theta(0.1, 0.1, 0.2), mu(0.01, 0.02, 0.03);
    EXPECT_LE((inner_torque(psi, theta, mu) - (psi * theta + mu)).norm(), 1e-15);
}

TEST(Extraction, LevelThrustGivesYawOnly) {
    const auto a = attitude_extraction(Vec3(0, 0, 30), 0.8);
    EXPECT_NEAR(a.angles.x(), 0.0, 1e-15);
    EXPECT_NEAR(a.angles.y(), 0.0, 1e-15);
    EXPECT_EQ(a.angles.z(), 0.8);
}

// The extracted angles must rotate the body z axis onto the force direction.
TEST(Extraction, BodyAxisAlignsWithForce) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lateral(-15.0, 15.0), vertical(5.0, 40.0), yaw(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 f(lateral(rng), lateral(rng), vertical(rng));
        const double psi = yaw(rng);
        const auto a = attitude_extraction(f, psi);
        const Mat3 r = rotation_matrix(a.angles);
        EXPECT_LE((r.col(2) - f.normalized()).norm(), 1e-12);
        EXPECT_LE((r - a.rotation).norm(), 1e-12);
    }
}

TEST(Extraction, ParallelHeadingThrows) {
    EXPECT_THROW(attitude_extraction(Vec3(0, 1, 0), 0.0), ExtractionError);
}

TEST(DerivativeFilter, QuadraticIsExactWithoutSmoothing) {
    const double dt = 1e-3;
    AttitudeDerivativeFilter filter(dt, 0.0);
    auto angle = [](double t) { return Vec3(0.5 * t * t, -t * t + 2 * t, 3.0 - 0.25 * t * t); };
    AttitudeRef ref;
    for (int k = 0; k < 10; ++k) ref = filter.push(k * dt, angle(k * dt));
    const double t = 9 * dt;
    EXPECT_LE((ref.rates - Vec3(t, -2 * t + 2, -0.5 * t)).norm(), 1e-9);
    EXPECT_LE((ref.accels - Vec3(1.0, -2.0, -0.5)).norm(), 1e-6);
}

TEST(DerivativeFilter, ZeroUntilThreeSamples) {
    AttitudeDerivativeFilter filter(0.01, 0.0);
    EXPECT_EQ(filter.push(0.00, Vec3(1, 1, 1)).rates, Vec3::Zero());
    EXPECT_EQ(filter.push(0.01, Vec3(2, 2, 2)).rates, Vec3::Zero());
    EXPECT_NE(filter.push(0.02, Vec3(3, 3, 3)).rates, Vec3::Zero());
}

TEST(DerivativeFilter, SmoothingConvergesToRamp) {
    const double dt = 1e-3, tau = 0.02;
    AttitudeDerivativeFilter filter(dt, tau);
    AttitudeRef ref;
    for (int k = 0; k < 1000; ++k) ref = filter.push(k * dt, Vec3(2.0 * k * dt, 0, 0));
    EXPECT_NEAR(ref.rates.x(), 2.0, 1e-9);
}

TEST(DerivativeFilter, NonUniformSpacingThrows) {
    AttitudeDerivativeFilter filter(1e-3, 5e-4);
    filter.push(0.0, Vec3::Zero());
    EXPECT_THROW(filter.push(0.0025, Vec3::Zero()), StateError);
    EXPECT_THROW(AttitudeDerivativeFilter(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(AttitudeDerivativeFilter(1e-3, -1.0), std::invalid_argument);
}

TEST(ReferenceGenerator, YawChannelIsAnalytic) {
    AttitudeReferenceGenerator gen(1e-3, 5e-4);
    DesiredFlatOutput flat;
    flat.yaw = {0.2, 1.1, -0.3, 0, 0};
    AttitudeRef ref;
    for (int k = 0; k < 5; ++k) ref = gen.update(k * 1e-3, Vec3(0, 0, 30), flat);
    EXPECT_EQ(ref.rates.z(), 1.1);
    EXPECT_EQ(ref.accels.z(), -0.3);
    EXPECT_EQ(ref.angles.z(), 0.2);
}

TEST(ReferenceGenerator, DegenerateExtractionHolds) {
    AttitudeReferenceGenerator gen(1e-3, 5e-4);
    DesiredFlatOutput flat;
    const Vec3 f(1, 0, 10);
    const AttitudeRef first = gen.update(0.0, f, flat);
    const AttitudeRef held = gen.update(1e-3, Vec3(0, 1, 0), flat);
    EXPECT_EQ(gen.held_count(), 1u);
    EXPECT_EQ(held.angles.head<2>(), first.angles.head<2>());
}

TEST(Gains, ValidateNamesFailingChecks) {
    const LoopGains outer{-1.0, 1.0, 5.4, 1.0}, inner{2.0, 1.0, 4.5, 1.0};
    const auto report = validate_gains(outer, inner, {0.5, 0.5}, {2.0, 0.0});
    ASSERT_NE(report.find("outer.k1>0"), nullptr);
    EXPECT_FALSE(report.find("outer.k1>0")->passed);
    EXPECT_TRUE(report.hard_failure());
    // 1 < 2 + 0 / 1
    EXPECT_FALSE(report.find("inner.beta>xi+xi_dot/k2")->passed);
    EXPECT_FALSE(report.find("outer.beta>xi+xi_dot/k2")->passed);
    EXPECT_EQ(report.find("inner.ks_sufficiently_large")->severity, CheckSeverity::Info);
}

TEST(Gains, TableGainsPassWithSmallBounds) {
    const auto report = validate_gains({1, 1, 5.4, 1}, {2, 1, 4.5, 1}, {0.2, 0.2}, {0.1, 0.1});
    EXPECT_TRUE(report.all_passed());
    EXPECT_FALSE(report.hard_failure());
}
