#include <gtest/gtest.h>

#include <random>

#include "adaptsafe/plant.hpp"
#include "oracles.hpp"

using namespace adaptsafe;
using namespace adaptsafe::plant;

namespace {

PlantState state(double q1, double q2, double v1, double v2) { return {Vec2(q1, q2), Vec2(v1, v2)}; }

// Wind written out independently of the regressor.
Vec2 wind_reference(const PlantState& x)
{
    const double s = std::tanh(x.q(0) + x.q(1));
    return {s * x.qdot(0), -s * x.qdot(1)};
}

} // namespace

TEST(Dynamics, Examples)
{
    EXPECT_EQ(dynamics(state(0, 0, 0, 0), Vec2::Zero(), Vec2(1, -1)), Vec4::Zero());
    const Vec4 xd = dynamics(state(1, 1, 1, 1), Vec2::Zero(), Vec2(1, -1));
    EXPECT_NEAR(xd(2), 0.96403, 1e-5);
    EXPECT_NEAR(xd(3), -0.96403, 1e-5);
    EXPECT_DOUBLE_EQ(xd(2), std::tanh(2.0));
    const Vec4 rest = dynamics(state(3, -7, 0, 0), Vec2(0.5, -0.25), Vec2(1, -1));
    EXPECT_EQ(rest, (Vec4() << 0, 0, 0.5, -0.25).finished());
}

TEST(Regressor, Examples)
{
    EXPECT_EQ(regressor(state(1, 2, 0, 0)), Mat2::Zero());
    const Mat2 phi = regressor(state(1, 1, 1, 1));
    EXPECT_EQ(phi, (Mat2() << std::tanh(2.0), 0, 0, std::tanh(2.0)).finished());
    EXPECT_EQ(regressor(state(1, -1, 3, 4)), Mat2::Zero());
}

TEST(Regressor, ReproducesWindAtRandomStates)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
        const auto x = state(u(rng), u(rng), u(rng), u(rng));
        EXPECT_LT((regressor(x) * Vec2(1, -1) - wind_reference(x)).norm(), 1e-12);
        EXPECT_LT((wind(x) - wind_reference(x)).norm(), 1e-12);
    }
}

TEST(Dynamics, FreeMotionIsStraight)
{
    PlantState x = state(0.5, -1.0, 0.3, 0.7);
    for (int k = 0; k < 1000; ++k) x = rk4_step(x, Vec2::Zero(), Vec2::Zero(), 1e-3);
    EXPECT_NEAR(x.q(0), 0.8, 1e-12);
    EXPECT_NEAR(x.q(1), -0.3, 1e-12);
    EXPECT_NEAR(x.qdot(0), 0.3, 1e-15);
}

TEST(Measurement, NoiselessTargetIsExact)
{
    const auto x = state(0.3, 0.4, -1.0, 2.0);
    const Vec2 theta(1, -1);
    const Sample s = measurement(x, Vec2(0.2, 0.1), theta, 1.5, nullptr, nullptr);
    EXPECT_LT((s.y - s.phi * Vec(theta)).norm(), 1e-15);
    EXPECT_EQ(s.t, 1.5);
    const Sample rest = measurement(state(1, 1, 0, 0), Vec2(3, 3), theta, 0.0, nullptr, nullptr);
    EXPECT_EQ(rest.phi.norm(), 0.0);
    EXPECT_EQ(rest.y.norm(), 0.0);
}

TEST(Measurement, NoiseHasConfiguredCovariance)
{
    const Eigen::Matrix4d cov = 0.1 * Eigen::Matrix4d::Identity();
    MeasurementNoise noise(cov);
    std::mt19937_64 rng(42);
    const auto x = state(0.3, 0.4, -1.0, 2.0);
    const Vec2 theta(1, -1);
    const int n = 100000;
    Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
    Vec4 mean = Vec4::Zero();
    for (int i = 0; i < n; ++i) {
        const Sample s = measurement(x, Vec2::Zero(), theta, 0.0, &noise, &rng);
        const Vec4 e = s.y - s.phi * Vec(theta);
        mean += e;
        acc += e * e.transpose();
    }
    mean /= n;
    acc /= n;
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5e-3);
    EXPECT_LT((acc - cov).cwiseAbs().maxCoeff(), 5e-3);
    EXPECT_TRUE(MeasurementNoise(Eigen::Matrix4d::Zero()).silent());
    Eigen::Matrix4d bad = -cov;
    EXPECT_THROW(MeasurementNoise{bad}, std::invalid_argument);
}

TEST(DesiredTrajectory, ValuesAndDerivatives)
{
    EXPECT_LT(desired_trajectory(0.0).q.norm(), 1e-15);
    EXPECT_LT((desired_trajectory(5.0).q - Vec2(4, 0)).norm(), 1e-14);
    const double h = 1e-4;
    for (double t = 0.0; t <= 40.0; t += 0.37) {
        const auto mid = desired_trajectory(t + h);
        const auto lo = desired_trajectory(t);
        const auto hi = desired_trajectory(t + 2 * h);
        EXPECT_LT(((hi.q - lo.q) / (2 * h) - mid.qdot).norm(), 1e-6);
        EXPECT_LT(((hi.qdot - lo.qdot) / (2 * h) - mid.qddot).norm(), 1e-6);
    }
}

TEST(Barrier, HandEvaluatedValues)
{
    const ObstacleSpec obs{Vec2(2, 0), 1.0};
    const auto be = barrier_eval(state(4, 0, 0, 0), obs, 2.0);
    EXPECT_DOUBLE_EQ(be.h, 3.0);
    EXPECT_DOUBLE_EQ(be.lf_h, 0.0);
    EXPECT_EQ(be.lg_h.norm(), 0.0);
    EXPECT_EQ(be.lF_h.norm(), 0.0);

    // Moving away: extension inactive, h = d.
    EXPECT_DOUBLE_EQ(barrier_value(state(4, 0, 1, 0.5), obs, 2.0), 3.0);

    // Approaching head on: L_f d = 2 * (2, 0) . (-1, 0) = -4, h = 3 - mu * 16.
    const auto ap = barrier_eval(state(4, 0, -1, 0), obs, 0.5);
    EXPECT_DOUBLE_EQ(ap.h, 3.0 - 0.5 * 16.0);
}

TEST(Barrier, LieDerivativesAreGradientProjections)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const ObstacleSpec obs{Vec2(-2, 1.2), 1.0};
    for (int i = 0; i < 200; ++i) {
        const auto x = state(u(rng), u(rng), u(rng), u(rng));
        const auto be = barrier_eval(x, obs, 2.0);
        const Vec4 grad = barrier_gradient(x, obs, 2.0);
        EXPECT_NEAR(be.lf_h, grad.dot(drift(x)), 1e-9);
        EXPECT_LT((be.lg_h - (grad.transpose() * input_matrix(x)).transpose()).norm(), 1e-9);
        EXPECT_LT((be.lF_h - (grad.transpose() * uncertainty_matrix(x)).transpose()).norm(), 1e-9);
        EXPECT_LT((be.lF_h - regressor(x).transpose() * be.lg_h).norm(), 1e-12);
    }
}

TEST(Barrier, GradientMatchesFiniteDifferencesAcrossSeam)
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const ObstacleSpec obs{Vec2(2, -1.2), 1.0};
    for (int i = 0; i < 1000; ++i) {
        Vec x = (Vec(4) << u(rng), u(rng), u(rng), u(rng)).finished();
        if (i % 4 == 0) {
            // Put the velocity exactly perpendicular to q - q_o so L_f d = 0.
            const Vec2 rel = x.head<2>() - Vec(obs.center);
            x.tail<2>() = u(rng) * Vec2(-rel(1), rel(0));
        }
        const auto f = [&](const Vec& z) { return barrier_value(PlantState::from(z), obs, 2.0); };
        const Vec fd = oracle::seam_gradient(f, x, 1e-5);
        const Vec4 an = barrier_gradient(PlantState::from(x), obs, 2.0);
        EXPECT_LT((fd - Vec(an)).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + an.cwiseAbs().maxCoeff()));
    }
}

TEST(NominalController, Examples)
{
    PlantConfig cfg = PlantConfig::defaults();
    const double t = 3.3;
    const auto ref = desired_trajectory(t);
    const PlantState on{ref.q, ref.qdot};
    EXPECT_LT((nominal_controller(on, t, Vec2::Zero(), cfg) - ref.qddot).norm(), 1e-15);
    cfg.kp.setZero();
    cfg.kd.setZero();
    const PlantState off = state(1, 2, 3, 4);
    EXPECT_LT((nominal_controller(off, t, Vec2::Zero(), cfg) - ref.qddot).norm(), 1e-15);
}

TEST(NominalController, ExactCancellationGivesLinearErrorDecay)
{
    PlantConfig cfg = PlantConfig::defaults();
    const Vec2 theta = cfg.theta_true;
    PlantState x = state(0.5, -0.3, 0.0, 0.0);
    const double dt = 1e-3;
    // Error system e'' + 4 e' + 4 e = 0 from e(0) = e0, e'(0) = e0d: e = (e0 + (e0d + 2 e0) t) exp(-2t).
    const auto r0 = desired_trajectory(0.0);
    const Vec2 e0 = x.q - r0.q;
    const Vec2 e0d = x.qdot - r0.qdot;
    for (int k = 0; k < 3000; ++k) {
        const double t = k * dt;
        x = rk4_step(x, nominal_controller(x, t, theta, cfg), theta, dt);
    }
    // The input is held over each step, so allow a first-order hold error.
    const double t = 3.0;
    const Vec2 expected = (e0 + (e0d + 2.0 * e0) * t) * std::exp(-2.0 * t);
    EXPECT_LT(((x.q - desired_trajectory(t).q) - expected).norm(), 2e-3);
}

TEST(PlantConfig, Validation)
{
    PlantConfig cfg = PlantConfig::defaults();
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.obstacles.size(), 2u);
    cfg.mu = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = PlantConfig::defaults();
    cfg.obstacles[0].radius = -1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = PlantConfig::defaults();
    cfg.kp(0, 0) = -1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
