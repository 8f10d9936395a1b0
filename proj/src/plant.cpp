#include "adaptsafe/plant.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adaptsafe::plant {

namespace {
constexpr double kOmega = 0.1 * std::numbers::pi;
constexpr double kAmplitude = 4.0;
} // namespace

PlantState PlantState::from(const Eigen::Ref<const Vec>& x)
{
    if (x.size() != kStateDim) throw std::invalid_argument("PlantState: expected 4 components");
    PlantState s;
    s.q = x.head<2>();
    s.qdot = x.tail<2>();
    return s;
}

PlantConfig PlantConfig::defaults()
{
    PlantConfig cfg;
    cfg.obstacles = {{Vec2(-2.0, 1.2), 1.0}, {Vec2(2.0, -1.2), 1.0}};
    return cfg;
}

void PlantConfig::validate() const
{
    if (!theta_true.allFinite()) throw std::invalid_argument("PlantConfig: non-finite theta_true");
    if (!(mu > 0.0)) throw std::invalid_argument("PlantConfig: mu must be > 0");
    for (const auto& o : obstacles) {
        if (!(o.radius > 0.0) || !o.center.allFinite())
            throw std::invalid_argument("PlantConfig: obstacle radius must be > 0");
    }
    if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("PlantConfig: noise_cov must be symmetric");
    if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(noise_cov).eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument("PlantConfig: noise_cov must be positive semidefinite");
    auto pd = [](const Mat2& k) {
        return (k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 &&
               Eigen::SelfAdjointEigenSolver<Mat2>(k).eigenvalues().minCoeff() > 0.0;
    };
    if (!pd(kp) || !pd(kd)) throw std::invalid_argument("PlantConfig: tracking gains must be symmetric PD");
}

Vec4 drift(const PlantState& x) { return (Vec4() << x.qdot, 0.0, 0.0).finished(); }

Eigen::Matrix<double, 4, 2> input_matrix(const PlantState&)
{
    Eigen::Matrix<double, 4, 2> g = Eigen::Matrix<double, 4, 2>::Zero();
    g.bottomRows<2>().setIdentity();
    return g;
}

Mat2 regressor(const PlantState& x)
{
    const double a = std::tanh(x.q(0) + x.q(1));
    return (Vec2() << a * x.qdot(0), a * x.qdot(1)).finished().asDiagonal();
}

Eigen::Matrix<double, 4, 2> uncertainty_matrix(const PlantState& x)
{
    return input_matrix(x) * regressor(x);
}

Vec2 wind(const PlantState& x)
{
    const double a = std::tanh(x.q(0) + x.q(1));
    return {a * x.qdot(0), -a * x.qdot(1)};
}

Vec4 dynamics(const PlantState& x, const Vec2& u, const Vec2& theta)
{
    Vec4 xdot;
    xdot << x.qdot, u + regressor(x) * theta;
    return xdot;
}

PlantState rk4_step(const PlantState& x, const Vec2& u, const Vec2& theta, double dt)
{
    auto shifted = [&](const Vec4& k, double h) {
        PlantState s;
        s.q = x.q + h * k.head<2>();
        s.qdot = x.qdot + h * k.tail<2>();
        return s;
    };
    const Vec4 k1 = dynamics(x, u, theta);
    const Vec4 k2 = dynamics(shifted(k1, 0.5 * dt), u, theta);
    const Vec4 k3 = dynamics(shifted(k2, 0.5 * dt), u, theta);
    const Vec4 k4 = dynamics(shifted(k3, dt), u, theta);
    return shifted((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, dt);
}

MeasurementNoise::MeasurementNoise(const Eigen::Matrix4d& cov)
{
    if (!cov.allFinite() || (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("MeasurementNoise: covariance must be finite and symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
        throw std::invalid_argument("MeasurementNoise: covariance must be positive semidefinite");
    const Vec4 roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
    silent_ = roots.maxCoeff() == 0.0;
}

Vec4 MeasurementNoise::draw(std::mt19937_64& rng)
{
    Vec4 z;
    for (int i = 0; i < 4; ++i) z(i) = standard_(rng);
    return factor_ * z;
}

Sample measurement(const PlantState& x, const Vec2& u, const Vec2& theta_true, double t,
                   MeasurementNoise* noise, std::mt19937_64* rng)
{
    const Eigen::Matrix<double, 4, 2> g = input_matrix(x);
    Vec4 y = dynamics(x, u, theta_true) - drift(x) - g * u;
    if (noise != nullptr && rng != nullptr) y += noise->draw(*rng);
    Sample s;
    s.y = y;
    s.phi = uncertainty_matrix(x);
    s.t = t;
    return s;
}

Reference desired_trajectory(double t)
{
    const double s = std::sin(kOmega * t);
    const double c = std::cos(kOmega * t);
    const double s2 = std::sin(2.0 * kOmega * t);
    const double c2 = std::cos(2.0 * kOmega * t);
    // Second component 4 sin cos = 2 sin(2 w t).
    Reference ref;
    ref.q = {kAmplitude * s, 0.5 * kAmplitude * s2};
    ref.qdot = {kAmplitude * kOmega * c, kAmplitude * kOmega * c2};
    ref.qddot = {-kAmplitude * kOmega * kOmega * s, -2.0 * kAmplitude * kOmega * kOmega * s2};
    return ref;
}

double barrier_value(const PlantState& x, const ObstacleSpec& obs, double mu)
{
    const Vec2 rel = x.q - obs.center;
    const double d = rel.squaredNorm() - obs.radius * obs.radius;
    const double lfd = 2.0 * rel.dot(x.qdot);
    return d - mu * std::min(0.0, lfd) * lfd;
}

Vec4 barrier_gradient(const PlantState& x, const ObstacleSpec& obs, double mu)
{
    const Vec2 rel = x.q - obs.center;
    const double lfd = 2.0 * rel.dot(x.qdot);
    // d/ds [min(0, s) s] = 2 min(0, s)
    const double ext = 2.0 * mu * std::min(0.0, lfd);
    Vec4 grad;
    grad << 2.0 * rel - ext * 2.0 * x.qdot, -ext * 2.0 * rel;
    return grad;
}

BarrierEval barrier_eval(const PlantState& x, const ObstacleSpec& obs, double mu)
{
    const Vec4 grad = barrier_gradient(x, obs, mu);
    BarrierEval be;
    be.h = barrier_value(x, obs, mu);
    be.lf_h = grad.dot(drift(x));
    be.lg_h = input_matrix(x).transpose() * grad;
    be.lF_h = regressor(x).transpose() * be.lg_h;
    return be;
}

Vec2 nominal_controller(const PlantState& x, double t, const Vec2& theta_hat, const PlantConfig& cfg)
{
    const Reference ref = desired_trajectory(t);
    return ref.qddot + cfg.kp * (ref.q - x.q) + cfg.kd * (ref.qdot - x.qdot) - regressor(x) * theta_hat;
}

} // namespace adaptsafe::plant
