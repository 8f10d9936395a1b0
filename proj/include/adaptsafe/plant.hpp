#pragma once

#include <random>
#include <vector>

#include "adaptsafe/linalg.hpp"
#include "adaptsafe/regression.hpp"
#include "adaptsafe/safety_filter.hpp"

namespace adaptsafe::plant {

// Planar double integrator in a spatially varying wind field:
//   q_ddot = u + phi(x) theta,  phi(x) = tanh(q1 + q2) diag(qdot1, qdot2).

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;

struct PlantState {
    Vec2 q = Vec2::Zero();
    Vec2 qdot = Vec2::Zero();

    Vec4 stacked() const { return (Vec4() << q, qdot).finished(); }
    static PlantState from(const Eigen::Ref<const Vec>& x);
};

struct ObstacleSpec {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
};

struct PlantConfig {
    Vec2 theta_true{1.0, -1.0};
    std::vector<ObstacleSpec> obstacles;
    double mu = 0.5;
    Eigen::Matrix4d noise_cov = 0.1 * Eigen::Matrix4d::Identity();
    Mat2 kp = 4.0 * Mat2::Identity();
    Mat2 kd = 4.0 * Mat2::Identity();

    /// Two unit-radius obstacles straddling the figure-eight.
    static PlantConfig defaults();
    void validate() const;
};

constexpr int kStateDim = 4;
constexpr int kInputDim = 2;
constexpr int kParamDim = 2;

/// f(x) = (qdot, 0)
Vec4 drift(const PlantState& x);
/// g(x) = [0; I]
Eigen::Matrix<double, 4, 2> input_matrix(const PlantState& x);
/// phi(x), 2 x 2
Mat2 regressor(const PlantState& x);
/// F(x) = g(x) phi(x)
Eigen::Matrix<double, 4, 2> uncertainty_matrix(const PlantState& x);
/// The wind force acting on the true plant, phi(x) [1, -1]^T.
Vec2 wind(const PlantState& x);

/// x_dot = f(x) + F(x) theta + g(x) u
Vec4 dynamics(const PlantState& x, const Vec2& u, const Vec2& theta);

/// One classical RK4 step with u held constant.
PlantState rk4_step(const PlantState& x, const Vec2& u, const Vec2& theta, double dt);

/// Draws eps ~ N(0, cov) through a symmetric square-root factor, so
/// semidefinite covariances (including zero) are accepted.
class MeasurementNoise {
public:
    explicit MeasurementNoise(const Eigen::Matrix4d& cov);
    Vec4 draw(std::mt19937_64& rng);
    bool silent() const { return silent_; }

private:
    Eigen::Matrix4d factor_;
    bool silent_;
    std::normal_distribution<double> standard_{0.0, 1.0};
};

/// Sample with phi = F(x) and y = x_dot - f(x) - g(x) u + eps, where x_dot is
/// evaluated from the true model. Pass noise = nullptr for a noiseless sample.
Sample measurement(const PlantState& x, const Vec2& u, const Vec2& theta_true, double t,
                   MeasurementNoise* noise, std::mt19937_64* rng);

struct Reference {
    Vec2 q;
    Vec2 qdot;
    Vec2 qddot;
};

/// q_d(t) = [4 sin(w t), 4 sin(w t) cos(w t)], w = 0.1 pi.
Reference desired_trajectory(double t);

/// h = d - mu min(0, L_f d) L_f d with d = ||q - q_o||^2 - r^2, L_f d = 2 (q - q_o) . qdot.
BarrierEval barrier_eval(const PlantState& x, const ObstacleSpec& obs, double mu);

/// Gradient of h with respect to (q, qdot).
Vec4 barrier_gradient(const PlantState& x, const ObstacleSpec& obs, double mu);
double barrier_value(const PlantState& x, const ObstacleSpec& obs, double mu);

/// Certainty-equivalence tracking law with wind cancellation:
/// k0 = qdd_d + Kp (q_d - q) + Kd (qd_d - qdot) - phi(x) theta_hat.
Vec2 nominal_controller(const PlantState& x, double t, const Vec2& theta_hat, const PlantConfig& cfg);

} // namespace adaptsafe::plant
