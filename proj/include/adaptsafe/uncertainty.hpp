#pragma once

#include "adaptsafe/linalg.hpp"
#include "adaptsafe/regression.hpp"

namespace adaptsafe {

/// Z(c, G) = { c + G xi : ||xi||_inf <= 1 }. Zero generator columns is a singleton.
struct Zonotope {
    Vec center;
    Mat generators;  // p x q

    Eigen::Index dim() const { return center.size(); }
    Eigen::Index order() const { return generators.cols(); }

    static Zonotope singleton(const Vec& c) { return {c, Mat(c.size(), 0)}; }
};

struct GaussianBelief {
    Vec mean;
    Mat covariance;
};

/// x -> a_matrix * x + b_vector
struct AffineMap {
    Mat a_matrix;
    Vec b_vector;
};

/// The estimate at time t as an affine image of the prior mean:
/// A = gamma sigma0^-1, b = theta_hat - A theta_bar0.
AffineMap estimator_affine_map(const EstimatorState& state, const Prior& prior);

Zonotope affine_image(const AffineMap& map, const Zonotope& z);

/// Z(theta_hat(t), gamma(t)).
Zonotope estimator_zonotope(const EstimatorState& state);

/// min over theta in z of direction . theta = direction . c - sum_i |direction . G_i|.
double support_inf(const Zonotope& z, const Vec& direction);

/// Slack on the unit-ball test for round-off in G^-1 (c - point).
constexpr double kMembershipTol = 1e-9;

/// Exact membership for a square invertible generator: ||G^-1 (c - point)||_inf <= 1.
/// Throws std::invalid_argument for non-square or singular generators; use
/// contains_zonotope or support_inf for those.
bool contains_point(const Zonotope& z, const Vec& point);

/// Sufficient containment test inner in outer for an invertible outer generator:
/// P = G_out^-1 G_in, z = G_out^-1 (c_out - c_in), certified iff ||[P, z]||_inf <= 1.
/// A false result means "not certified", not "disjoint".
bool contains_zonotope(const Zonotope& outer, const Zonotope& inner);

/// Below this smallest eigenvalue of gamma the estimator zonotope is treated as {theta_hat}.
constexpr double kSingletonCollapse = 1e-10;

/// Membership of theta in the estimator zonotope, collapsing to a point test
/// once gamma is numerically singular.
bool estimator_contains(const EstimatorState& state, const Vec& theta);

/// N(theta_hat, gamma sigma0^-1 gamma^T), symmetrized with eigenvalues floored at zero.
GaussianBelief gaussian_posterior(const Prior& prior, const EstimatorState& state);

/// sqrt(row gamma sigma0^-1 gamma^T row^T); row is L_F h(x).
double lie_sigma(const Vec& row, const EstimatorState& state, const Prior& prior);

} // namespace adaptsafe
