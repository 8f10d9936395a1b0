#include "adaptsafe/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptsafe {

AffineMap estimator_affine_map(const EstimatorState& state, const Prior& prior)
{
    AffineMap map;
    map.a_matrix = state.gamma * prior.sigma0_inv();
    map.b_vector = state.theta_hat - map.a_matrix * prior.theta_bar0;
    return map;
}

Zonotope affine_image(const AffineMap& map, const Zonotope& z)
{
    if (map.a_matrix.cols() != z.dim() || map.a_matrix.rows() != map.b_vector.size())
        throw std::invalid_argument("affine_image: dimension mismatch");
    return {map.a_matrix * z.center + map.b_vector, map.a_matrix * z.generators};
}

Zonotope estimator_zonotope(const EstimatorState& state) { return {state.theta_hat, state.gamma}; }

double support_inf(const Zonotope& z, const Vec& direction)
{
    if (direction.size() != z.dim()) throw std::invalid_argument("support_inf: dimension mismatch");
    double value = direction.dot(z.center);
    for (Eigen::Index i = 0; i < z.order(); ++i) value -= std::abs(direction.dot(z.generators.col(i)));
    return value;
}

namespace {

Eigen::FullPivLU<Mat> invertible_generator(const Zonotope& z, const char* who)
{
    if (z.generators.rows() != z.dim() || z.generators.cols() != z.dim())
        throw std::invalid_argument(std::string(who) + ": generator must be square");
    Eigen::FullPivLU<Mat> lu(z.generators);
    if (!lu.isInvertible()) {
        throw std::invalid_argument(std::string(who) +
                                    ": singular generator, use the support-function test instead");
    }
    return lu;
}

} // namespace

bool contains_point(const Zonotope& z, const Vec& point)
{
    if (point.size() != z.dim()) throw std::invalid_argument("contains_point: dimension mismatch");
    const auto lu = invertible_generator(z, "contains_point");
    const Vec coeff = lu.solve(z.center - point);
    return coeff.lpNorm<Eigen::Infinity>() <= 1.0 + kMembershipTol;
}

bool contains_zonotope(const Zonotope& outer, const Zonotope& inner)
{
    if (inner.dim() != outer.dim()) throw std::invalid_argument("contains_zonotope: dimension mismatch");
    const auto lu = invertible_generator(outer, "contains_zonotope");
    Mat stacked(outer.dim(), inner.order() + 1);
    if (inner.order() > 0) stacked.leftCols(inner.order()) = lu.solve(inner.generators);
    stacked.col(inner.order()) = lu.solve(outer.center - inner.center);
    const double row_sum = stacked.cwiseAbs().rowwise().sum().maxCoeff();
    return row_sum <= 1.0 + kMembershipTol;
}

bool estimator_contains(const EstimatorState& state, const Vec& theta)
{
    if (lambda_min(state.gamma) < kSingletonCollapse)
        return (state.theta_hat - theta).lpNorm<Eigen::Infinity>() <= kSingletonCollapse;
    return contains_point(estimator_zonotope(state), theta);
}

GaussianBelief gaussian_posterior(const Prior& prior, const EstimatorState& state)
{
    Mat cov = state.gamma * prior.sigma0_inv() * state.gamma.transpose();
    symmetrize(cov);
    if (lambda_min(cov) < 0.0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(cov);
        cov = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
              es.eigenvectors().transpose();
        symmetrize(cov);
    }
    return {state.theta_hat, cov};
}

double lie_sigma(const Vec& row, const EstimatorState& state, const Prior& prior)
{
    if (row.size() != state.gamma.rows()) throw std::invalid_argument("lie_sigma: dimension mismatch");
    const Vec v = state.gamma.transpose() * row;
    const double radicand = v.dot(prior.sigma0_inv() * v);
    const double tol = 1e-12 * std::max(1.0, v.squaredNorm());
    if (radicand < -tol) throw std::runtime_error("lie_sigma: covariance is not positive semidefinite");
    return std::sqrt(std::max(0.0, radicand));
}

} // namespace adaptsafe
