#include "adaptsafe/safety_filter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace adaptsafe {

const char* to_string(FilterMode mode)
{
    switch (mode) {
    case FilterMode::Off: return "Off";
    case FilterMode::Robust: return "Robust";
    case FilterMode::RobustFixed: return "RobustFixed";
    case FilterMode::Gaussian: return "Gaussian";
    }
    return "?";
}

double confidence_quantile(double delta)
{
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("confidence_quantile: delta must be in (0,1)");
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, 1.0 - 0.5 * delta);
}

void FilterConfig::validate() const
{
    if (!(alpha_gain > 0.0)) throw std::invalid_argument("FilterConfig: alpha_gain must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("FilterConfig: delta must be in (0,1)");
    if (!(c_delta > 0.0)) throw std::invalid_argument("FilterConfig: c_delta must be > 0");
}

ConstraintRow racbf_constraint(const BarrierEval& be, const Zonotope& z, const FilterConfig& cfg)
{
    if (be.lF_h.size() != z.dim()) throw std::invalid_argument("racbf_constraint: dimension mismatch");
    return {be.lg_h, -cfg.alpha_gain * be.h - be.lf_h - support_inf(z, be.lF_h)};
}

ConstraintRow gracbf_constraint(const BarrierEval& be, const GaussianBelief& belief, const Prior& prior,
                                const EstimatorState& state, const FilterConfig& cfg)
{
    if (be.lF_h.size() != belief.mean.size()) throw std::invalid_argument("gracbf_constraint: dimension mismatch");
    const double sigma = lie_sigma(be.lF_h, state, prior);
    return {be.lg_h, -cfg.alpha_gain * be.h - be.lf_h - be.lF_h.dot(belief.mean) + cfg.c_delta * sigma};
}

namespace {

struct Candidate {
    Vec u;
    Vec lambda;  // over the subset rows
    bool valid = false;
};

// Projection of k0 onto {u : a_i . u = b_i, i in subset}. With exact = false a
// rank-deficient subset falls back to the minimum-norm least-squares correction.
Candidate project(const Vec& k0, std::span<const ConstraintRow> rows, const std::vector<int>& subset,
                  bool exact)
{
    const auto k = static_cast<Eigen::Index>(subset.size());
    const auto m = k0.size();
    Candidate c;
    if (k == 0) {
        c.u = k0;
        c.lambda = Vec(0);
        c.valid = true;
        return c;
    }
    Mat a(k, m);
    Vec rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        a.row(i) = rows[subset[i]].a.transpose();
        rhs(i) = rows[subset[i]].b - rows[subset[i]].a.dot(k0);
    }
    if (exact) {
        const Mat gram = a * a.transpose();
        Eigen::FullPivLU<Mat> lu(gram);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) return c;
        c.lambda = lu.solve(rhs);
        c.u = k0 + a.transpose() * c.lambda;
    } else {
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
        c.u = k0 + cod.solve(rhs);
        c.lambda = Vec::Zero(k);
    }
    c.valid = c.u.allFinite();
    return c;
}

double row_tolerance(const ConstraintRow& row, const Vec& u)
{
    return 1e-10 * (1.0 + std::abs(row.b) + row.a.norm() * u.norm());
}

std::vector<int> subset_of(unsigned mask, std::size_t n)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) out.push_back(static_cast<int>(i));
    return out;
}

} // namespace

FilterResult solve_filter_qp(const Vec& k0, std::span<const ConstraintRow> rows)
{
    const auto m = k0.size();
    if (m < 1) throw std::invalid_argument("solve_filter_qp: empty input");
    if (rows.size() > kMaxFilterRows) throw std::invalid_argument("solve_filter_qp: too many rows");
    if (!k0.allFinite()) throw std::invalid_argument("solve_filter_qp: non-finite nominal input");
    for (const auto& r : rows) {
        if (r.a.size() != m) throw std::invalid_argument("solve_filter_qp: row dimension mismatch");
        if (!r.a.allFinite() || !std::isfinite(r.b)) throw std::invalid_argument("solve_filter_qp: non-finite row");
    }

    const std::size_t n = rows.size();
    const unsigned mask_end = 1u << n;
    const auto max_active = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(m)));

    auto max_violation = [&](const Vec& u) {
        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.b - r.a.dot(u) - row_tolerance(r, u));
        return worst;
    };

    for (int size = 0; size <= max_active; ++size) {
        for (unsigned mask = 0; mask < mask_end; ++mask) {
            if (std::popcount(mask) != size) continue;
            const auto subset = subset_of(mask, n);
            const Candidate c = project(k0, rows, subset, true);
            if (!c.valid) continue;
            if (max_violation(c.u) > 0.0) continue;
            if (size > 0) {
                const double lambda_tol = 1e-10 * (1.0 + c.lambda.cwiseAbs().maxCoeff());
                if (c.lambda.minCoeff() < -lambda_tol) continue;
            }

            FilterResult out;
            out.u = c.u;
            out.active_set = subset;
            out.multipliers = Vec::Zero(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < subset.size(); ++i)
                out.multipliers(subset[i]) = std::max(0.0, c.lambda(static_cast<Eigen::Index>(i)));
            out.feasible = true;
            return out;
        }
    }

    // Infeasible: least worst-case violation, then least deviation from k0.
    FilterResult out;
    out.feasible = false;
    out.multipliers = Vec::Zero(static_cast<Eigen::Index>(n));
    double best_violation = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    for (int size = 0; size <= max_active; ++size) {
        for (unsigned mask = 0; mask < mask_end; ++mask) {
            if (std::popcount(mask) != size) continue;
            const auto subset = subset_of(mask, n);
            const Candidate c = project(k0, rows, subset, false);
            if (!c.valid) continue;
            const double violation = max_violation(c.u);
            const double cost = (c.u - k0).squaredNorm();
            if (violation < best_violation - 1e-12 ||
                (violation <= best_violation + 1e-12 && cost < best_cost)) {
                best_violation = violation;
                best_cost = cost;
                out.u = c.u;
                out.active_set = subset;
            }
        }
    }
    if (out.u.size() == 0) out.u = k0;
    return out;
}

MatchedReport matched_check(std::span<const Vec> states, const MatrixField& uncertainty_matrix,
                            const MatrixField& input_matrix, const MatrixField& regressor)
{
    MatchedReport report;
    for (const auto& x : states) {
        const Mat residual = uncertainty_matrix(x) - input_matrix(x) * regressor(x);
        report.max_residual = std::max(report.max_residual, residual.norm());
        ++report.samples;
    }
    return report;
}

CriterionReport cbf_criterion_check(std::span<const Vec> states, const BarrierField& barrier,
                                    const FilterConfig& cfg, double tol)
{
    CriterionReport report;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const BarrierEval be = barrier(states[i]);
        ++report.samples;
        if (be.lg_h.norm() >= tol) continue;
        ++report.lg_zero;
        const double margin = be.lf_h + cfg.alpha_gain * be.h;
        if (margin < -tol) {
            ++report.violations;
            report.violating_indices.push_back(i);
        } else if (margin <= tol) {
            ++report.marginal;
        }
    }
    return report;
}

} // namespace adaptsafe
