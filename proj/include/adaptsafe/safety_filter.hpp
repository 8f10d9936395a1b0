#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "adaptsafe/linalg.hpp"
#include "adaptsafe/regression.hpp"
#include "adaptsafe/uncertainty.hpp"

namespace adaptsafe {

/// Barrier value and Lie derivatives at a state:
/// h_dot(x, u, theta) = lf_h + lF_h . theta + lg_h . u
struct BarrierEval {
    double h = 0.0;
    double lf_h = 0.0;
    Vec lg_h;  // m
    Vec lF_h;  // p
};

/// a . u >= b
struct ConstraintRow {
    Vec a;
    double b = 0.0;
};

enum class FilterMode { Off, Robust, RobustFixed, Gaussian };

const char* to_string(FilterMode mode);

/// Two-sided standard normal quantile for confidence 1 - delta.
double confidence_quantile(double delta);

struct FilterConfig {
    double alpha_gain = 1.0;  // alpha(r) = alpha_gain * r
    double delta = 0.05;
    double c_delta = confidence_quantile(0.05);
    FilterMode mode = FilterMode::Robust;

    void validate() const;
};

/// b = -alpha h - lf_h - inf over z of lF_h . theta
ConstraintRow racbf_constraint(const BarrierEval& be, const Zonotope& z, const FilterConfig& cfg);

/// b = -alpha h - lf_h - lF_h . mean + c_delta sigma(x, gamma)
ConstraintRow gracbf_constraint(const BarrierEval& be, const GaussianBelief& belief, const Prior& prior,
                                const EstimatorState& state, const FilterConfig& cfg);

struct FilterResult {
    Vec u;
    std::vector<int> active_set;
    Vec multipliers;  // one per row, zero off the active set
    bool feasible = true;
};

constexpr std::size_t kMaxFilterRows = 16;

/**
 * min 0.5 ||u - k0||^2  s.t.  a_i . u >= b_i.
 *
 * Exact active-set enumeration: subsets are visited in order of increasing
 * size and the first equality-constrained projection that is primal feasible
 * with non-negative multipliers is returned. When no subset is feasible the
 * candidate with the smallest worst-case violation is returned with
 * feasible = false.
 */
FilterResult solve_filter_qp(const Vec& k0, std::span<const ConstraintRow> rows);

struct MatchedReport {
    std::size_t samples = 0;
    double max_residual = 0.0;
    bool matched(double tol = 1e-12) const { return max_residual <= tol; }
};

using MatrixField = std::function<Mat(const Vec&)>;

/// max over samples of ||F(x) - g(x) phi(x)||.
MatchedReport matched_check(std::span<const Vec> states, const MatrixField& uncertainty_matrix,
                            const MatrixField& input_matrix, const MatrixField& regressor);

struct CriterionReport {
    std::size_t samples = 0;
    std::size_t lg_zero = 0;     // samples where ||L_g h|| < tol
    std::size_t marginal = 0;    // of those, L_f h = -alpha h within tol
    std::size_t violations = 0;  // of those, L_f h < -alpha h - tol
    std::vector<std::size_t> violating_indices;
    bool compliant() const { return violations == 0; }
};

using BarrierField = std::function<BarrierEval(const Vec&)>;

/// Checks L_g h(x) = 0 => L_f h(x) > -alpha(h(x)) at each sampled state.
/// Equality cases are counted as marginal rather than as violations.
CriterionReport cbf_criterion_check(std::span<const Vec> states, const BarrierField& barrier,
                                    const FilterConfig& cfg, double tol = 1e-9);

} // namespace adaptsafe
