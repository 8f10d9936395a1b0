#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "adaptsafe/linalg.hpp"

namespace adaptsafe {

/// One (target, regressor) pair of the linear regression model y = phi * theta.
struct Sample {
    Vec y;    // n
    Mat phi;  // n x p
    double t = 0.0;
};

enum class RecordKind { Appended, Replaced, Rejected };

struct RecordOutcome {
    RecordKind kind = RecordKind::Rejected;
    std::size_t slot = 0;  // meaningful for Appended / Replaced
};

/**
 * Fixed-capacity buffer of samples reused at every instant by the estimator.
 *
 * Below capacity every valid sample is appended. Once full, a candidate
 * replaces the slot that maximizes the smallest eigenvalue of sum(phi^T phi),
 * provided that maximum beats the current value by the relative margin. Ties
 * go to the lowest slot index. Empty slots are simply absent and contribute
 * nothing to the sums.
 */
class HistoryStack {
public:
    HistoryStack(std::size_t capacity, Eigen::Index target_dim, Eigen::Index param_dim,
                 double improvement_margin = 0.01);

    /// Throws std::invalid_argument on dimension mismatch or non-finite entries.
    RecordOutcome record(const Sample& sample);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return slots_.size(); }
    bool full() const { return slots_.size() == capacity_; }
    Eigen::Index target_dim() const { return n_; }
    Eigen::Index param_dim() const { return p_; }
    double improvement_margin() const { return margin_; }

    const std::vector<Sample>& slots() const { return slots_; }

    /// Incrementally maintained sum over slots of phi^T phi.
    const Mat& info_matrix() const { return info_; }
    /// Incrementally maintained sum over slots of phi^T y.
    const Vec& target_moment() const { return moment_; }

    /// Smallest eigenvalue of info_matrix(), clamped at zero.
    double lambda_min() const;

    /// Sums rebuilt from the slots, for checking the incremental caches.
    Mat recomputed_info() const;
    Vec recomputed_moment() const;

private:
    std::size_t capacity_;
    Eigen::Index n_;
    Eigen::Index p_;
    double margin_;
    std::vector<Sample> slots_;
    Mat info_;
    Vec moment_;
};

/// CSV dump of stack slots: t, slot, y_1..y_n, phi_11..phi_np (row-major).
void write_stack_csv(std::ostream& os, std::span<const Sample> slots, Eigen::Index target_dim,
                     Eigen::Index param_dim);
void write_stack_csv(std::ostream& os, const HistoryStack& stack);

struct FEReport {
    double lambda_min = 0.0;
    bool satisfied = false;
    std::optional<double> first_satisfied_at;
};

constexpr double kDefaultFeThreshold = 1e-6;

/// Instantaneous finite-excitation check of the stack contents.
FEReport excitation(const HistoryStack& stack, double threshold = kDefaultFeThreshold);

/// Stateful wrapper that latches the first time the excitation check passes.
class ExcitationMonitor {
public:
    explicit ExcitationMonitor(double threshold = kDefaultFeThreshold);
    FEReport update(const HistoryStack& stack, double t);
    double threshold() const { return threshold_; }
    std::optional<double> first_satisfied_at() const { return first_; }

private:
    double threshold_;
    std::optional<double> first_;
};

struct Prior {
    Vec theta_bar0;
    Mat sigma0;

    /// Throws std::invalid_argument unless sigma0 is symmetric positive definite.
    void validate() const;
    Mat sigma0_inv() const;
    Eigen::Index dim() const { return theta_bar0.size(); }
};

/**
 * Estimator state in both parameterizations: (theta_hat, gamma) as produced
 * by the update ODEs, and the information form info = gamma^-1 together with
 * accum = sigma0^-1 theta_bar0 + integral of sum phi^T y.
 */
struct EstimatorState {
    Vec theta_hat;
    Mat gamma;
    Mat info;
    Vec accum;
    double t = 0.0;

    static EstimatorState initial(const Prior& prior);
};

enum class PropagationMode {
    Information,  // integrate (info, accum), recover (theta_hat, gamma) by a solve
    Ode,          // RK4 on the theta_hat / gamma update laws directly
};

/**
 * Advances the estimator by dt with the stack held constant over the step.
 * The information-form accumulators are advanced in both modes. Throws
 * std::runtime_error when gamma stops being positive definite.
 */
EstimatorState propagate(const EstimatorState& state, const HistoryStack& stack, double dt,
                         PropagationMode mode = PropagationMode::Information);

struct ClosedFormEstimate {
    Vec theta_hat;
    Mat gamma;
};

/// gamma = (sigma0^-1 + info_integral)^-1, theta_hat = gamma * accum.
ClosedFormEstimate solve_closed_form(const Prior& prior, const Mat& info_integral,
                                     const Vec& accum);

struct ErrorTransform {
    Vec predicted;  // gamma(t) sigma0^-1 (theta_true - theta_bar0)
    Vec actual;     // theta_true - theta_hat(t)
};

ErrorTransform error_transform(const EstimatorState& state, const Prior& prior,
                               const Vec& theta_true);

} // namespace adaptsafe
