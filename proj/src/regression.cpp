#include "adaptsafe/regression.hpp"

#include "adaptsafe/format.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace adaptsafe {

HistoryStack::HistoryStack(std::size_t capacity, Eigen::Index target_dim, Eigen::Index param_dim,
                           double improvement_margin)
    : capacity_(capacity),
      n_(target_dim),
      p_(param_dim),
      margin_(improvement_margin),
      info_(Mat::Zero(param_dim, param_dim)),
      moment_(Vec::Zero(param_dim))
{
    if (capacity == 0) throw std::invalid_argument("HistoryStack: capacity must be positive");
    if (target_dim <= 0 || param_dim <= 0)
        throw std::invalid_argument("HistoryStack: dimensions must be positive");
    if (!(improvement_margin >= 0.0))
        throw std::invalid_argument("HistoryStack: improvement margin must be non-negative");
    slots_.reserve(capacity);
}

RecordOutcome HistoryStack::record(const Sample& sample)
{
    if (sample.y.size() != n_ || sample.phi.rows() != n_ || sample.phi.cols() != p_) {
        throw std::invalid_argument("HistoryStack::record: expected y of size " +
                                    std::to_string(n_) + " and phi of shape " +
                                    std::to_string(n_) + "x" + std::to_string(p_));
    }
    if (!sample.y.allFinite() || !sample.phi.allFinite() || !std::isfinite(sample.t))
        throw std::invalid_argument("HistoryStack::record: non-finite sample");

    const Mat gram = sample.phi.transpose() * sample.phi;
    const Vec moment = sample.phi.transpose() * sample.y;

    if (slots_.size() < capacity_) {
        slots_.push_back(sample);
        info_ += gram;
        moment_ += moment;
        return {RecordKind::Appended, slots_.size() - 1};
    }

    const double current = lambda_min();
    double best = -1.0;
    std::size_t best_slot = 0;
    Mat trial(p_, p_);
    for (std::size_t j = 0; j < slots_.size(); ++j) {
        const Mat& old_phi = slots_[j].phi;
        trial.noalias() = info_ - old_phi.transpose() * old_phi;
        trial += gram;
        const double value = adaptsafe::lambda_min(trial);
        if (value > best) {
            best = value;
            best_slot = j;
        }
    }

    if (best > current && best > current * (1.0 + margin_)) {
        const Mat& old_phi = slots_[best_slot].phi;
        info_ -= old_phi.transpose() * old_phi;
        moment_ -= old_phi.transpose() * slots_[best_slot].y;
        info_ += gram;
        moment_ += moment;
        symmetrize(info_);
        slots_[best_slot] = sample;
        return {RecordKind::Replaced, best_slot};
    }
    return {RecordKind::Rejected, 0};
}

double HistoryStack::lambda_min() const
{
    return std::max(0.0, adaptsafe::lambda_min(info_));
}

Mat HistoryStack::recomputed_info() const
{
    Mat sum = Mat::Zero(p_, p_);
    for (const auto& s : slots_) sum += s.phi.transpose() * s.phi;
    return sum;
}

Vec HistoryStack::recomputed_moment() const
{
    Vec sum = Vec::Zero(p_);
    for (const auto& s : slots_) sum += s.phi.transpose() * s.y;
    return sum;
}

void write_stack_csv(std::ostream& os, std::span<const Sample> slots, Eigen::Index target_dim,
                     Eigen::Index param_dim)
{
    os << "t,slot";
    for (Eigen::Index i = 0; i < target_dim; ++i) os << ",y_" << i + 1;
    for (Eigen::Index i = 0; i < target_dim; ++i)
        for (Eigen::Index j = 0; j < param_dim; ++j) os << ",phi_" << i + 1 << "_" << j + 1;
    os << '\n';
    for (std::size_t k = 0; k < slots.size(); ++k) {
        os << format_number(slots[k].t) << ',' << k;
        for (Eigen::Index i = 0; i < slots[k].y.size(); ++i) os << ',' << format_number(slots[k].y(i));
        for (Eigen::Index i = 0; i < slots[k].phi.rows(); ++i)
            for (Eigen::Index j = 0; j < slots[k].phi.cols(); ++j)
                os << ',' << format_number(slots[k].phi(i, j));
        os << '\n';
    }
}

void write_stack_csv(std::ostream& os, const HistoryStack& stack)
{
    write_stack_csv(os, stack.slots(), stack.target_dim(), stack.param_dim());
}

FEReport excitation(const HistoryStack& stack, double threshold)
{
    FEReport report;
    report.lambda_min = stack.size() == 0 ? 0.0 : stack.lambda_min();
    report.satisfied = report.lambda_min > threshold;
    return report;
}

ExcitationMonitor::ExcitationMonitor(double threshold) : threshold_(threshold)
{
    if (!(threshold > 0.0)) throw std::invalid_argument("ExcitationMonitor: threshold must be > 0");
}

FEReport ExcitationMonitor::update(const HistoryStack& stack, double t)
{
    FEReport report = excitation(stack, threshold_);
    if (report.satisfied && !first_) first_ = t;
    report.first_satisfied_at = first_;
    return report;
}

void Prior::validate() const
{
    const auto p = theta_bar0.size();
    if (p == 0 || sigma0.rows() != p || sigma0.cols() != p)
        throw std::invalid_argument("Prior: sigma0 must be p x p with p = dim(theta_bar0) > 0");
    if (!theta_bar0.allFinite() || !sigma0.allFinite())
        throw std::invalid_argument("Prior: non-finite entries");
    const double scale = std::max(1.0, sigma0.cwiseAbs().maxCoeff());
    if ((sigma0 - sigma0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("Prior: sigma0 must be symmetric");
    if (adaptsafe::lambda_min(sigma0) <= 0.0)
        throw std::invalid_argument("Prior: sigma0 must be positive definite");
}

Mat Prior::sigma0_inv() const
{
    Mat inv = sigma0.llt().solve(Mat::Identity(sigma0.rows(), sigma0.cols()));
    symmetrize(inv);
    return inv;
}

EstimatorState EstimatorState::initial(const Prior& prior)
{
    prior.validate();
    EstimatorState s;
    s.theta_hat = prior.theta_bar0;
    s.gamma = prior.sigma0;
    s.info = prior.sigma0_inv();
    s.accum = s.info * prior.theta_bar0;
    s.t = 0.0;
    return s;
}

namespace {

struct OdeRate {
    Vec theta_dot;
    Mat gamma_dot;
};

// Update laws with R = sum phi^T phi and m = sum phi^T y held fixed:
//   theta_dot = gamma (m - R theta),  gamma_dot = -gamma R gamma.
OdeRate ode_rate(const Vec& theta, const Mat& gamma, const Mat& info_rate, const Vec& moment)
{
    return {gamma * (moment - info_rate * theta), -gamma * info_rate * gamma};
}

} // namespace

EstimatorState propagate(const EstimatorState& state, const HistoryStack& stack, double dt,
                         PropagationMode mode)
{
    if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
    const auto p = state.theta_hat.size();
    if (stack.param_dim() != p) throw std::invalid_argument("propagate: stack/state dimension mismatch");

    const Mat& rate = stack.info_matrix();
    const Vec& moment = stack.target_moment();

    EstimatorState next = state;
    next.t = state.t + dt;
    // The stack is constant across the step, so the information-form right-hand
    // sides are constant and every RK4 stage coincides: the update is exact.
    next.info = state.info + dt * rate;
    symmetrize(next.info);
    next.accum = state.accum + dt * moment;

    if (mode == PropagationMode::Information) {
        Eigen::LLT<Mat> llt(next.info);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("propagate: information matrix lost positive definiteness");
        next.gamma = llt.solve(Mat::Identity(p, p));
        symmetrize(next.gamma);
        next.theta_hat = llt.solve(next.accum);
        return next;
    }

    const OdeRate k1 = ode_rate(state.theta_hat, state.gamma, rate, moment);
    const OdeRate k2 = ode_rate(state.theta_hat + 0.5 * dt * k1.theta_dot,
                                state.gamma + 0.5 * dt * k1.gamma_dot, rate, moment);
    const OdeRate k3 = ode_rate(state.theta_hat + 0.5 * dt * k2.theta_dot,
                                state.gamma + 0.5 * dt * k2.gamma_dot, rate, moment);
    const OdeRate k4 = ode_rate(state.theta_hat + dt * k3.theta_dot,
                                state.gamma + dt * k3.gamma_dot, rate, moment);
    next.theta_hat = state.theta_hat +
                     (dt / 6.0) * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
    next.gamma = state.gamma +
                 (dt / 6.0) * (k1.gamma_dot + 2.0 * k2.gamma_dot + 2.0 * k3.gamma_dot + k4.gamma_dot);
    symmetrize(next.gamma);

    if (!next.gamma.allFinite() || adaptsafe::lambda_min(next.gamma) <= 0.0) {
        throw std::runtime_error(
            "propagate: gamma lost positive definiteness (step too coarse for ODE mode?)");
    }
    return next;
}

ClosedFormEstimate solve_closed_form(const Prior& prior, const Mat& info_integral, const Vec& accum)
{
    const auto p = prior.dim();
    if (info_integral.rows() != p || info_integral.cols() != p || accum.size() != p)
        throw std::invalid_argument("solve_closed_form: dimension mismatch");
    Mat total = prior.sigma0_inv() + info_integral;
    symmetrize(total);
    Eigen::LLT<Mat> llt(total);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_closed_form: singular information matrix");
    ClosedFormEstimate out;
    out.gamma = llt.solve(Mat::Identity(p, p));
    symmetrize(out.gamma);
    out.theta_hat = out.gamma * accum;
    return out;
}

ErrorTransform error_transform(const EstimatorState& state, const Prior& prior, const Vec& theta_true)
{
    ErrorTransform out;
    out.predicted = state.gamma * (prior.sigma0_inv() * (theta_true - prior.theta_bar0));
    out.actual = theta_true - state.theta_hat;
    return out;
}

} // namespace adaptsafe
