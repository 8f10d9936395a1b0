#include "adaptsafe/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace adaptsafe {

const char* to_string(ScenarioMode mode)
{
    switch (mode) {
    case ScenarioMode::AclfOnly: return "AclfOnly";
    case ScenarioMode::RobustFixed: return "RobustFixed";
    case ScenarioMode::ZonotopeAdaptive: return "ZonotopeAdaptive";
    case ScenarioMode::GaussianAdaptive: return "GaussianAdaptive";
    }
    return "?";
}

ScenarioMode scenario_mode_from_string(std::string_view name)
{
    for (auto m : {ScenarioMode::AclfOnly, ScenarioMode::RobustFixed, ScenarioMode::ZonotopeAdaptive,
                   ScenarioMode::GaussianAdaptive}) {
        if (name == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown scenario mode '" + std::string(name) + "'");
}

FilterMode filter_mode_for(ScenarioMode mode)
{
    switch (mode) {
    case ScenarioMode::AclfOnly: return FilterMode::Off;
    case ScenarioMode::RobustFixed: return FilterMode::RobustFixed;
    case ScenarioMode::ZonotopeAdaptive: return FilterMode::Robust;
    case ScenarioMode::GaussianAdaptive: return FilterMode::Gaussian;
    }
    return FilterMode::Off;
}

bool estimates_online(ScenarioMode mode) { return mode != ScenarioMode::RobustFixed; }

Prior ScenarioConfig::default_prior()
{
    Prior p;
    p.theta_bar0 = (Vec(2) << -0.1, 0.1).finished();
    p.sigma0 = 2.0 * Mat::Identity(2, 2);
    return p;
}

void ScenarioConfig::validate() const
{
    if (!(dt > 0.0)) throw std::invalid_argument("ScenarioConfig: dt must be > 0");
    if (!(duration >= 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("ScenarioConfig: duration must be finite and >= 0");
    if (log_stride < 1) throw std::invalid_argument("ScenarioConfig: log_stride must be >= 1");
    if (control_divisor < 1) throw std::invalid_argument("ScenarioConfig: control_divisor must be >= 1");
    if (estimator.record_stride < 1) throw std::invalid_argument("ScenarioConfig: record_stride must be >= 1");
    if (stack_capacity < 1) throw std::invalid_argument("ScenarioConfig: stack_capacity must be >= 1");
    if (prior.dim() != plant::kParamDim)
        throw std::invalid_argument("ScenarioConfig: prior must have dimension 2");
    prior.validate();
    plant.validate();
    filter.validate();
    if (initial_state && !initial_state->allFinite())
        throw std::invalid_argument("ScenarioConfig: non-finite initial_state");
}

std::size_t ScenarioConfig::step_count() const
{
    return static_cast<std::size_t>(std::llround(duration / dt));
}

plant::PlantState ScenarioConfig::start_state() const
{
    if (initial_state) return plant::PlantState::from(*initial_state);
    const auto ref = plant::desired_trajectory(0.0);
    return {ref.q, ref.qdot};
}

namespace {

ScenarioConfig checked(ScenarioConfig cfg)
{
    cfg.validate();
    cfg.filter.mode = filter_mode_for(cfg.mode);
    return cfg;
}

} // namespace

Simulator::Simulator(ScenarioConfig cfg)
    : cfg_(checked(std::move(cfg))),
      steps_(cfg_.step_count()),
      x_(cfg_.start_state()),
      est_(EstimatorState::initial(cfg_.prior)),
      stack_(cfg_.stack_capacity, plant::kStateDim, plant::kParamDim, cfg_.estimator.record_margin),
      fe_(cfg_.estimator.fe_threshold),
      rng_(cfg_.seed),
      noise_(cfg_.noise_on ? cfg_.plant.noise_cov : Eigen::Matrix4d::Zero())
{
    log_.mode = cfg_.mode;
    log_.seed = cfg_.seed;
    log_.param_dim = plant::kParamDim;
    log_.obstacle_count = cfg_.plant.obstacles.size();
    log_.metrics.min_h = std::numeric_limits<double>::infinity();
}

Simulator::Control Simulator::compute_control() const
{
    Control c;
    const plant::Vec2 theta_hat = est_.theta_hat;
    c.k0 = plant::nominal_controller(x_, time(), theta_hat, cfg_.plant);

    const auto& obstacles = cfg_.plant.obstacles;
    c.barriers.reserve(obstacles.size());
    for (const auto& o : obstacles) c.barriers.push_back(plant::barrier_eval(x_, o, cfg_.plant.mu));

    switch (cfg_.filter.mode) {
    case FilterMode::Off:
        break;
    case FilterMode::RobustFixed: {
        const Zonotope prior_set{cfg_.prior.theta_bar0, cfg_.prior.sigma0};
        for (const auto& be : c.barriers) c.rows.push_back(racbf_constraint(be, prior_set, cfg_.filter));
        break;
    }
    case FilterMode::Robust: {
        const Zonotope set = estimator_zonotope(est_);
        for (const auto& be : c.barriers) c.rows.push_back(racbf_constraint(be, set, cfg_.filter));
        break;
    }
    case FilterMode::Gaussian: {
        const GaussianBelief belief = gaussian_posterior(cfg_.prior, est_);
        for (const auto& be : c.barriers)
            c.rows.push_back(gracbf_constraint(be, belief, cfg_.prior, est_, cfg_.filter));
        break;
    }
    }

    c.result = solve_filter_qp(c.k0, c.rows);
    c.u = c.result.u;
    return c;
}

void Simulator::observe(const Control& control, bool write_log)
{
    const double t = time();
    const auto ref = plant::desired_trajectory(t);

    double h_min = std::numeric_limits<double>::infinity();
    std::vector<double> h_values;
    h_values.reserve(cfg_.plant.obstacles.size());
    for (const auto& o : cfg_.plant.obstacles) {
        h_values.push_back(plant::barrier_value(x_, o, cfg_.plant.mu));
        h_min = std::min(h_min, h_values.back());
    }
    log_.metrics.min_h = std::min(log_.metrics.min_h, h_min);
    sq_tracking_sum_ += (x_.q - ref.q).squaredNorm();
    ++observations_;

    const bool contains = estimator_contains(est_, cfg_.plant.theta_true);
    if (!contains) ++log_.metrics.containment_violations;

    if (!write_log) return;
    LogRecord rec;
    rec.t = t;
    rec.x = x_.stacked();
    rec.q_desired = ref.q;
    rec.u = control.u;
    rec.k0 = control.k0;
    rec.theta_hat = est_.theta_hat;
    rec.gamma = est_.gamma;
    rec.covariance = gaussian_posterior(cfg_.prior, est_).covariance;
    rec.h = std::move(h_values);
    for (const auto& row : control.rows) rec.slack.push_back(row.a.dot(control.u) - row.b);
    rec.active_set = control.result.active_set;
    rec.feasible = control.result.feasible;
    const FEReport fe = excitation(stack_, fe_.threshold());
    rec.lambda_min = fe.lambda_min;
    rec.fe_satisfied = fe_.first_satisfied_at().has_value();
    rec.contains_truth = contains;
    log_.records.push_back(std::move(rec));
}

void Simulator::step()
{
    if (finished()) return;
    const double t = time();

    if (!held_ || step_index_ % static_cast<std::size_t>(cfg_.control_divisor) == 0) {
        held_ = compute_control();
        if (!held_->result.feasible) {
            ++log_.metrics.infeasible_steps;
            log_.metrics.safety_certificate = false;
        }
        if (estimates_online(cfg_.mode) &&
            control_updates_ % static_cast<std::size_t>(cfg_.estimator.record_stride) == 0) {
            const Sample s = plant::measurement(x_, held_->u, cfg_.plant.theta_true, t,
                                                noise_.silent() ? nullptr : &noise_, &rng_);
            stack_.record(s);
        }
        ++control_updates_;
    }
    fe_.update(stack_, t);
    observe(*held_, step_index_ % static_cast<std::size_t>(cfg_.log_stride) == 0);

    x_ = plant::rk4_step(x_, held_->u, cfg_.plant.theta_true, cfg_.dt);
    if (!x_.q.allFinite() || !x_.qdot.allFinite())
        throw std::runtime_error("simulation diverged: non-finite plant state at t = " + std::to_string(t));
    if (estimates_online(cfg_.mode)) est_ = propagate(est_, stack_, cfg_.dt, cfg_.estimator.propagation);
    ++step_index_;
}

RunLog Simulator::finish()
{
    while (!finished()) step();
    // Terminal observation; the input is computed for logging only.
    const Control terminal = compute_control();
    fe_.update(stack_, time());
    observe(terminal, steps_ % static_cast<std::size_t>(cfg_.log_stride) == 0);

    Metrics& m = log_.metrics;
    m.rms_tracking_error = std::sqrt(sq_tracking_sum_ / static_cast<double>(observations_));
    m.final_param_error = (est_.theta_hat - Vec(cfg_.plant.theta_true)).norm();
    m.time_to_fe = fe_.first_satisfied_at();
    log_.final_stack = stack_.slots();
    return log_;
}

RunLog run(const ScenarioConfig& cfg)
{
    Simulator sim(cfg);
    return sim.finish();
}

ComparisonReport compare(std::span<const ScenarioConfig> configs)
{
    if (configs.size() < 2) throw std::invalid_argument("compare: need at least two configs");
    const auto& ref = configs.front().plant.obstacles;
    for (const auto& c : configs) {
        bool same = c.plant.obstacles.size() == ref.size();
        for (std::size_t i = 0; same && i < ref.size(); ++i) {
            same = c.plant.obstacles[i].center == ref[i].center &&
                   c.plant.obstacles[i].radius == ref[i].radius;
        }
        if (!same) throw std::invalid_argument("compare: configs must share obstacle geometry");
    }

    ComparisonReport report;
    for (const auto& c : configs) {
        const RunLog log = run(c);
        report.rows.push_back({std::string(to_string(c.mode)) + "/seed" + std::to_string(c.seed), c.mode,
                               log.metrics});
    }

    std::optional<double> robust_rms, adaptive_rms;
    for (const auto& row : report.rows) {
        switch (row.mode) {
        case ScenarioMode::AclfOnly:
            report.unfiltered_violates = report.unfiltered_violates.value_or(true) && row.metrics.min_h < 0.0;
            break;
        case ScenarioMode::RobustFixed:
            robust_rms = robust_rms ? std::max(*robust_rms, row.metrics.rms_tracking_error)
                                    : row.metrics.rms_tracking_error;
            [[fallthrough]];
        case ScenarioMode::ZonotopeAdaptive:
        case ScenarioMode::GaussianAdaptive:
            report.filtered_safe =
                report.filtered_safe.value_or(true) && row.metrics.min_h >= -kSafetyTolerance;
            if (row.mode == ScenarioMode::ZonotopeAdaptive) {
                adaptive_rms = adaptive_rms ? std::max(*adaptive_rms, row.metrics.rms_tracking_error)
                                            : row.metrics.rms_tracking_error;
            }
            break;
        }
    }
    if (robust_rms && adaptive_rms) report.adaptation_beats_robust = *adaptive_rms < *robust_rms;
    return report;
}

PlantDiagnostics plant_diagnostics(const ScenarioConfig& cfg, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-5.0, 5.0), vel(-2.0, 2.0), angle(0.0, 2.0 * std::numbers::pi);
    std::vector<Vec> states;
    states.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i)
        states.push_back((Vec(4) << pos(rng), pos(rng), vel(rng), vel(rng)).finished());

    auto as_plant = [](const Vec& x) { return plant::PlantState::from(x); };
    PlantDiagnostics out;
    out.matched = matched_check(
        states, [&](const Vec& x) -> Mat { return plant::uncertainty_matrix(as_plant(x)); },
        [&](const Vec& x) -> Mat { return plant::input_matrix(as_plant(x)); },
        [&](const Vec& x) -> Mat { return plant::regressor(as_plant(x)); });

    for (const auto& obs : cfg.plant.obstacles) {
        // The criterion is only required on the safe set, so interior states are skipped.
        std::vector<Vec> probe;
        for (const auto& x : states)
            if (plant::barrier_value(as_plant(x), obs, cfg.plant.mu) >= 0.0) probe.push_back(x);
        for (std::size_t i = 0; i < samples; ++i) {
            const double a = angle(rng);
            const plant::Vec2 q = obs.center + obs.radius * plant::Vec2(std::cos(a), std::sin(a));
            probe.push_back((Vec(4) << q, 0.0, 0.0).finished());
        }
        out.criterion.push_back(cbf_criterion_check(
            probe, [&](const Vec& x) { return plant::barrier_eval(as_plant(x), obs, cfg.plant.mu); }, cfg.filter));
    }
    return out;
}

} // namespace adaptsafe
