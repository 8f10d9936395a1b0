#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptsafe/plant.hpp"
#include "adaptsafe/regression.hpp"
#include "adaptsafe/safety_filter.hpp"
#include "adaptsafe/uncertainty.hpp"

namespace adaptsafe {

/// The four controllers compared in the wind case study.
enum class ScenarioMode {
    AclfOnly,          // adaptive tracking law, no safety filter
    RobustFixed,       // filter against the fixed prior zonotope, no adaptation
    ZonotopeAdaptive,  // filter against Z(theta_hat(t), gamma(t))
    GaussianAdaptive,  // filter with the c_delta sigma confidence margin
};

const char* to_string(ScenarioMode mode);
ScenarioMode scenario_mode_from_string(std::string_view name);
FilterMode filter_mode_for(ScenarioMode mode);
/// Every mode except RobustFixed runs the estimator.
bool estimates_online(ScenarioMode mode);

struct EstimatorConfig {
    PropagationMode propagation = PropagationMode::Information;
    double fe_threshold = kDefaultFeThreshold;
    double record_margin = 0.01;
    int record_stride = 1;  // control steps between offered samples
};

struct ScenarioConfig {
    ScenarioMode mode = ScenarioMode::ZonotopeAdaptive;
    double duration = 20.0;
    double dt = 1e-3;
    int log_stride = 10;
    int control_divisor = 1;  // integration steps per control update
    std::uint64_t seed = 1;
    bool noise_on = false;
    plant::PlantConfig plant = plant::PlantConfig::defaults();
    Prior prior = default_prior();
    FilterConfig filter;
    std::size_t stack_capacity = 20;
    EstimatorConfig estimator;
    std::optional<plant::Vec4> initial_state;  // defaults to (q_d(0), qdot_d(0))

    void validate() const;
    std::size_t step_count() const;
    plant::PlantState start_state() const;

    static Prior default_prior();
};

struct LogRecord {
    double t = 0.0;
    plant::Vec4 x = plant::Vec4::Zero();
    plant::Vec2 q_desired = plant::Vec2::Zero();
    plant::Vec2 u = plant::Vec2::Zero();
    plant::Vec2 k0 = plant::Vec2::Zero();
    Vec theta_hat;
    Mat gamma;
    Mat covariance;
    std::vector<double> h;
    std::vector<double> slack;  // a . u - b per constraint row
    std::vector<int> active_set;
    bool feasible = true;
    double lambda_min = 0.0;
    bool fe_satisfied = false;
    bool contains_truth = true;
};

struct Metrics {
    double min_h = 0.0;
    double rms_tracking_error = 0.0;
    double final_param_error = 0.0;
    std::optional<double> time_to_fe;
    std::size_t containment_violations = 0;
    std::size_t infeasible_steps = 0;
    bool safety_certificate = true;  // no QP infeasibility during the run
};

struct RunLog {
    ScenarioMode mode = ScenarioMode::ZonotopeAdaptive;
    std::uint64_t seed = 0;
    Eigen::Index param_dim = plant::kParamDim;
    std::size_t obstacle_count = 0;
    std::vector<LogRecord> records;
    Metrics metrics;
    std::vector<Sample> final_stack;
};

/**
 * Closed-loop simulation of one scenario. Each step holds the filtered input
 * over dt (zero-order hold), integrates the plant with RK4, offers the
 * measurement to the history stack and advances the estimator.
 */
class Simulator {
public:
    explicit Simulator(ScenarioConfig cfg);

    /// One integration period. Throws std::runtime_error on a non-finite state.
    void step();
    bool finished() const { return step_index_ >= steps_; }
    double time() const { return static_cast<double>(step_index_) * cfg_.dt; }

    const ScenarioConfig& config() const { return cfg_; }
    const plant::PlantState& plant_state() const { return x_; }
    const EstimatorState& estimator() const { return est_; }
    const HistoryStack& stack() const { return stack_; }
    const RunLog& log() const { return log_; }

    /// Closes the run: logs the terminal state and fills the metrics.
    RunLog finish();

private:
    struct Control {
        plant::Vec2 k0;
        plant::Vec2 u;
        std::vector<BarrierEval> barriers;
        std::vector<ConstraintRow> rows;
        FilterResult result;
    };

    Control compute_control() const;
    void observe(const Control& control, bool write_log);

    ScenarioConfig cfg_;
    std::size_t steps_;
    std::size_t step_index_ = 0;
    plant::PlantState x_;
    EstimatorState est_;
    HistoryStack stack_;
    ExcitationMonitor fe_;
    std::mt19937_64 rng_;
    plant::MeasurementNoise noise_;
    std::optional<Control> held_;
    std::size_t control_updates_ = 0;
    double sq_tracking_sum_ = 0.0;
    std::size_t observations_ = 0;
    RunLog log_;
};

RunLog run(const ScenarioConfig& cfg);

struct ComparisonRow {
    std::string label;
    ScenarioMode mode;
    Metrics metrics;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    // Qualitative ordering of the case study; empty when the needed modes are absent.
    std::optional<bool> unfiltered_violates;      // AclfOnly min_h < 0
    std::optional<bool> filtered_safe;            // filtered modes min_h >= -1e-6
    std::optional<bool> adaptation_beats_robust;  // ZonotopeAdaptive rms < RobustFixed rms
};

constexpr double kSafetyTolerance = 1e-6;

/// Throws std::invalid_argument for fewer than two configs or differing obstacle geometry.
ComparisonReport compare(std::span<const ScenarioConfig> configs);

struct PlantDiagnostics {
    MatchedReport matched;
    std::vector<CriterionReport> criterion;  // one per obstacle
};

/// Matching diagnostics on random states in [-5,5]^2 x [-2,2]^2. The CBF criterion
/// is checked per obstacle on those random states lying in its safe set plus states
/// on the boundary of the obstacle disk at rest.
PlantDiagnostics plant_diagnostics(const ScenarioConfig& cfg, std::size_t samples, std::uint64_t seed);

} // namespace adaptsafe
