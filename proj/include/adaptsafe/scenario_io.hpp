#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "adaptsafe/format.hpp"
#include "adaptsafe/simulation.hpp"

namespace adaptsafe {

/// Parses a scenario from JSON. Every key is optional and falls back to the
/// defaults; unknown keys and malformed values throw std::invalid_argument.
ScenarioConfig scenario_from_json(std::string_view text);
std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string metrics_to_json(const RunLog& log);

/**
 * Writes trajectory.csv, params.csv, sets.csv, filter.csv, stack.csv and
 * metrics.json into dir (created if missing).
 *
 * Column layouts, for p parameters and k obstacles:
 *   trajectory.csv  t,q_1,q_2,qdot_1,qdot_2,qd_1,qd_2,u_1,u_2,k0_1,k0_2
 *   params.csv      t,theta_hat_1..p,gamma_11..gamma_pp,lambda_min,fe_satisfied,contains_truth
 *   sets.csv        t,center_1..p,generator_11..pp,mean_1..p,cov_11..pp
 *   filter.csv      t,mode,h_1..k,slack_1..k,du_norm,active_set,feasible
 *   stack.csv       t,slot,y_1..y_n,phi_11..phi_np
 *
 * Matrices are flattened row-major; active_set is a ';'-separated list of
 * 1-based row indices. Throws std::runtime_error naming the path on I/O failure.
 */
void export_run(const RunLog& log, const std::filesystem::path& dir);

/// Writes comparison.csv (one row of metrics per run) into dir.
void export_comparison(const ComparisonReport& report, const std::filesystem::path& dir);

} // namespace adaptsafe
