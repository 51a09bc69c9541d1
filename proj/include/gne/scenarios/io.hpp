#pragma once

#include "gne/conditions.hpp"
#include "gne/oracle.hpp"
#include "gne/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>

namespace gne::io {

/// Header: time, y_i_j, mu_i_j, eta_i_j (one-based), kkt_stationarity,
/// kkt_feasibility, mu_consensus, eta_tracking.
std::string csv_header(const GameSpec<double>& spec);
void write_trajectory_csv(std::ostream& os, const GameSpec<double>& spec, const Trajectory<double>& traj);
void write_trajectory_csv(const std::filesystem::path& path, const GameSpec<double>& spec,
                          const Trajectory<double>& traj);

nlohmann::ordered_json to_json(const KktReport<double>& rep);
nlohmann::ordered_json to_json(const ConditionReport<double>& rep);
nlohmann::ordered_json to_json(const MonotonicityEstimate<double>& est);
nlohmann::ordered_json to_json(const SpectralSummary<double>& sum);
nlohmann::ordered_json to_json(const OracleResult<double>& res);

std::string to_text(const KktReport<double>& rep);
std::string to_text(const ConditionReport<double>& rep);
std::string to_text(const MonotonicityEstimate<double>& est);
std::string to_text(const SpectralSummary<double>& sum);
std::string to_text(const OracleResult<double>& res);

void write_file(const std::filesystem::path& path, const std::string& content);
/// Writes `<stem>.txt` and `<stem>.json`.
void write_report(const std::filesystem::path& stem, const std::string& text, const nlohmann::ordered_json& json);

}  // namespace gne::io
