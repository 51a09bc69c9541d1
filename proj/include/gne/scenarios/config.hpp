#pragma once

#include "gne/dynamics.hpp"
#include "gne/graph.hpp"
#include "gne/scenarios/document.hpp"
#include "gne/sim.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace gne::config {

/// Edge list with one-based node labels as written in config files.
struct GraphConfig {
  Index nodes = 0;
  std::vector<Digraph<double>::Edge> edges;  // zero-based after parsing

  Digraph<double> build() const { return Digraph<double>::from_edges(nodes, edges); }
  bool operator==(const GraphConfig& o) const;
};

/// Planar formation around a landmark:
///   J_i = ||y_i - Q_i||^2 + beta sum_j l_ij (y_i - h_i)^T (y_j - h_j),
///   coupled constraint (L x I_2)(y - h) = 0, boxes [lower, upper]^2.
struct FormationGame {
  double beta = 5.0;
  Matrix<double> targets;  // N x 2, rows Q_i
  Matrix<double> offsets;  // N x 2, rows h_i
  double box_lower = -10.0;
  double box_upper = 10.0;

  bool operator==(const FormationGame& o) const;
};

/// Energy market of generators:
///   J_i = fixed_i + linear_i y_i + quadratic_i y_i^2 - (price_intercept - price_slope sigma) y_i,
///   sigma = sum_i y_i,  sum_i y_i = sum_i demand_i,  y_i in [lower_i, upper_i].
struct DerGame {
  Vector<double> fixed_cost;
  Vector<double> linear_cost;
  Vector<double> quadratic_cost;
  Vector<double> demand;
  Vector<double> lower;
  Vector<double> upper;
  double price_intercept = 50.0;
  double price_slope = 0.1;

  bool operator==(const DerGame& o) const;
};

/// Turbine-governor-generator data, one entry per agent.
struct GeneratorParams {
  Vector<double> turbine_time;    // T_m
  Vector<double> governor_time;   // T_e
  Vector<double> turbine_gain;    // K_m
  Vector<double> governor_gain;   // K_e
  Vector<double> damping;         // D
  Vector<double> inertia;         // H
  Vector<double> regulation;      // R
  double base_speed = 1.0;        // w_0

  bool operator==(const GeneratorParams& o) const;
};

enum class PlantKind { integrator_chain, generator };

struct DynamicsConfig {
  Index order = 2;
  std::vector<Vector<double>> gains;  // order 2: {k_i}; order r > 2: K_i
  PlantKind plant = PlantKind::integrator_chain;
  GeneratorParams generator;          // used when plant == generator

  std::vector<AgentDynamicsSpec<double>> build() const;
  bool operator==(const DynamicsConfig& o) const;
};

struct InitConfig {
  Matrix<double> outputs;  // N x n, initial C x_i(0)
  Matrix<double> z;        // N x l, empty for zero

  bool operator==(const InitConfig& o) const;
};

struct OutputConfig {
  std::string trajectory = "trajectory.csv";
  std::string report = "report";

  bool operator==(const OutputConfig&) const = default;
};

struct AnalysisConfig {
  long monotonicity_samples = 2000;
  std::uint64_t seed = 1;

  bool operator==(const AnalysisConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  GraphConfig graph;
  std::variant<FormationGame, DerGame> game;
  DynamicsConfig dynamics;
  RuleParams<double> rule;
  IntegratorConfig<double> integrator;
  InitConfig init;
  OutputConfig outputs;
  AnalysisConfig analysis;

  Index players() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Reads every section; errors carry "<file>:<line>:".
ScenarioConfig from_document(const Document& doc);
Document to_document(const ScenarioConfig& cfg);

ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(std::string_view text, std::string source = "<config>");
std::string serialize_scenario(const ScenarioConfig& cfg);

/// h_i = radius (cos(2 pi (i-1) / N), sin(2 pi (i-1) / N)).
Matrix<double> circle_offsets(Index players, double radius);

}  // namespace gne::config
