#pragma once

#include "gne/scenarios/config.hpp"
#include "gne/scenarios/generator.hpp"

#include <optional>
#include <string_view>

namespace gne::scenarios {

/// Five planar double-integrator agents forming a pentagon around a landmark.
config::ScenarioConfig formation();
/// Six turbine-generator units in a demand-response market (third-order rule).
config::ScenarioConfig der();
/// The same market with each unit replaced by a pure triple integrator.
config::ScenarioConfig der_chain();
/// formation | der | der_chain
std::optional<config::ScenarioConfig> builtin(std::string_view name);

/// Formation game with the embedding aggregator phi_i(y_i) = e_i (x) y_i, so
/// sigma(y) = y and each agent estimates the whole profile.
GameSpec<double> formation_game(const config::FormationGame& game, const Digraph<double>& g);
GameSpec<double> der_game(const config::DerGame& game);

/// Everything needed to integrate, check and analyse one scenario.
struct Model {
  config::ScenarioConfig config;
  Digraph<double> graph;
  GameSpec<double> game;
  std::vector<AgentDynamicsSpec<double>> dynamics;
  StateLayout layout;
  SimState<double> initial;
  std::optional<GeneratorPlant> generator;  // set for the generator plant

  Vector<double> field(const SimState<double>& s) const;
  /// Closed-loop equilibrium that corresponds to the KKT pair (y*, mu*).
  SimState<double> equilibrium(const Vector<double>& y_star, const Vector<double>& mu_star) const;
  KktReport<double> residuals(const SimState<double>& s) const { return kkt_report(game, s); }
  /// Damping gains k_i of a double-integrator model.
  std::vector<double> damping_gains() const;
  Trajectory<double> simulate() const { return simulate(config.integrator); }
  Trajectory<double> simulate(const IntegratorConfig<double>& cfg) const;
};

Model build_model(const config::ScenarioConfig& cfg);

/// Sum of A_i y_i = sum d_i admits a solution inside the boxes (projected
/// gradient on ||A y - d||^2 over Omega).
bool coupled_set_nonempty(const GameSpec<double>& spec, double tol = 1e-8);

}  // namespace gne::scenarios
