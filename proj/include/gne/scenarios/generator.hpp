#pragma once

#include "gne/dynamics.hpp"
#include "gne/scenarios/config.hpp"

namespace gne::scenarios {

/// Turbine-generator units driven by the third-order rule through feedback
/// linearization. Agent block: (P, X_e, w, u). The governor input u is
/// extended by one integrator so that (P, P', P'') is an exact triple
/// integrator whose input is the rule's chain input.
///   P'   = -P / T_m + K_m / T_m X_e
///   X_e' = -K_e / (T_e R w_0) w - X_e / T_e + u / T_e
///   w'   = -D / (2 H) w + w_0 / (2 H) (P - d)
class GeneratorPlant {
 public:
  GeneratorPlant(config::GeneratorParams params, Vector<double> demand);

  static constexpr Index width = 4;
  Index size() const noexcept { return demand_.size(); }

  StateLayout layout(const GameSpec<double>& spec) const;
  /// (P, P', P'') of agent i.
  Vector<double> chain_coordinates(Index i, const Eigen::Ref<const Vector<double>>& block) const;
  /// Steady-state block with power `power`.
  Vector<double> steady_block(Index i, double power) const;
  /// Rest state at P(0) = power: X_e = P / K_m, w = 0, u = X_e.
  Vector<double> initial_block(Index i, double power) const;

  Vector<double> rhs(const Digraph<double>& g, const GameSpec<double>& spec,
                     const std::vector<AgentDynamicsSpec<double>>& dyn, const RuleParams<double>& p,
                     const SimState<double>& s) const;

 private:
  config::GeneratorParams params_;
  Vector<double> demand_;
};

}  // namespace gne::scenarios
