#pragma once

#include "gne/dynamics.hpp"

#include <algorithm>

namespace gne {

/// Equilibrium residuals of a closed-loop state.
///
/// stationarity  ||y - P_Omega(y - F(y) - A^T mu_bar)||, mu_bar the mean multiplier
/// feasibility   ||A y - d||
/// mu_consensus  max_i ||mu_i - mu_bar||
/// eta_tracking  max_i ||eta_i - sigma(y)||
/// stationarity_local uses each agent's own mu_i instead of mu_bar (max over agents).
template <typename Scalar = double>
struct KktReport {
  Scalar stationarity{};
  Scalar feasibility{};
  Scalar mu_consensus{};
  Scalar eta_tracking{};
  Scalar stationarity_local{};

  /// Largest of the four primary residuals.
  Scalar max() const { return std::max({stationarity, feasibility, mu_consensus, eta_tracking}); }
};

/// Residuals at a stacked profile y with one common multiplier (no estimator or multiplier spread).
template <typename Scalar>
KktReport<Scalar> kkt_report(const GameSpec<Scalar>& spec, const Vector<Scalar>& y, const Vector<Scalar>& mu) {
  KktReport<Scalar> rep;
  Vector<Scalar> step = pseudo_gradient(spec, y);
  if (spec.constraint_dim > 0) step.noalias() += coupling_matrix(spec).transpose() * mu;
  rep.stationarity = (y - project(spec, Vector<Scalar>(y - step))).norm();
  rep.stationarity_local = rep.stationarity;
  rep.feasibility = spec.constraint_dim > 0 ? constraint_residual(spec, y).norm() : Scalar(0);
  return rep;
}

template <typename Scalar>
KktReport<Scalar> kkt_report(const GameSpec<Scalar>& spec, const SimState<Scalar>& s) {
  const Index n = spec.strategy_dim;
  const Vector<Scalar> y = outputs(spec, s);
  const Vector<Scalar> sigma = aggregate(spec, y);
  const Vector<Scalar> f = pseudo_gradient(spec, y);
  const Vector<Scalar> mu_bar = s.mean_mu();

  KktReport<Scalar> rep;
  Vector<Scalar> common(y.size());
  for (Index i = 0; i < spec.n_players; ++i) {
    Vector<Scalar> gi = f.segment(i * n, n);
    Vector<Scalar> local = gi;
    if (spec.constraint_dim > 0) {
      const auto at = spec.block(i).a_mat.transpose();
      gi.noalias() += at * mu_bar;
      local.noalias() += at * s.mu(i);
      rep.mu_consensus = std::max(rep.mu_consensus, (s.mu(i) - mu_bar).norm());
    }
    const Vector<Scalar> yi = y.segment(i * n, n);
    common.segment(i * n, n) = yi - project(spec.box(i), yi - gi);
    rep.stationarity_local =
        std::max(rep.stationarity_local, (yi - project(spec.box(i), yi - local)).norm());
    if (spec.aggregate_dim > 0) {
      rep.eta_tracking = std::max(rep.eta_tracking, (s.eta(i) - sigma).norm());
    }
  }
  rep.stationarity = common.norm();
  rep.feasibility = spec.constraint_dim > 0 ? constraint_residual(spec, y).norm() : Scalar(0);
  return rep;
}

}  // namespace gne
