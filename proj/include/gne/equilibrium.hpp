#pragma once

#include "gne/dynamics.hpp"

#include <Eigen/QR>

namespace gne {

/// Closed-loop equilibrium induced by a KKT pair (y*, mu*) for integrator
/// chains of length `order` (2 for the double-integrator rule):
///   x_i1 = y_i* - grad_i J_i(y*, sigma*) - A_i^T mu*, higher chain levels 0,
///   mu_i = mu*,  z_i = A_i y_i* - d_i,  eta_i = sigma(y*),
///   w solving (L x I) w = N phi(y*) - eta (least squares on the range of L).
template <typename Scalar>
SimState<Scalar> equilibrium_state(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec, Index order,
                                   const Vector<Scalar>& y_star, const Vector<Scalar>& mu_star) {
  using Block = StateLayout::Block;
  spec.validate();
  if (g.size() != spec.n_players) throw ConfigError("equilibrium: graph and game disagree on player count");
  if (mu_star.size() != spec.constraint_dim) throw ConfigError("equilibrium: multiplier has wrong size");

  const Index n = spec.strategy_dim;
  SimState<Scalar> s(chain_layout(spec, order));
  const Vector<Scalar> f = pseudo_gradient(spec, y_star);
  const Vector<Scalar> sigma = aggregate(spec, y_star);

  Matrix<Scalar> rhs(spec.aggregate_dim, spec.n_players);
  for (Index i = 0; i < spec.n_players; ++i) {
    const Vector<Scalar> yi = y_star.segment(i * n, n);
    Vector<Scalar> x1 = yi - f.segment(i * n, n);
    if (spec.constraint_dim > 0) {
      const auto& blk = spec.block(i);
      x1.noalias() -= blk.a_mat.transpose() * mu_star;
      s.mu(i) = mu_star;
      s.z(i) = blk.a_mat * yi - blk.d_vec;
    }
    s.agent(i).head(n) = x1;
    if (spec.aggregate_dim > 0) {
      s.eta(i) = sigma;
      rhs.col(i) = static_cast<Scalar>(spec.n_players) * spec.phi(i, yi) - sigma;
    }
  }
  if (spec.aggregate_dim > 0) {
    // W L^T = R  <=>  L W^T = R^T
    const Matrix<Scalar> wt = g.laplacian().completeOrthogonalDecomposition().solve(Matrix<Scalar>(rhs.transpose()));
    s.view(Block::w) = wt.transpose();
  }
  return s;
}

}  // namespace gne
