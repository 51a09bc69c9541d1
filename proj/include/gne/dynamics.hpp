#pragma once

#include "gne/game.hpp"
#include "gne/graph.hpp"
#include "gne/state.hpp"

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

namespace gne {

/// Integrator order and feedback gains of one agent.
///
/// Order 2 carries the scalar damping k_i of the double-integrator rule. Order
/// r > 2 carries the state-feedback row K_i = [1, k_i1, ..., k_i(r-1)] with
/// every k_ij > 1 and H_i = A_bar - B_bar K_i Hurwitz.
template <typename Scalar = double>
class AgentDynamicsSpec {
 public:
  static AgentDynamicsSpec double_integrator(Scalar k) {
    if (!(k > Scalar(0))) {
      throw ConfigError("dynamics: double-integrator gain must be positive");
    }
    Vector<Scalar> gains(2);
    gains << Scalar(1), k;
    return AgentDynamicsSpec(std::move(gains));
  }

  static AgentDynamicsSpec chain(Vector<Scalar> feedback) {
    const Index r = feedback.size();
    if (r < 3) {
      throw ConfigError("dynamics: feedback rows need at least three entries; use double_integrator for r = 2");
    }
    if (feedback(0) != Scalar(1)) {
      throw ConfigError("dynamics: leading feedback entry must be 1");
    }
    for (Index j = 1; j < r; ++j) {
      if (!(feedback(j) > Scalar(1))) {
        throw ConfigError("dynamics: feedback entries after the first must exceed 1");
      }
    }
    AgentDynamicsSpec out(std::move(feedback));
    const Matrix<Scalar> h = out.closed_loop_matrix();
    Eigen::EigenSolver<Matrix<Scalar>> solver(h, false);
    if (solver.eigenvalues().real().maxCoeff() >= Scalar(0)) {
      throw ConfigError("dynamics: closed-loop chain matrix is not Hurwitz");
    }
    return out;
  }

  /// Order-2 gains are the scalar k; higher orders are the full row K.
  static AgentDynamicsSpec from_gains(Index order, const Vector<Scalar>& gains) {
    if (order == 2) {
      if (gains.size() != 1) throw ConfigError("dynamics: order 2 expects a single gain k");
      return double_integrator(gains(0));
    }
    if (gains.size() != order) {
      throw ConfigError("dynamics: order " + std::to_string(order) + " expects " + std::to_string(order) +
                        " feedback entries");
    }
    return chain(gains);
  }

  Index order() const noexcept { return feedback_.size(); }
  /// K_i; for order 2 this is [1, k_i].
  const Vector<Scalar>& feedback() const noexcept { return feedback_; }
  /// k_i for the double-integrator rule.
  Scalar damping() const noexcept { return feedback_(1); }

  static Matrix<Scalar> shift_matrix(Index r) {
    Matrix<Scalar> a = Matrix<Scalar>::Zero(r, r);
    a.topRightCorner(r - 1, r - 1).setIdentity();
    return a;
  }
  static Vector<Scalar> input_vector(Index r) { return Vector<Scalar>::Unit(r, r - 1); }
  static Vector<Scalar> output_row(Index r) { return Vector<Scalar>::Unit(r, 0); }

  /// H_i = A_bar - B_bar K_i (companion form).
  Matrix<Scalar> closed_loop_matrix() const {
    const Index r = order();
    Matrix<Scalar> h = shift_matrix(r);
    h.row(r - 1) = -feedback_.transpose();
    return h;
  }

  bool operator==(const AgentDynamicsSpec& o) const {
    return feedback_.size() == o.feedback_.size() && feedback_ == o.feedback_;
  }

 private:
  explicit AgentDynamicsSpec(Vector<Scalar> feedback) : feedback_(std::move(feedback)) {}

  Vector<Scalar> feedback_;
};

/// Multiplier coupling gain alpha and time-scale separation epsilon.
template <typename Scalar = double>
struct RuleParams {
  Scalar alpha = Scalar(1);
  Scalar epsilon = Scalar(0.1);

  void validate() const {
    if (!(alpha > Scalar(0))) throw ConfigError("rule: alpha must be positive");
    if (!(epsilon > Scalar(0))) throw ConfigError("rule: epsilon must be positive");
  }

  bool operator==(const RuleParams&) const = default;
};

/// Layout of the closed loop for agents whose blocks are integrator chains of length `order`.
template <typename Scalar>
StateLayout chain_layout(const GameSpec<Scalar>& spec, Index order) {
  return StateLayout{spec.n_players, spec.strategy_dim, order * spec.strategy_dim, spec.constraint_dim,
                     spec.aggregate_dim};
}

namespace detail {

template <typename Scalar>
void require_compatible(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec, const StateLayout& lay,
                        Index data_size) {
  if (g.size() != spec.n_players || lay.n_agents != spec.n_players) {
    throw ConfigError("dynamics: graph, game and state disagree on the number of agents");
  }
  if (lay.output_dim != spec.strategy_dim || lay.constraint_dim != spec.constraint_dim ||
      lay.aggregate_dim != spec.aggregate_dim) {
    throw ConfigError("dynamics: state layout does not match game dimensions");
  }
  if (data_size != lay.total()) {
    throw ConfigError("dynamics: state vector size does not match its layout");
  }
}

template <typename Scalar>
void require_orders(const std::vector<AgentDynamicsSpec<Scalar>>& dyn, const GameSpec<Scalar>& spec,
                    const StateLayout& lay, bool double_integrator) {
  if (static_cast<Index>(dyn.size()) != spec.n_players) {
    throw ConfigError("dynamics: expected one dynamics spec per agent");
  }
  const Index r = dyn.front().order();
  for (const auto& d : dyn) {
    if (d.order() != r) throw ConfigError("dynamics: all agents must share one integrator order");
  }
  if (double_integrator && r != 2) throw ConfigError("dynamics: double-integrator rule needs order 2");
  if (!double_integrator && r < 3) throw ConfigError("dynamics: multi-integrator rule needs order > 2");
  if (lay.agent_width != r * spec.strategy_dim) {
    throw ConfigError("dynamics: agent block width does not match integrator order");
  }
}

}  // namespace detail

/// y = P_Omega(C x), stacked.
template <typename Scalar>
Vector<Scalar> outputs(const GameSpec<Scalar>& spec, const SimState<Scalar>& s) {
  const Index n = spec.strategy_dim;
  Vector<Scalar> y(spec.stacked_dim());
  for (Index i = 0; i < spec.n_players; ++i) {
    y.segment(i * n, n) = project(spec.box(i), s.raw_output(i));
  }
  return y;
}

/// y_i - grad_i J_i(y_i, eta_i) - A_i^T mu_i: the game-driven input of agent i,
/// computed from its own estimate eta_i.
template <typename Scalar>
Vector<Scalar> agent_drive(const GameSpec<Scalar>& spec, const SimState<Scalar>& s, Index i,
                           const Vector<Scalar>& yi) {
  const Vector<Scalar> eta_i = s.eta(i);
  Vector<Scalar> drive = yi - spec.cost_grad(i, yi, eta_i);
  if (spec.constraint_dim > 0) {
    drive.noalias() -= spec.block(i).a_mat.transpose() * s.mu(i);
  }
  return drive;
}

/// Multiplier coordination and aggregate estimation blocks, shared by every
/// agent model:
///   mu'  = -alpha (L x I) mu - z + A_i y_i - d_i
///   z'   =  alpha (L x I) mu
///   eps eta' = -eta - (L x I) eta - (L x I) w + N phi(y)
///   eps w'   =  (L x I) eta
template <typename Scalar>
void coordination_rhs(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec, const RuleParams<Scalar>& p,
                      const SimState<Scalar>& s, const Vector<Scalar>& y, SimState<Scalar>& ds) {
  using Block = StateLayout::Block;
  const Matrix<Scalar>& lap = g.laplacian();
  const Index n = spec.strategy_dim;
  const Scalar n_agents = static_cast<Scalar>(spec.n_players);

  if (spec.constraint_dim > 0) {
    const Matrix<Scalar> lap_mu = s.view(Block::mu) * lap.transpose();
    auto dmu = ds.view(Block::mu);
    dmu = -p.alpha * lap_mu - s.view(Block::z);
    for (Index i = 0; i < spec.n_players; ++i) {
      const auto& blk = spec.block(i);
      dmu.col(i).noalias() += blk.a_mat * y.segment(i * n, n);
      dmu.col(i) -= blk.d_vec;
    }
    ds.view(Block::z) = p.alpha * lap_mu;
  }

  if (spec.aggregate_dim > 0) {
    const Matrix<Scalar> lap_eta = s.view(Block::eta) * lap.transpose();
    const Matrix<Scalar> lap_w = s.view(Block::w) * lap.transpose();
    auto deta = ds.view(Block::eta);
    deta = -s.view(Block::eta) - lap_eta - lap_w;
    for (Index i = 0; i < spec.n_players; ++i) {
      deta.col(i) += n_agents * spec.phi(i, Vector<Scalar>(y.segment(i * n, n)));
    }
    deta /= p.epsilon;
    ds.view(Block::w) = lap_eta / p.epsilon;
  }
}

/// Closed-loop field of double-integrator agents:
///   x' = v,  v' = -(k x I) v - x + y - grad J(y, eta) - A^T mu,  y = P_Omega(x)
/// plus the coordination blocks.
template <typename Scalar>
Vector<Scalar> rhs_double_integrator(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec,
                                     const std::vector<AgentDynamicsSpec<Scalar>>& dyn, const RuleParams<Scalar>& p,
                                     const SimState<Scalar>& s) {
  detail::require_compatible(g, spec, s.layout, s.data.size());
  detail::require_orders(dyn, spec, s.layout, true);
  const Index n = spec.strategy_dim;
  const Vector<Scalar> y = outputs(spec, s);
  SimState<Scalar> ds(s.layout);
  for (Index i = 0; i < spec.n_players; ++i) {
    const auto block = s.agent(i);
    const auto x = block.head(n);
    const auto v = block.tail(n);
    const Vector<Scalar> yi = y.segment(i * n, n);
    auto out = ds.agent(i);
    out.head(n) = v;
    out.tail(n) = -dyn[static_cast<std::size_t>(i)].damping() * v - x + agent_drive(spec, s, i, yi);
  }
  coordination_rhs(g, spec, p, s, y, ds);
  return std::move(ds.data);
}

/// Closed-loop field of r-th order integrator chains (r > 2):
///   x_i' = H_i x_i + B_bar (y_i - grad J_i(y_i, eta_i) - A_i^T mu_i),  y_i = P(C_bar x_i)
/// lifted to n > 1 by treating each chain level as an n-vector.
template <typename Scalar>
Vector<Scalar> rhs_multi_integrator(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec,
                                    const std::vector<AgentDynamicsSpec<Scalar>>& dyn, const RuleParams<Scalar>& p,
                                    const SimState<Scalar>& s) {
  detail::require_compatible(g, spec, s.layout, s.data.size());
  detail::require_orders(dyn, spec, s.layout, false);
  const Index n = spec.strategy_dim;
  const Index r = dyn.front().order();
  const Vector<Scalar> y = outputs(spec, s);
  SimState<Scalar> ds(s.layout);
  for (Index i = 0; i < spec.n_players; ++i) {
    const Eigen::Map<const Matrix<Scalar>> chain(s.data.data() + s.layout.offset(StateLayout::Block::agent, i), n, r);
    Eigen::Map<Matrix<Scalar>> dchain(ds.data.data() + ds.layout.offset(StateLayout::Block::agent, i), n, r);
    dchain.leftCols(r - 1) = chain.rightCols(r - 1);
    const Vector<Scalar> yi = y.segment(i * n, n);
    dchain.col(r - 1) = -chain * dyn[static_cast<std::size_t>(i)].feedback() + agent_drive(spec, s, i, yi);
  }
  coordination_rhs(g, spec, p, s, y, ds);
  return std::move(ds.data);
}

/// One reported problem with an initial state.
struct InitialStateViolation {
  std::string code;  // mu_nonzero | z_sum_nonzero | x_outside_box
  Index player = -1; // -1 when not tied to one agent
  std::string detail;
};

/// Checks mu(0) = 0, sum_i z_i(0) = 0 and C x_i(0) in Omega_i. Reports, never throws.
template <typename Scalar>
std::vector<InitialStateViolation> validate_initial_state(const SimState<Scalar>& s, const GameSpec<Scalar>& spec,
                                                          Scalar z_tol = Scalar(1e-12)) {
  std::vector<InitialStateViolation> out;
  for (Index i = 0; i < s.layout.n_agents; ++i) {
    if (s.layout.constraint_dim > 0 && !s.mu(i).isZero(Scalar(0))) {
      out.push_back({"mu_nonzero", i, "multiplier of agent " + std::to_string(i + 1) + " must start at zero"});
    }
  }
  if (s.layout.constraint_dim > 0) {
    const Scalar drift = s.sum_z().cwiseAbs().maxCoeff();
    if (drift > z_tol) {
      out.push_back({"z_sum_nonzero", -1, "sum of z_i(0) is " + std::to_string(static_cast<double>(drift))});
    }
  }
  for (Index i = 0; i < s.layout.n_agents && i < spec.n_players; ++i) {
    if (!spec.box(i).contains(Vector<Scalar>(s.raw_output(i)))) {
      out.push_back({"x_outside_box", i, "output of agent " + std::to_string(i + 1) + " starts outside its box"});
    }
  }
  return out;
}

/// Fills the coordination blocks of an initial state: mu = 0, the given z
/// (zero if empty), eta_i = N phi_i(y_i(0)), w = 0. Agent blocks are taken as is.
template <typename Scalar>
SimState<Scalar> initialize_coordination(const GameSpec<Scalar>& spec, SimState<Scalar> s,
                                         const Vector<Scalar>& z0 = Vector<Scalar>()) {
  using Block = StateLayout::Block;
  s.view(Block::mu).setZero();
  if (z0.size() == 0) {
    s.view(Block::z).setZero();
  } else {
    if (z0.size() != s.layout.n_agents * s.layout.constraint_dim) {
      throw ConfigError("initial state: z(0) has wrong size");
    }
    s.data.segment(s.layout.block_start(Block::z), z0.size()) = z0;
  }
  const Vector<Scalar> y = outputs(spec, s);
  const Index n = spec.strategy_dim;
  for (Index i = 0; i < spec.n_players; ++i) {
    s.eta(i) = static_cast<Scalar>(spec.n_players) * spec.phi(i, Vector<Scalar>(y.segment(i * n, n)));
  }
  s.view(Block::w).setZero();
  return s;
}

}  // namespace gne
