#pragma once

#include "gne/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace gne {

/// Axis-aligned box, the local strategy set of one player.
template <typename Scalar = double>
struct BoxSet {
  Vector<Scalar> lower;
  Vector<Scalar> upper;

  BoxSet() = default;
  BoxSet(Vector<Scalar> lo, Vector<Scalar> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
      throw ConfigError("box: lower/upper dimension mismatch");
    }
    if ((lower.array() > upper.array()).any()) {
      throw ConfigError("box: lower bound exceeds upper bound");
    }
  }

  static BoxSet unbounded(Index dim) {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    return BoxSet(Vector<Scalar>::Constant(dim, -inf), Vector<Scalar>::Constant(dim, inf));
  }

  Index size() const noexcept { return lower.size(); }

  bool contains(const Vector<Scalar>& x, Scalar tol = Scalar(0)) const {
    return (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
  }
};

/// Euclidean projection onto a box: componentwise clamp.
template <typename Scalar, typename Derived>
Vector<Scalar> project(const BoxSet<Scalar>& box, const Eigen::MatrixBase<Derived>& x) {
  return x.derived().cwiseMax(box.lower).cwiseMin(box.upper);
}

/// One player's share (A_i, d_i) of the coupled constraint sum_i A_i y_i = sum_i d_i.
template <typename Scalar = double>
struct CouplingBlock {
  Matrix<Scalar> a_mat;  // l x n
  Vector<Scalar> d_vec;  // l
};

/// Aggregative game with linearly coupled strategies and box-shaped local sets.
///
/// `cost_grad(i, y_i, eta)` returns the full partial gradient of J_i with respect
/// to y_i when the aggregate takes the value `eta`; any chain-rule term coming
/// from y_i's own contribution to the aggregate is part of it. Agents evaluate it
/// at their private estimate, the analysis code at the true aggregate.
template <typename Scalar = double>
struct GameSpec {
  using Vec = Vector<Scalar>;
  using GradFn = std::function<Vec(Index, const Vec&, const Vec&)>;
  using PhiFn = std::function<Vec(Index, const Vec&)>;
  using PhiJacobianFn = std::function<Matrix<Scalar>(Index, const Vec&)>;
  using CostFn = std::function<Scalar(Index, const Vec&, const Vec&)>;

  Index n_players = 0;
  Index strategy_dim = 0;   // n
  Index aggregate_dim = 0;  // m
  Index constraint_dim = 0; // l (0 means no coupled constraint)

  GradFn cost_grad;
  PhiFn phi;
  PhiJacobianFn phi_jacobian;  // optional
  CostFn cost;                 // optional, J_i(y_i, sigma); used by derivative checks

  std::vector<CouplingBlock<Scalar>> coupling;
  std::vector<BoxSet<Scalar>> boxes;

  Index stacked_dim() const noexcept { return n_players * strategy_dim; }

  /// Throws ConfigError when the blocks disagree with the declared dimensions.
  void validate() const {
    if (n_players <= 0 || strategy_dim <= 0 || aggregate_dim < 0 || constraint_dim < 0) {
      throw ConfigError("game: dimensions must be positive");
    }
    if (!cost_grad || !phi) {
      throw ConfigError("game: cost gradient and aggregator map are required");
    }
    if (static_cast<Index>(boxes.size()) != n_players) {
      throw ConfigError("game: expected one box per player");
    }
    if (static_cast<Index>(coupling.size()) != n_players) {
      throw ConfigError("game: expected one coupling block per player");
    }
    for (Index i = 0; i < n_players; ++i) {
      const auto& blk = coupling[static_cast<std::size_t>(i)];
      if (blk.a_mat.rows() != constraint_dim || blk.a_mat.cols() != strategy_dim ||
          blk.d_vec.size() != constraint_dim) {
        throw ConfigError("game: coupling block " + std::to_string(i + 1) + " has wrong shape");
      }
      if (boxes[static_cast<std::size_t>(i)].size() != strategy_dim) {
        throw ConfigError("game: box " + std::to_string(i + 1) + " has wrong dimension");
      }
    }
  }

  const BoxSet<Scalar>& box(Index i) const { return boxes[static_cast<std::size_t>(i)]; }
  const CouplingBlock<Scalar>& block(Index i) const { return coupling[static_cast<std::size_t>(i)]; }
};

namespace detail {
template <typename Scalar>
void require_stacked(const GameSpec<Scalar>& spec, const Vector<Scalar>& y) {
  if (y.size() != spec.stacked_dim()) {
    throw ConfigError("game: stacked strategy has size " + std::to_string(y.size()) + ", expected " +
                      std::to_string(spec.stacked_dim()));
  }
}
}  // namespace detail

/// Projection of a stacked profile onto Omega = Omega_1 x ... x Omega_N.
template <typename Scalar>
Vector<Scalar> project(const GameSpec<Scalar>& spec, const Vector<Scalar>& x) {
  detail::require_stacked(spec, x);
  const Index n = spec.strategy_dim;
  Vector<Scalar> out(x.size());
  for (Index i = 0; i < spec.n_players; ++i) {
    out.segment(i * n, n) = project(spec.box(i), x.segment(i * n, n));
  }
  return out;
}

/// sigma(y) = sum_i phi_i(y_i).
template <typename Scalar>
Vector<Scalar> aggregate(const GameSpec<Scalar>& spec, const Vector<Scalar>& y) {
  detail::require_stacked(spec, y);
  const Index n = spec.strategy_dim;
  Vector<Scalar> sigma = Vector<Scalar>::Zero(spec.aggregate_dim);
  for (Index i = 0; i < spec.n_players; ++i) {
    const Vector<Scalar> yi = y.segment(i * n, n);
    const Vector<Scalar> contribution = spec.phi(i, yi);
    if (contribution.size() != spec.aggregate_dim) {
      throw ConfigError("game: aggregator map returned wrong dimension");
    }
    sigma += contribution;
  }
  return sigma;
}

/// F(y): stacked partial gradients evaluated at the true aggregate sigma(y).
template <typename Scalar>
Vector<Scalar> pseudo_gradient(const GameSpec<Scalar>& spec, const Vector<Scalar>& y) {
  const Vector<Scalar> sigma = aggregate(spec, y);
  const Index n = spec.strategy_dim;
  Vector<Scalar> out(y.size());
  for (Index i = 0; i < spec.n_players; ++i) {
    const Vector<Scalar> yi = y.segment(i * n, n);
    out.segment(i * n, n) = spec.cost_grad(i, yi, sigma);
  }
  return out;
}

/// A = [A_1, ..., A_N] (l x Nn).
template <typename Scalar>
Matrix<Scalar> coupling_matrix(const GameSpec<Scalar>& spec) {
  const Index n = spec.strategy_dim;
  Matrix<Scalar> a(spec.constraint_dim, spec.stacked_dim());
  for (Index i = 0; i < spec.n_players; ++i) {
    a.middleCols(i * n, n) = spec.block(i).a_mat;
  }
  return a;
}

/// d = sum_i d_i.
template <typename Scalar>
Vector<Scalar> coupling_rhs(const GameSpec<Scalar>& spec) {
  Vector<Scalar> d = Vector<Scalar>::Zero(spec.constraint_dim);
  for (const auto& blk : spec.coupling) d += blk.d_vec;
  return d;
}

/// sum_i A_i y_i - sum_i d_i.
template <typename Scalar>
Vector<Scalar> constraint_residual(const GameSpec<Scalar>& spec, const Vector<Scalar>& y) {
  detail::require_stacked(spec, y);
  const Index n = spec.strategy_dim;
  Vector<Scalar> r = Vector<Scalar>::Zero(spec.constraint_dim);
  for (Index i = 0; i < spec.n_players; ++i) {
    const auto& blk = spec.block(i);
    r.noalias() += blk.a_mat * y.segment(i * n, n);
    r -= blk.d_vec;
  }
  return r;
}

/// Spectral norm of blk{A_1, ..., A_N}, i.e. max_i ||A_i||_2.
template <typename Scalar>
Scalar block_coupling_norm(const GameSpec<Scalar>& spec) {
  Scalar best = Scalar(0);
  if (spec.constraint_dim == 0) return best;
  for (const auto& blk : spec.coupling) {
    Eigen::JacobiSVD<Matrix<Scalar>> svd(blk.a_mat);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

/// J_i at the profile y with the true aggregate. Requires `spec.cost`.
template <typename Scalar>
Scalar player_cost(const GameSpec<Scalar>& spec, Index i, const Vector<Scalar>& y) {
  if (!spec.cost) throw ConfigError("game: no scalar cost attached");
  const Index n = spec.strategy_dim;
  return spec.cost(i, Vector<Scalar>(y.segment(i * n, n)), aggregate(spec, y));
}

/// Central finite differences of the scalar costs, one player block at a time.
template <typename Scalar>
Vector<Scalar> finite_difference_pseudo_gradient(const GameSpec<Scalar>& spec, const Vector<Scalar>& y,
                                                  Scalar step = Scalar(1e-5)) {
  const Index n = spec.strategy_dim;
  Vector<Scalar> out(y.size());
  for (Index i = 0; i < spec.n_players; ++i) {
    for (Index j = 0; j < n; ++j) {
      Vector<Scalar> plus = y;
      Vector<Scalar> minus = y;
      const Index k = i * n + j;
      const Scalar h = step * std::max(Scalar(1), std::abs(y(k)));
      plus(k) += h;
      minus(k) -= h;
      out(k) = (player_cost(spec, i, plus) - player_cost(spec, i, minus)) / (Scalar(2) * h);
    }
  }
  return out;
}

}  // namespace gne
