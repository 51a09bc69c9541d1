#pragma once

#include "gne/kkt.hpp"
#include "gne/monotonicity.hpp"

#include <Eigen/QR>

#include <cstdio>
#include <optional>
#include <string>

namespace gne {

template <typename Scalar = double>
struct OracleOptions {
  Scalar step = Scalar(0);  // 0 selects 0.9 / (theta + ||A||)
  long max_iterations = 1'000'000;
  Scalar tolerance = Scalar(1e-12);
  Scalar interior_margin = Scalar(1e-6);  // for the linear cross-check
  Scalar cross_check_tolerance = Scalar(1e-6);
};

template <typename Scalar = double>
struct OracleResult {
  Vector<Scalar> y;
  Vector<Scalar> mu;
  long iterations = 0;
  Scalar residual{};
  Scalar step{};
  /// max-norm gap to the direct linear KKT solve; set for affine F with interior solution.
  std::optional<Scalar> linear_check_error;
};

/// Solves [M A^T; A 0] [y; mu] = [-q; d] in the minimum-norm sense.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> solve_linear_kkt(const Matrix<Scalar>& m, const Vector<Scalar>& q,
                                                           const Matrix<Scalar>& a, const Vector<Scalar>& d) {
  const Index dim = m.rows();
  const Index l = a.rows();
  Matrix<Scalar> kkt = Matrix<Scalar>::Zero(dim + l, dim + l);
  kkt.topLeftCorner(dim, dim) = m;
  if (l > 0) {
    kkt.topRightCorner(dim, l) = a.transpose();
    kkt.bottomLeftCorner(l, dim) = a;
  }
  Vector<Scalar> rhs(dim + l);
  rhs << -q, d;
  const Vector<Scalar> sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return {sol.head(dim), sol.tail(l)};
}

/// max(||y - P(y - F(y) - A^T mu)||, ||A y - d||).
template <typename Scalar>
Scalar oracle_residual(const GameSpec<Scalar>& spec, const Vector<Scalar>& y, const Vector<Scalar>& mu) {
  const auto rep = kkt_report(spec, y, mu);
  return std::max(rep.stationarity, rep.feasibility);
}

/// Reference GNE (y*, mu*) by the projected extragradient method on the KKT
/// operator (F(y) + A^T mu, d - A y) over Omega x R^l.
template <typename Scalar>
OracleResult<Scalar> oracle_gne(const GameSpec<Scalar>& spec, const MonotonicityEstimate<Scalar>& mono,
                                const OracleOptions<Scalar>& opts = {}) {
  spec.validate();
  if (!(mono.omega > Scalar(0))) {
    throw OracleError("oracle: pseudo-gradient is not strongly monotone (omega <= 0)", 0,
                      std::numeric_limits<double>::quiet_NaN());
  }
  const Index l = spec.constraint_dim;
  const Matrix<Scalar> a = coupling_matrix(spec);
  const Vector<Scalar> d = coupling_rhs(spec);
  Scalar a_norm = Scalar(0);
  if (l > 0) a_norm = Eigen::JacobiSVD<Matrix<Scalar>>(a).singularValues()(0);

  OracleResult<Scalar> res;
  // The KKT operator is (theta + ||A||)-Lipschitz; extragradient converges below the inverse.
  res.step = opts.step > Scalar(0) ? opts.step : Scalar(0.9) / (mono.theta + a_norm);
  const Scalar gamma = res.step;

  Vector<Scalar> y = project(spec, Vector<Scalar>(Vector<Scalar>::Zero(spec.stacked_dim())));
  Vector<Scalar> mu = Vector<Scalar>::Zero(l);
  Vector<Scalar> f = pseudo_gradient(spec, y);

  auto residual_at = [&](const Vector<Scalar>& yy, const Vector<Scalar>& mm, const Vector<Scalar>& ff) {
    Vector<Scalar> g = ff;
    if (l > 0) g.noalias() += a.transpose() * mm;
    Scalar r = (yy - project(spec, Vector<Scalar>(yy - g))).norm();
    if (l > 0) r = std::max(r, (a * yy - d).norm());
    return r;
  };

  res.residual = residual_at(y, mu, f);
  long it = 0;
  while (res.residual >= opts.tolerance && it < opts.max_iterations) {
    Vector<Scalar> g = f;
    if (l > 0) g.noalias() += a.transpose() * mu;
    const Vector<Scalar> y_half = project(spec, Vector<Scalar>(y - gamma * g));
    const Vector<Scalar> mu_half = l > 0 ? Vector<Scalar>(mu + gamma * (a * y - d)) : mu;

    Vector<Scalar> g_half = pseudo_gradient(spec, y_half);
    if (l > 0) g_half.noalias() += a.transpose() * mu_half;
    y = project(spec, Vector<Scalar>(y - gamma * g_half));
    if (l > 0) mu += gamma * (a * y_half - d);

    f = pseudo_gradient(spec, y);
    res.residual = residual_at(y, mu, f);
    ++it;
    if (!std::isfinite(static_cast<double>(res.residual))) break;
  }
  res.iterations = it;
  res.y = y;
  res.mu = mu;
  if (!(res.residual < opts.tolerance)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", static_cast<double>(res.residual));
    throw OracleError("oracle: no convergence after " + std::to_string(it) + " iterations (residual " + buf + ")",
                      it, static_cast<double>(res.residual));
  }

  // Second route for affine F with an interior solution.
  if (mono.method == MonotonicityMethod::jacobian_exact && mono.jacobian.size() > 0) {
    const Index n = spec.strategy_dim;
    bool interior = true;
    for (Index i = 0; i < spec.n_players && interior; ++i) {
      const auto& box = spec.box(i);
      const auto yi = y.segment(i * n, n);
      interior = ((yi - box.lower).array() > opts.interior_margin).all() &&
                 ((box.upper - yi).array() > opts.interior_margin).all();
    }
    if (interior) {
      const auto [y_lin, mu_lin] = solve_linear_kkt(mono.jacobian, mono.offset, a, d);
      Scalar gap = (y_lin - y).cwiseAbs().maxCoeff();
      if (l > 0) gap = std::max(gap, (mu_lin - mu).cwiseAbs().maxCoeff());
      res.linear_check_error = gap;
      if (gap > opts.cross_check_tolerance) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", static_cast<double>(gap));
        throw OracleError(std::string("oracle: fixed-point and linear KKT solutions disagree by ") + buf,
                          it, static_cast<double>(res.residual));
      }
    }
  }
  return res;
}

}  // namespace gne
