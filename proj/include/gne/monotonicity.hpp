#pragma once

#include "gne/game.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

namespace gne {

enum class MonotonicityMethod { jacobian_exact, sampled };

inline const char* to_string(MonotonicityMethod m) {
  return m == MonotonicityMethod::jacobian_exact ? "jacobian_exact" : "sampled";
}

/// Strong-monotonicity modulus omega and Lipschitz constant theta of F on Omega.
template <typename Scalar = double>
struct MonotonicityEstimate {
  Scalar omega{};
  Scalar theta{};
  MonotonicityMethod method = MonotonicityMethod::sampled;
  bool assumption_violated = false;  // omega <= 0
  Matrix<Scalar> jacobian;           // set when F was detected affine
  Vector<Scalar> offset;             // q in F(y) = M y + q, when affine
};

namespace detail {

/// Box side used for sampling; unbounded sides fall back to [-10, 10] around the finite end.
template <typename Scalar>
std::pair<Scalar, Scalar> sampling_interval(Scalar lo, Scalar hi) {
  constexpr Scalar span = Scalar(10);
  const bool lo_finite = std::isfinite(lo), hi_finite = std::isfinite(hi);
  if (lo_finite && hi_finite) return {lo, hi};
  if (lo_finite) return {lo, lo + Scalar(2) * span};
  if (hi_finite) return {hi - Scalar(2) * span, hi};
  return {-span, span};
}

template <typename Scalar, typename Rng>
Vector<Scalar> sample_in_omega(const GameSpec<Scalar>& spec, Rng& rng) {
  const Index n = spec.strategy_dim;
  Vector<Scalar> y(spec.stacked_dim());
  for (Index i = 0; i < spec.n_players; ++i) {
    const auto& box = spec.box(i);
    for (Index j = 0; j < n; ++j) {
      const auto [lo, hi] = sampling_interval(box.lower(j), box.upper(j));
      std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
      y(i * n + j) = lo == hi ? lo : static_cast<Scalar>(dist(rng));
    }
  }
  return y;
}

}  // namespace detail

/// Central-difference Jacobian of the pseudo-gradient. Exact up to rounding when F is affine.
template <typename Scalar>
Matrix<Scalar> pseudo_jacobian(const GameSpec<Scalar>& spec, const Vector<Scalar>& y, Scalar rel_step = Scalar(1e-3)) {
  const Index dim = y.size();
  Matrix<Scalar> jac(dim, dim);
  for (Index k = 0; k < dim; ++k) {
    const Scalar h = rel_step * std::max(Scalar(1), std::abs(y(k)));
    Vector<Scalar> plus = y, minus = y;
    plus(k) += h;
    minus(k) -= h;
    jac.col(k) = (pseudo_gradient(spec, plus) - pseudo_gradient(spec, minus)) / (Scalar(2) * h);
  }
  return jac;
}

/// omega = lambda_min((M + M^T) / 2), theta = ||M||_2.
template <typename Scalar>
std::pair<Scalar, Scalar> affine_monotonicity_constants(const Matrix<Scalar>& m) {
  const Matrix<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m);
  return {eig.eigenvalues()(0), svd.singularValues()(0)};
}

/// Estimates the Assumption-2 constants. If the Jacobian is identical at three
/// probe points, F is treated as affine and the constants come from its
/// symmetric part and spectral norm; otherwise they are the extreme pair ratios
/// over `samples` random pairs drawn in Omega.
template <typename Scalar>
MonotonicityEstimate<Scalar> estimate_monotonicity(const GameSpec<Scalar>& spec, int samples, std::uint64_t seed,
                                                   bool force_sampled = false) {
  if (samples < 2) throw ConfigError("monotonicity: need at least two samples");
  std::mt19937_64 rng(seed);
  MonotonicityEstimate<Scalar> est;

  if (!force_sampled) {
    const Vector<Scalar> p0 = detail::sample_in_omega(spec, rng);
    const Matrix<Scalar> j0 = pseudo_jacobian(spec, p0);
    bool affine = true;
    for (int probe = 0; probe < 2 && affine; ++probe) {
      const Matrix<Scalar> jk = pseudo_jacobian(spec, detail::sample_in_omega(spec, rng));
      affine = (jk - j0).cwiseAbs().maxCoeff() <= Scalar(1e-6) * (Scalar(1) + j0.cwiseAbs().maxCoeff());
    }
    if (affine) {
      std::tie(est.omega, est.theta) = affine_monotonicity_constants(j0);
      est.method = MonotonicityMethod::jacobian_exact;
      est.offset = pseudo_gradient(spec, p0) - j0 * p0;
      est.jacobian = j0;
      est.assumption_violated = !(est.omega > Scalar(0));
      return est;
    }
  }

  est.method = MonotonicityMethod::sampled;
  est.omega = std::numeric_limits<Scalar>::infinity();
  est.theta = Scalar(0);
  for (int k = 0; k < samples; ++k) {
    const Vector<Scalar> a = detail::sample_in_omega(spec, rng);
    const Vector<Scalar> b = detail::sample_in_omega(spec, rng);
    const Vector<Scalar> dy = a - b;
    const Scalar dn2 = dy.squaredNorm();
    if (dn2 == Scalar(0)) continue;
    const Vector<Scalar> df = pseudo_gradient(spec, a) - pseudo_gradient(spec, b);
    est.omega = std::min(est.omega, df.dot(dy) / dn2);
    est.theta = std::max(est.theta, df.norm() / std::sqrt(dn2));
  }
  est.assumption_violated = !(est.omega > Scalar(0));
  return est;
}

}  // namespace gne
