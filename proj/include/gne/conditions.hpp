#pragma once

#include "gne/dynamics.hpp"
#include "gne/monotonicity.hpp"

#include <Eigen/LU>

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gne {

/// One inequality of a sufficient condition. `relation` is '<' (lhs < rhs) or
/// '>' (lhs > rhs); slack is positive exactly when the inequality holds and
/// NaN when a side could not be evaluated.
template <typename Scalar = double>
struct ConditionMargin {
  std::string id;
  char relation = '<';
  Scalar lhs{};
  Scalar rhs{};
  Scalar slack{};
};

template <typename Scalar = double>
struct ConditionReport {
  bool satisfied = false;
  std::vector<ConditionMargin<Scalar>> margins;
  std::optional<Scalar> searched_a1;
  std::vector<std::string> notes;

  const ConditionMargin<Scalar>* find(const std::string& id) const {
    for (const auto& m : margins) {
      if (m.id == id) return &m;
    }
    return nullptr;
  }
};

namespace detail {

template <typename Scalar>
ConditionMargin<Scalar> margin(std::string id, Scalar lhs, char relation, Scalar rhs) {
  const Scalar slack = relation == '<' ? rhs - lhs : lhs - rhs;
  return {std::move(id), relation, lhs, rhs, slack};
}

template <typename Scalar>
void finish(ConditionReport<Scalar>& rep) {
  rep.satisfied = !rep.margins.empty();
  for (const auto& m : rep.margins) rep.satisfied = rep.satisfied && (m.slack > Scalar(0));
}

template <typename Scalar>
std::vector<Scalar> log_grid(Scalar lo, Scalar hi, int points) {
  std::vector<Scalar> out(static_cast<std::size_t>(points));
  const Scalar a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    out[static_cast<std::size_t>(k)] = std::pow(Scalar(10), a + (b - a) * Scalar(k) / Scalar(points - 1));
  }
  return out;
}

}  // namespace detail

/// Lower bound on the smallest gain required by the double-integrator
/// analysis for a given Lyapunov weight a1 > 0: (a1 + 1) / sqrt(6 a1 / 5).
template <typename Scalar>
Scalar damping_gain_threshold(Scalar a1) {
  return (a1 + Scalar(1)) / std::sqrt(Scalar(6) * a1 / Scalar(5));
}

/// Sufficient conditions for the double-integrator rule:
///   k_max < 3 k_min
///   k_min > (a1 + 1) / sqrt(6 a1 / 5)      best a1 on a 100-point log grid in [0.1, 10]
///   ||A||^2 < k_min (2 omega - theta^2) - 2 k_max
///   alpha > (k_min ||A||^2 + 2) / lambda2
/// with ||A|| = max_i ||A_i||.
template <typename Scalar>
ConditionReport<Scalar> check_theorem1(const Digraph<Scalar>& g, const GameSpec<Scalar>& spec,
                                       const std::vector<Scalar>& gains, const RuleParams<Scalar>& p,
                                       const MonotonicityEstimate<Scalar>& mono) {
  const auto spectral = spectral_summary(g);
  if (!(spectral.lambda2 > Scalar(0))) {
    throw PreconditionError("double-integrator conditions: lambda2 must be positive (graph not balanced and strongly connected)");
  }
  if (gains.empty()) throw ConfigError("double-integrator conditions: no gains given");
  const Scalar k_min = *std::min_element(gains.begin(), gains.end());
  const Scalar k_max = *std::max_element(gains.begin(), gains.end());
  const Scalar a_norm = block_coupling_norm(spec);
  const Scalar a2 = a_norm * a_norm;

  ConditionReport<Scalar> rep;
  rep.margins.push_back(detail::margin<Scalar>("gain_spread", k_max, '<', Scalar(3) * k_min));

  Scalar best_a1 = Scalar(0);
  Scalar best_threshold = std::numeric_limits<Scalar>::infinity();
  for (Scalar a1 : detail::log_grid(Scalar(0.1), Scalar(10), 100)) {
    const Scalar t = damping_gain_threshold(a1);
    if (t < best_threshold) {
      best_threshold = t;
      best_a1 = a1;
    }
  }
  rep.searched_a1 = best_a1;
  rep.margins.push_back(detail::margin<Scalar>("gain_floor", k_min, '>', best_threshold));

  const Scalar monotone_rhs = k_min * (Scalar(2) * mono.omega - mono.theta * mono.theta) - Scalar(2) * k_max;
  rep.margins.push_back(detail::margin<Scalar>("coupling_norm", a2, '<', monotone_rhs));
  if (mono.omega < mono.theta * mono.theta / Scalar(2)) {
    rep.notes.push_back("2 omega - theta^2 < 0: the coupling inequality cannot hold for any gain");
  }
  if (Scalar(2) * mono.omega - mono.theta * mono.theta <= Scalar(1)) {
    rep.notes.push_back("2 omega - theta^2 <= 1, so k_min (2 omega - theta^2) - 2 k_max < 0 for every gain choice");
  }
  rep.margins.push_back(detail::margin<Scalar>("alpha", p.alpha, '>', (k_min * a2 + Scalar(2)) / spectral.lambda2));
  if (mono.assumption_violated) rep.notes.push_back("monotonicity estimate is not positive");
  detail::finish(rep);
  return rep;
}

/// Re G(j w) of G(s) = C_bar (sI - H)^{-1} B_bar.
template <typename Scalar>
Scalar chain_frequency_response_real(const AgentDynamicsSpec<Scalar>& dyn, Scalar omega) {
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  const Index r = dyn.order();
  const Matrix<Scalar> h = dyn.closed_loop_matrix();
  CMatrix m = -h.template cast<Complex>();
  m.diagonal().array() += Complex(Scalar(0), omega);
  const CVector x = m.partialPivLu().solve(AgentDynamicsSpec<Scalar>::input_vector(r).template cast<Complex>());
  return x(0).real();
}

/// Solution P of (H + e/2 I)^T P + P (H + e/2 I) = -rho I, i.e. H^T P + P H + e P = -rho I.
template <typename Scalar>
Matrix<Scalar> shifted_lyapunov(const Matrix<Scalar>& h, Scalar e, Scalar rho) {
  const Index r = h.rows();
  const Matrix<Scalar> hs = h + (e / Scalar(2)) * Matrix<Scalar>::Identity(r, r);
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(r, r);
  Matrix<Scalar> op = Matrix<Scalar>::Zero(r * r, r * r);
  // column-major vec: vec(A X B) = (B^T kron A) vec(X)
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) {
      op.block(a * r, b * r, r, r) += id(a, b) * hs.transpose();
      op.block(a * r, b * r, r, r) += hs(b, a) * id;
    }
  }
  const Matrix<Scalar> rhs_m = -rho * id;
  const Vector<Scalar> vec_p = op.partialPivLu().solve(Eigen::Map<const Vector<Scalar>>(rhs_m.data(), r * r));
  const Matrix<Scalar> p = Eigen::Map<const Matrix<Scalar>>(vec_p.data(), r, r);
  return (p + p.transpose()) / Scalar(2);
}

template <typename Scalar = double>
struct PSearchResult {
  bool found = false;
  Scalar lambda_min = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar epsilon{};
  Scalar rho{};
  Scalar best_output_gap = std::numeric_limits<Scalar>::infinity();  // min ||P B - C^T|| over SPD candidates
  Matrix<Scalar> p;
};

/// Grid search over (e, rho) in (0, 1]^2 for P = P^T > 0 with
/// H^T P + P H + e P = -rho I and ||P B_bar - C_bar^T|| <= tol, maximizing lambda_min(P).
template <typename Scalar>
PSearchResult<Scalar> search_passivity_matrix(const AgentDynamicsSpec<Scalar>& dyn, int grid = 20,
                                              Scalar tol = Scalar(1e-8)) {
  const Index r = dyn.order();
  const Matrix<Scalar> h = dyn.closed_loop_matrix();
  const Vector<Scalar> b = AgentDynamicsSpec<Scalar>::input_vector(r);
  const Vector<Scalar> c = AgentDynamicsSpec<Scalar>::output_row(r);
  PSearchResult<Scalar> best;
  for (int ie = 1; ie <= grid; ++ie) {
    for (int ir = 1; ir <= grid; ++ir) {
      const Scalar e = Scalar(ie) / Scalar(grid), rho = Scalar(ir) / Scalar(grid);
      const Matrix<Scalar> p = shifted_lyapunov(h, e, rho);
      if (!p.allFinite()) continue;
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(p, Eigen::EigenvaluesOnly);
      const Scalar lmin = eig.eigenvalues()(0);
      if (!(lmin > Scalar(0))) continue;
      const Scalar gap = (p * b - c).norm();
      best.best_output_gap = std::min(best.best_output_gap, gap);
      if (gap <= tol && (!best.found || lmin > best.lambda_min)) {
        best.found = true;
        best.lambda_min = lmin;
        best.epsilon = e;
        best.rho = rho;
        best.p = p;
      }
    }
  }
  return best;
}

template <typename Scalar = double>
struct PassivitySearchOptions {
  int frequency_points = 200;
  Scalar frequency_min = Scalar(1e-3);
  Scalar frequency_max = Scalar(1e3);
  int lyapunov_grid = 20;
  Scalar output_tol = Scalar(1e-8);
};

/// Sufficient conditions for the multi-integrator rule. Per agent: sampled
/// positivity of Re G(jw) and a search for the passivity matrix P. Then, with
/// ||A|| = max_i ||A_i||:
///   omega >= ||A||^2 / 2:  lambda_min(P) > 3
///   otherwise:             lambda_min(P) > 3 + 2 ||A||^2
///   both:                  alpha > (4 + ||A||^2) / (2 lambda2)
/// A failed P search leaves lambda_min(P) undefined (NaN slack) and is noted as
/// infeasible-by-search, which is not a disproof.
template <typename Scalar>
ConditionReport<Scalar> check_theorem2(const std::vector<AgentDynamicsSpec<Scalar>>& dyn, const GameSpec<Scalar>& spec,
                                       const RuleParams<Scalar>& p, const Digraph<Scalar>& g,
                                       const MonotonicityEstimate<Scalar>& mono,
                                       const PassivitySearchOptions<Scalar>& opts = {}) {
  if (dyn.empty()) throw ConfigError("multi-integrator conditions: no agent dynamics given");
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    Eigen::EigenSolver<Matrix<Scalar>> es(dyn[i].closed_loop_matrix(), false);
    if (es.eigenvalues().real().maxCoeff() >= Scalar(0)) {
      throw PreconditionError("multi-integrator conditions: closed-loop matrix of agent " + std::to_string(i + 1) + " is not Hurwitz");
    }
  }
  const auto spectral = spectral_summary(g);
  const Scalar a_norm = block_coupling_norm(spec);
  const Scalar a2 = a_norm * a_norm;
  const auto freqs = detail::log_grid(opts.frequency_min, opts.frequency_max, opts.frequency_points);

  ConditionReport<Scalar> rep;
  Scalar lambda_p = std::numeric_limits<Scalar>::infinity();
  bool search_failed = false;
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    const std::string tag = std::to_string(i + 1);
    Scalar min_re = std::numeric_limits<Scalar>::infinity();
    for (Scalar w : freqs) min_re = std::min(min_re, chain_frequency_response_real(dyn[i], w));
    rep.margins.push_back(detail::margin<Scalar>("positive_real_" + tag, min_re, '>', Scalar(0)));

    const auto search = search_passivity_matrix(dyn[i], opts.lyapunov_grid, opts.output_tol);
    if (search.found) {
      lambda_p = std::min(lambda_p, search.lambda_min);
    } else {
      search_failed = true;
      rep.notes.push_back("agent " + tag + ": infeasible-by-search (closest ||P B - C^T|| = " +
                          std::to_string(static_cast<double>(search.best_output_gap)) + ")");
    }
  }
  if (search_failed) lambda_p = std::numeric_limits<Scalar>::quiet_NaN();

  const bool first_branch = mono.omega >= a2 / Scalar(2);
  rep.notes.push_back(first_branch ? "branch 1: omega >= ||A||^2 / 2" : "branch 2: omega < ||A||^2 / 2");
  const Scalar p_floor = first_branch ? Scalar(3) : Scalar(3) + Scalar(2) * a2;
  rep.margins.push_back(detail::margin<Scalar>("lambda_min_P", lambda_p, '>', p_floor));
  if (spectral.lambda2 > Scalar(0)) {
    rep.margins.push_back(
        detail::margin<Scalar>("alpha", p.alpha, '>', (Scalar(4) + a2) / (Scalar(2) * spectral.lambda2)));
  } else {
    rep.margins.push_back(
        detail::margin<Scalar>("alpha", p.alpha, '>', std::numeric_limits<Scalar>::infinity()));
    rep.notes.push_back("lambda2 = 0: graph not balanced and strongly connected");
  }
  if (mono.assumption_violated) rep.notes.push_back("monotonicity estimate is not positive");
  detail::finish(rep);
  return rep;
}

}  // namespace gne
