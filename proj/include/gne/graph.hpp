#pragma once

#include "gne/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace gne {

/// Weighted communication digraph.
///
/// `weights(i, j) > 0` iff agent i receives information from agent j, i.e. the
/// edge j -> i exists. The Laplacian is cached at construction; the object is
/// immutable afterwards.
template <typename Scalar = double>
class Digraph {
 public:
  struct Edge {
    Index from;
    Index to;
    Scalar weight;
  };

  explicit Digraph(Matrix<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols() || weights_.rows() == 0) {
      throw ConfigError("digraph: weight matrix must be square and non-empty");
    }
    for (Index i = 0; i < weights_.rows(); ++i) {
      if (weights_(i, i) != Scalar(0)) {
        throw ConfigError("digraph: self loops are not allowed (node " + std::to_string(i + 1) + ")");
      }
    }
    if ((weights_.array() < Scalar(0)).any() || !weights_.allFinite()) {
      throw ConfigError("digraph: weights must be finite and non-negative");
    }
    laplacian_ = -weights_;
    laplacian_.diagonal() = weights_.rowwise().sum();
  }

  /// Edges are zero-based (from, to, weight); parallel edges accumulate.
  static Digraph from_edges(Index n_nodes, const std::vector<Edge>& edges) {
    if (n_nodes <= 0) {
      throw ConfigError("digraph: node count must be positive");
    }
    Matrix<Scalar> w = Matrix<Scalar>::Zero(n_nodes, n_nodes);
    for (const auto& e : edges) {
      if (e.from < 0 || e.from >= n_nodes || e.to < 0 || e.to >= n_nodes) {
        throw ConfigError("digraph: edge endpoint out of range");
      }
      if (e.from == e.to) {
        throw ConfigError("digraph: self loops are not allowed (node " + std::to_string(e.from + 1) + ")");
      }
      if (!(e.weight > Scalar(0))) {
        throw ConfigError("digraph: edge weights must be positive");
      }
      w(e.to, e.from) += e.weight;
    }
    return Digraph(std::move(w));
  }

  Index size() const noexcept { return weights_.rows(); }
  const Matrix<Scalar>& weights() const noexcept { return weights_; }
  const Matrix<Scalar>& laplacian() const noexcept { return laplacian_; }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (Index to = 0; to < size(); ++to) {
      for (Index from = 0; from < size(); ++from) {
        if (weights_(to, from) > Scalar(0)) out.push_back({from, to, weights_(to, from)});
      }
    }
    return out;
  }

 private:
  Matrix<Scalar> weights_;
  Matrix<Scalar> laplacian_;
};

/// L = D_in - W, so every row sums to zero.
template <typename Scalar>
Matrix<Scalar> laplacian(const Digraph<Scalar>& g) {
  return g.laplacian();
}

/// 1^T L = 0 within `tol`: in-weight equals out-weight at every node.
template <typename Scalar>
bool check_weight_balanced(const Digraph<Scalar>& g, Scalar tol = Scalar(1e-9)) {
  return g.laplacian().colwise().sum().cwiseAbs().maxCoeff() <= tol;
}

/// Exact reachability test over positive-weight edges.
template <typename Scalar>
bool check_strongly_connected(const Digraph<Scalar>& g) {
  const Index n = g.size();
  const auto& w = g.weights();
  // Forward search from node 0 along j -> i, then backward search along i -> j.
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index count = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        const Scalar weight = forward ? w(v, u) : w(u, v);
        if (weight > Scalar(0) && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(true) && reach_all(false);
}

template <typename Scalar = double>
struct SpectralSummary {
  Scalar lambda2{};         ///< second-smallest eigenvalue of (L + L^T) / 2
  Scalar laplacian_norm{};  ///< spectral norm of L
  bool is_weight_balanced{};
  bool is_strongly_connected{};
};

template <typename Scalar>
Vector<Scalar> symmetrized_laplacian_spectrum(const Digraph<Scalar>& g) {
  const Matrix<Scalar>& lap = g.laplacian();
  const Matrix<Scalar> sym = (lap + lap.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

template <typename Scalar>
SpectralSummary<Scalar> spectral_summary(const Digraph<Scalar>& g, Scalar balance_tol = Scalar(1e-9)) {
  SpectralSummary<Scalar> out;
  const Vector<Scalar> spectrum = symmetrized_laplacian_spectrum(g);
  out.lambda2 = spectrum.size() > 1 ? spectrum(1) : Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(g.laplacian());
  out.laplacian_norm = svd.singularValues()(0);
  out.is_weight_balanced = check_weight_balanced(g, balance_tol);
  out.is_strongly_connected = check_strongly_connected(g);
  return out;
}

/// Slowest decay rate of the aggregate estimator's boundary-layer system
///   d/dtau [eta; w] = [-I - L, -L; L, 0] [eta; w]
/// taken over all modes except the single structural zero (the mean of w,
/// which never feeds back). Negative means the estimator converges; this is
/// not implied by balance and strong connectivity alone on directed graphs.
template <typename Scalar>
Scalar estimator_abscissa(const Digraph<Scalar>& g) {
  const Index n = g.size();
  const Matrix<Scalar>& lap = g.laplacian();
  Matrix<Scalar> blk = Matrix<Scalar>::Zero(2 * n, 2 * n);
  blk.topLeftCorner(n, n) = -Matrix<Scalar>::Identity(n, n) - lap;
  blk.topRightCorner(n, n) = -lap;
  blk.bottomLeftCorner(n, n) = lap;
  Eigen::EigenSolver<Matrix<Scalar>> solver(blk, false);
  const auto ev = solver.eigenvalues();
  Index zero_mode = 0;
  for (Index k = 1; k < ev.size(); ++k) {
    if (std::abs(ev(k)) < std::abs(ev(zero_mode))) zero_mode = k;
  }
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < ev.size(); ++k) {
    if (k != zero_mode) worst = std::max(worst, ev(k).real());
  }
  return worst;
}

/// Superposes `cycles` random directed Hamiltonian cycles with weights drawn
/// from [w_min, w_max]. Balanced and strongly connected by construction.
/// With `with_reverse`, every cycle is also laid down backwards under an
/// independently drawn weight, which keeps the Laplacian spectrum close to the
/// real axis.
template <typename Scalar = double, typename Rng>
Digraph<Scalar> random_balanced_digraph(Index n_nodes, int cycles, Rng& rng, Scalar w_min = Scalar(0.5),
                                        Scalar w_max = Scalar(2), bool with_reverse = false) {
  if (n_nodes < 2 || cycles < 1) {
    throw ConfigError("random_balanced_digraph: need at least 2 nodes and 1 cycle");
  }
  std::uniform_real_distribution<double> weight(static_cast<double>(w_min), static_cast<double>(w_max));
  Matrix<Scalar> w = Matrix<Scalar>::Zero(n_nodes, n_nodes);
  std::vector<Index> order(static_cast<std::size_t>(n_nodes));
  for (int c = 0; c < cycles; ++c) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    const Scalar cw = static_cast<Scalar>(weight(rng));
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Index from = order[k];
      const Index to = order[(k + 1) % order.size()];
      w(to, from) += cw;
    }
    if (with_reverse) {
      const Scalar rw = static_cast<Scalar>(weight(rng));
      for (std::size_t k = 0; k < order.size(); ++k) {
        w(order[k], order[(k + 1) % order.size()]) += rw;
      }
    }
  }
  return Digraph<Scalar>(std::move(w));
}

}  // namespace gne
