#pragma once

#include "gne/kkt.hpp"
#include "gne/state.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gne {

template <typename Scalar = double>
struct IntegratorConfig {
  Scalar step = Scalar(0.01);
  Scalar t_end = Scalar(10);
  Index record_every = 1;
  Scalar stop_tol = Scalar(0);  // 0 disables the early stop

  /// `epsilon` > 0 enables the step <= epsilon / 5 guard for the fast estimator blocks.
  void validate(Scalar epsilon = Scalar(0)) const {
    if (!(step > Scalar(0))) throw ConfigError("integrator: step must be positive");
    if (!(t_end > Scalar(0))) throw ConfigError("integrator: t_end must be positive");
    if (record_every < 1) throw ConfigError("integrator: record_every must be at least 1");
    if (!(stop_tol >= Scalar(0))) throw ConfigError("integrator: stop_tol must be non-negative");
    if (epsilon > Scalar(0) && step > epsilon / Scalar(5)) {
      throw ConfigError("integrator: step " + std::to_string(static_cast<double>(step)) +
                        " exceeds epsilon/5 = " + std::to_string(static_cast<double>(epsilon / Scalar(5))));
    }
  }

  bool operator==(const IntegratorConfig&) const = default;
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<SimState<Scalar>> states;
  std::vector<KktReport<Scalar>> residuals;  // empty when no residual evaluator was supplied
  bool stopped_early = false;

  std::size_t size() const noexcept { return times.size(); }
  const SimState<Scalar>& final_state() const { return states.back(); }
};

/// A state component became NaN or infinite. Carries the partial trajectory.
template <typename Scalar = double>
class IntegrationDiverged : public std::runtime_error {
 public:
  IntegrationDiverged(Scalar time, Trajectory<Scalar> partial)
      : std::runtime_error("integration diverged at t = " + std::to_string(static_cast<double>(time))),
        time_(time),
        partial_(std::move(partial)) {}

  Scalar time() const noexcept { return time_; }
  const Trajectory<Scalar>& partial() const noexcept { return partial_; }

 private:
  Scalar time_;
  Trajectory<Scalar> partial_;
};

template <typename Scalar>
using VectorField = std::function<Vector<Scalar>(const SimState<Scalar>&)>;

template <typename Scalar>
using ResidualFn = std::function<KktReport<Scalar>(const SimState<Scalar>&)>;

/// Classical fixed-step RK4 for an autonomous field. Snapshots every
/// `record_every` steps plus the initial and final states; residuals (and the
/// early-stop test) are evaluated only at those snapshots.
template <typename Scalar, typename Field>
Trajectory<Scalar> integrate(Field&& field, const SimState<Scalar>& s0, const IntegratorConfig<Scalar>& cfg,
                             const ResidualFn<Scalar>& residual = {}) {
  cfg.validate();
  if (!s0.data.allFinite()) {
    throw IntegrationDiverged<Scalar>(Scalar(0), Trajectory<Scalar>{});
  }
  const Index n_steps =
      std::max<Index>(1, static_cast<Index>(std::ceil(cfg.t_end / cfg.step - Scalar(1e-9))));

  Trajectory<Scalar> traj;
  auto record = [&](Scalar t, const SimState<Scalar>& s) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    if (residual) {
      traj.residuals.push_back(residual(s));
      return cfg.stop_tol > Scalar(0) && traj.residuals.back().max() <= cfg.stop_tol;
    }
    return false;
  };

  SimState<Scalar> s = s0;
  SimState<Scalar> stage(s0.layout);
  if (record(Scalar(0), s)) {
    traj.stopped_early = true;
    return traj;
  }
  for (Index k = 1; k <= n_steps; ++k) {
    const Scalar t_prev = static_cast<Scalar>(k - 1) * cfg.step;
    const Scalar t = k == n_steps ? cfg.t_end : static_cast<Scalar>(k) * cfg.step;
    const Scalar h = t - t_prev;

    const Vector<Scalar> k1 = field(s);
    stage.data = s.data + (h / Scalar(2)) * k1;
    const Vector<Scalar> k2 = field(stage);
    stage.data = s.data + (h / Scalar(2)) * k2;
    const Vector<Scalar> k3 = field(stage);
    stage.data = s.data + h * k3;
    const Vector<Scalar> k4 = field(stage);
    s.data += (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);

    if (!s.data.allFinite()) {
      throw IntegrationDiverged<Scalar>(t, std::move(traj));
    }
    if (k % cfg.record_every == 0 || k == n_steps) {
      if (record(t, s)) {
        traj.stopped_early = true;
        break;
      }
    }
  }
  return traj;
}

template <typename Scalar = double>
struct ExponentialFit {
  Scalar rate = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar r_squared = std::numeric_limits<Scalar>::quiet_NaN();
  std::size_t samples = 0;
};

/// Least-squares slope of log(value) against time. The series is cut at the
/// first non-positive value, then the first 20% of what remains is skipped.
template <typename Scalar>
ExponentialFit<Scalar> fit_exponential_rate(std::span<const Scalar> times, std::span<const Scalar> values) {
  if (times.size() != values.size()) throw ConfigError("fit: times and values differ in length");
  std::size_t usable = values.size();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > Scalar(0))) {
      usable = k;
      break;
    }
  }
  const std::size_t first = usable / 5;
  ExponentialFit<Scalar> fit;
  fit.samples = usable - first;
  if (fit.samples < 2) return fit;

  Scalar mean_t = 0, mean_l = 0;
  for (std::size_t k = first; k < usable; ++k) {
    mean_t += times[k];
    mean_l += std::log(values[k]);
  }
  mean_t /= static_cast<Scalar>(fit.samples);
  mean_l /= static_cast<Scalar>(fit.samples);
  Scalar stt = 0, stl = 0, sll = 0;
  for (std::size_t k = first; k < usable; ++k) {
    const Scalar dt = times[k] - mean_t;
    const Scalar dl = std::log(values[k]) - mean_l;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  if (stt == Scalar(0)) return fit;
  fit.rate = stl / stt;
  fit.r_squared = sll == Scalar(0) ? Scalar(1) : (stl * stl) / (stt * sll);
  return fit;
}

/// Fit on a quantity extracted from each recorded point of a trajectory.
template <typename Scalar, typename Selector>
ExponentialFit<Scalar> fit_exponential_rate(const Trajectory<Scalar>& traj, Selector&& which) {
  std::vector<Scalar> values;
  values.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if constexpr (std::is_invocable_v<Selector, const KktReport<Scalar>&>) {
      values.push_back(which(traj.residuals.at(k)));
    } else {
      values.push_back(which(traj.states[k]));
    }
  }
  return fit_exponential_rate<Scalar>(std::span<const Scalar>(traj.times), std::span<const Scalar>(values));
}

}  // namespace gne
