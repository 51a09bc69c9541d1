#include "support/oracles.hpp"

#include "gne/scenarios/scenarios.hpp"

#include <doctest.h>

using namespace gne;

namespace {

StateLayout scalar_layout() { return StateLayout{1, 1, 1, 0, 0}; }

SimState<double> scalar_state(double v) { return SimState<double>(scalar_layout(), Vector<double>::Constant(1, v)); }

double relative_gap(const Vector<double>& a, const Vector<double>& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("RK4 on x' = -x") {
  const auto traj = integrate<double>([](const SimState<double>& s) { return Vector<double>(-s.data); }, scalar_state(1.0),
                                      IntegratorConfig<double>{0.01, 1.0, 1, 0.0});
  CHECK(traj.size() == 101);
  CHECK(traj.times.back() == 1.0);
  CHECK(std::abs(traj.final_state().data(0) - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("RK4 error shrinks sixteenfold when the step halves") {
  auto err = [](double h) {
    const auto t = integrate<double>([](const SimState<double>& s) { return Vector<double>(-s.data); }, scalar_state(1.0),
                                     IntegratorConfig<double>{h, 1.0, 1000, 0.0});
    return std::abs(t.final_state().data(0) - std::exp(-1.0));
  };
  const double ratio = err(0.1) / err(0.05);
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
}

TEST_CASE("constant field keeps the state") {
  const auto traj = integrate<double>([](const SimState<double>& s) { return Vector<double>::Zero(s.data.size()).eval(); },
                                      scalar_state(2.5), IntegratorConfig<double>{0.1, 3.0, 1, 0.0});
  for (const auto& s : traj.states) CHECK(s.data(0) == 2.5);
}

TEST_CASE("recording cadence and final snapshot") {
  const auto traj = integrate<double>([](const SimState<double>& s) { return Vector<double>(-s.data); }, scalar_state(1.0),
                                      IntegratorConfig<double>{0.1, 1.05, 4, 0.0});
  // 11 steps, the last one shortened to land on t_end.
  REQUIRE(traj.size() == 4);
  CHECK(traj.times[1] == doctest::Approx(0.4));
  CHECK(traj.times[2] == doctest::Approx(0.8));
  CHECK(traj.times[3] == 1.05);
  CHECK(std::abs(traj.final_state().data(0) - std::exp(-1.05)) < 1e-6);
}

TEST_CASE("early stop on the residual tolerance") {
  const ResidualFn<double> res = [](const SimState<double>& s) {
    KktReport<double> r;
    r.stationarity = std::abs(s.data(0));
    return r;
  };
  const auto traj = integrate<double>([](const SimState<double>& s) { return Vector<double>(-s.data); }, scalar_state(1.0),
                                      IntegratorConfig<double>{0.01, 100.0, 10, 1e-3}, res);
  CHECK(traj.stopped_early);
  CHECK(traj.residuals.back().stationarity <= 1e-3);
  CHECK(traj.times.back() == doctest::Approx(7.0));  // first multiple of 0.1 past log(1000)
  CHECK(traj.residuals.size() == traj.size());
}

TEST_CASE("divergence carries the partial trajectory") {
  const auto blowup = [](const SimState<double>& s) { return Vector<double>(s.data.array().square()); };
  try {
    integrate<double>(blowup, scalar_state(1.0), IntegratorConfig<double>{0.01, 5.0, 1, 0.0});
    FAIL("expected divergence");
  } catch (const IntegrationDiverged<double>& e) {
    CHECK(e.time() > 0.9);
    CHECK(e.time() < 1.1);
    CHECK(e.partial().size() > 50);
    CHECK(e.partial().states.back().data.allFinite());
  }
}

TEST_CASE("integrator configuration checks") {
  CHECK_THROWS_AS((IntegratorConfig<double>{0.0, 1.0, 1, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((IntegratorConfig<double>{0.1, -1.0, 1, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((IntegratorConfig<double>{0.1, 1.0, 0, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((IntegratorConfig<double>{0.1, 1.0, 1, -1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((IntegratorConfig<double>{0.03, 1.0, 1, 0.0}.validate(0.1)), ConfigError);
  CHECK_NOTHROW((IntegratorConfig<double>{0.02, 1.0, 1, 0.0}.validate(0.1)));
}

TEST_CASE("exponential fit") {
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.05 * k);
    v.push_back(std::exp(-2.0 * t.back()));
  }
  auto fit = fit_exponential_rate<double>(t, v);
  CHECK(fit.rate == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(fit.r_squared > 0.999);
  CHECK(fit.samples == 81);

  std::vector<double> flat(t.size(), 0.3);
  fit = fit_exponential_rate<double>(t, flat);
  CHECK(std::abs(fit.rate) < 1e-12);

  // A zero value ends the usable series.
  v[60] = 0.0;
  fit = fit_exponential_rate<double>(t, v);
  CHECK(fit.samples == 48);
  CHECK(fit.rate == doctest::Approx(-2.0).epsilon(1e-10));

  CHECK(std::isnan(fit_exponential_rate<double>(std::vector<double>{0.0}, std::vector<double>{1.0}).rate));
  CHECK_THROWS_AS(fit_exponential_rate<double>(t, std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("formation run: feasibility residual shrinks below 1e-3") {
  const auto model = scenarios::build_model(scenarios::formation());
  const auto traj = model.simulate();
  const auto& res = traj.residuals;
  CHECK(res.back().feasibility < 1e-3);
  const std::size_t tenth = res.size() / 10;
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    double& bucket = k < tenth ? early : late;
    bucket = std::max(bucket, res[k].feasibility);
  }
  CHECK(late < early);

  // Distance to the equilibrium decays exponentially.
  const auto mono = estimate_monotonicity(model.game, 200, 1);
  const auto star = oracle_gne(model.game, mono);
  const auto fit = fit_exponential_rate(traj, [&](const SimState<double>& s) {
    return (outputs(model.game, s) - star.y).norm();
  });
  CHECK(fit.r_squared > 0.9);

  // The fitted rate is the slowest decaying mode of the linearization at the
  // equilibrium; the conserved sums of z and w contribute exact zero modes.
  const SimState<double> eq = model.equilibrium(star.y, star.mu);
  const Matrix<double> jac = testing::numeric_jacobian(
      [&](const Vector<double>& x) { return model.field(SimState<double>(eq.layout, x)); }, eq.data, 1e-6);
  const auto ev = Eigen::EigenSolver<Matrix<double>>(jac, false).eigenvalues();
  double slowest = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < ev.size(); ++k) {
    if (std::abs(ev(k)) > 1e-4) slowest = std::max(slowest, ev(k).real());
  }
  CHECK(slowest < 0.0);
  CHECK(fit.rate == doctest::Approx(slowest).epsilon(0.05));
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  auto cfg = scenarios::der();
  cfg.integrator.t_end = 10.0;
  const auto model = scenarios::build_model(cfg);
  const auto a = model.simulate();
  const auto b = model.simulate();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k].data == b.states[k].data);
}

TEST_CASE("halving the step barely moves the final state") {
  for (const char* name : {"formation", "der", "der_chain"}) {
    CAPTURE(name);
    const auto model = scenarios::build_model(*scenarios::builtin(name));
    auto fine = model.config.integrator;
    fine.step /= 2.0;
    fine.record_every *= 2;
    const auto coarse_end = model.simulate().final_state().data;
    const auto fine_end = model.simulate(fine).final_state().data;
    CHECK(relative_gap(coarse_end, fine_end) < 1e-6);
  }
}

TEST_CASE("z sum is conserved over the built-in horizons") {
  for (const char* name : {"formation", "der", "der_chain"}) {
    CAPTURE(name);
    const auto traj = scenarios::build_model(*scenarios::builtin(name)).simulate();
    double drift = 0.0;
    for (const auto& s : traj.states) drift = std::max(drift, s.sum_z().cwiseAbs().maxCoeff());
    CHECK(drift <= 1e-8);
  }
}
