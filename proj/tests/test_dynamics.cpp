#include "support/oracles.hpp"

#include "gne/scenarios/scenarios.hpp"

#include <doctest.h>

using namespace gne;
using Block = StateLayout::Block;

namespace {

std::vector<AgentDynamicsSpec<double>> uniform_dynamics(Index players, Index order) {
  std::vector<AgentDynamicsSpec<double>> out;
  for (Index i = 0; i < players; ++i) {
    if (order == 2) {
      out.push_back(AgentDynamicsSpec<double>::double_integrator(2.0 + 0.5 * double(i)));
    } else {
      // Coefficients of (s + 1)^order.
      Vector<double> k(order);
      double c = 1.0;
      for (Index j = 0; j < order; ++j) {
        k(j) = c;
        c = c * double(order - j) / double(j + 1);
      }
      out.push_back(AgentDynamicsSpec<double>::chain(k));
    }
  }
  return out;
}

Vector<double> field(const Digraph<double>& g, const GameSpec<double>& spec,
                     const std::vector<AgentDynamicsSpec<double>>& dyn, const RuleParams<double>& p,
                     const SimState<double>& s) {
  return dyn.front().order() == 2 ? rhs_double_integrator(g, spec, dyn, p, s) : rhs_multi_integrator(g, spec, dyn, p, s);
}

GameSpec<double> single_player_half_square() {
  GameSpec<double> s;
  s.n_players = 1;
  s.strategy_dim = 1;
  s.aggregate_dim = 1;
  s.constraint_dim = 0;
  s.cost_grad = [](Index, const Vector<double>& yi, const Vector<double>&) { return yi; };
  s.phi = [](Index, const Vector<double>& yi) { return yi; };
  s.coupling.push_back({Matrix<double>(0, 1), Vector<double>(0)});
  s.boxes.emplace_back(Vector<double>::Constant(1, -1e6), Vector<double>::Constant(1, 1e6));
  return s;
}

}  // namespace

TEST_CASE("companion matrix for gains [1, 3, 3] has a triple pole at -1") {
  const auto dyn = AgentDynamicsSpec<double>::chain((Vector<double>(3) << 1, 3, 3).finished());
  const Matrix<double> h = dyn.closed_loop_matrix();
  const Matrix<double> id = Matrix<double>::Identity(3, 3);
  // Cayley-Hamilton for (s + 1)^3.
  CHECK((h * h * h + 3 * h * h + 3 * h + id).norm() < 1e-14);
  Eigen::EigenSolver<Matrix<double>> es(h, false);
  for (Index k = 0; k < 3; ++k) CHECK(std::abs(es.eigenvalues()(k) + 1.0) < 1e-4);
}

TEST_CASE("agent dynamics validation") {
  CHECK_THROWS_AS(AgentDynamicsSpec<double>::double_integrator(0.0), ConfigError);
  CHECK_THROWS_AS(AgentDynamicsSpec<double>::chain((Vector<double>(3) << 2, 3, 3).finished()), ConfigError);
  CHECK_THROWS_AS(AgentDynamicsSpec<double>::chain((Vector<double>(3) << 1, 1, 3).finished()), ConfigError);
  // Entries above 1 but s^4 + 5 s^3 + 1.1 s^2 + 5 s + 1 fails the Routh test.
  CHECK_THROWS_AS(AgentDynamicsSpec<double>::chain((Vector<double>(4) << 1, 5, 1.1, 5).finished()), ConfigError);
  CHECK_THROWS_AS(AgentDynamicsSpec<double>::from_gains(3, Vector<double>::Constant(2, 2.0)), ConfigError);
  CHECK(AgentDynamicsSpec<double>::from_gains(2, Vector<double>::Constant(1, 5.0)).damping() == 5.0);
  RuleParams<double> p{0.0, 0.1};
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("single agent with J = y^2 / 2 reduces to a damped oscillator") {
  const auto spec = single_player_half_square();
  const auto g = Digraph<double>::from_edges(1, {});
  const std::vector dyn{AgentDynamicsSpec<double>::double_integrator(3.0)};
  SimState<double> s(chain_layout(spec, 2));
  s.agent(0) << 0.7, -0.2;
  s = initialize_coordination(spec, s);
  const Vector<double> ds = rhs_double_integrator(g, spec, dyn, RuleParams<double>{}, s);
  CHECK(ds(0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(ds(1) == doctest::Approx(-3.0 * -0.2 - 0.7).epsilon(1e-15));
  SimState<double> rest(chain_layout(spec, 2));
  CHECK(rhs_double_integrator(g, spec, dyn, RuleParams<double>{}, rest).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero game: chains rest at the origin") {
  auto spec = single_player_half_square();
  spec.cost_grad = [](Index, const Vector<double>&, const Vector<double>&) { return Vector<double>::Zero(1); };
  const auto g = Digraph<double>::from_edges(1, {});
  for (Index order : {3, 4, 5}) {
    const auto dyn = uniform_dynamics(1, order);
    SimState<double> rest(chain_layout(spec, order));
    CHECK(rhs_multi_integrator(g, spec, dyn, RuleParams<double>{}, rest).cwiseAbs().maxCoeff() == 0.0);
    // With grad J = 0 the drive is y, so the chain obeys x' = (H + B C) x.
    SimState<double> s(chain_layout(spec, order));
    std::mt19937_64 rng(static_cast<std::uint64_t>(order));
    s.agent(0) = testing::random_vector(order, rng, -1, 1);
    Matrix<double> h = dyn[0].closed_loop_matrix();
    h(order - 1, 0) += 1.0;
    const Vector<double> expected = h * Vector<double>(s.agent(0));
    CHECK((rhs_multi_integrator(g, spec, dyn, RuleParams<double>{}, s).head(order) - expected).norm() < 1e-14);
  }
}

TEST_CASE("field vanishes at equilibria built from the direct KKT solve, and only there") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const auto game = testing::random_quadratic_game(rng);
    const auto spec = game.spec();
    const auto graph = testing::random_estimator_graph(spec.n_players, rng);
    const auto sol = testing::solve_kkt_direct(game.jacobian(), game.offset(), game.a, game.d);
    const RuleParams<double> p{1.3, 0.2};
    for (Index order : {2, 3, 4}) {
      CAPTURE(trial);
      CAPTURE(order);
      const auto dyn = uniform_dynamics(spec.n_players, order);
      const SimState<double> eq = equilibrium_state(graph, spec, order, sol.y, sol.mu);
      CHECK(field(graph, spec, dyn, p, eq).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(kkt_report(spec, eq).max() < 1e-10);
      // Any perturbation of the position, multiplier or estimate leaves the equilibrium set.
      for (Block b : {Block::agent, Block::mu, Block::eta}) {
        if (eq.layout.block_size(b) == 0) continue;
        SimState<double> moved = eq;
        moved.slice(b, trial % spec.n_players)(0) += 1e-3;
        CHECK(field(graph, spec, dyn, p, moved).cwiseAbs().maxCoeff() > 1e-6);
      }
    }
  }
}

TEST_CASE("estimator sum identity") {
  std::mt19937_64 rng(17);
  const auto game = testing::random_quadratic_game(rng);
  const auto spec = game.spec();
  const auto graph = testing::random_estimator_graph(spec.n_players, rng);
  const auto dyn = uniform_dynamics(spec.n_players, 2);
  const RuleParams<double> p{1.0, 0.05};
  SimState<double> s(chain_layout(spec, 2));
  s.data = testing::random_vector(s.data.size(), rng, -3, 3);
  const SimState<double> ds(s.layout, rhs_double_integrator(graph, spec, dyn, p, s));
  const Vector<double> y = outputs(spec, s);
  const Vector<double> lhs = p.epsilon * ds.view(Block::eta).rowwise().sum();
  const Vector<double> rhs = -s.view(Block::eta).rowwise().sum() + double(spec.n_players) * aggregate(spec, y);
  CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
  // And the multiplier coordination conserves the sum of z.
  CHECK(ds.view(Block::z).rowwise().sum().norm() < 1e-12);
}

TEST_CASE("z sum and output confinement along integrated trajectories") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto game = testing::random_quadratic_game(rng);
    auto spec = game.spec();
    // Tight boxes make the projection active.
    for (auto& box : spec.boxes) box = BoxSet<double>(Vector<double>::Constant(game.dim, -1), Vector<double>::Constant(game.dim, 1));
    const auto graph = testing::random_estimator_graph(spec.n_players, rng);
    const Index order = 2 + trial % 2;
    const auto dyn = uniform_dynamics(spec.n_players, order);
    const RuleParams<double> p{1.0, 0.1};
    SimState<double> s0(chain_layout(spec, order));
    for (Index i = 0; i < spec.n_players; ++i) s0.agent(i).head(game.dim) = testing::random_vector(game.dim, rng, -3, 3);
    Vector<double> z0 = testing::random_vector(spec.n_players * spec.constraint_dim, rng, -1, 1);
    if (spec.constraint_dim > 0) {
      Eigen::Map<Matrix<double>> zm(z0.data(), spec.constraint_dim, spec.n_players);
      zm.colwise() -= Vector<double>(zm.rowwise().mean());
    }
    s0 = initialize_coordination(spec, s0, z0);
    const auto traj = integrate<double>([&](const SimState<double>& s) { return field(graph, spec, dyn, p, s); }, s0,
                                        IntegratorConfig<double>{0.01, 20.0, 10, 0.0});
    double drift = 0.0;
    for (const auto& s : traj.states) {
      if (spec.constraint_dim > 0) drift = std::max(drift, (s.sum_z() - s0.sum_z()).cwiseAbs().maxCoeff());
      for (Index i = 0; i < spec.n_players; ++i) {
        CHECK(spec.box(i).contains(Vector<double>(outputs(spec, s).segment(i * game.dim, game.dim))));
      }
    }
    CHECK(drift <= 1e-8);
  }
}

TEST_CASE("initial state validation") {
  const auto model = scenarios::build_model(scenarios::formation());
  CHECK(validate_initial_state(model.initial, model.game).empty());
  SUBCASE("nonzero multiplier") {
    SimState<double> s = model.initial;
    s.mu(0).setConstant(1.0);
    const auto v = validate_initial_state(s, model.game);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "mu_nonzero");
    CHECK(v[0].player == 0);
  }
  SUBCASE("z summing to zero is accepted, otherwise reported") {
    SimState<double> s = model.initial;
    const double col[] = {1, -0.5, -0.5, 0, 0};
    for (Index i = 0; i < 5; ++i) s.z(i).setConstant(col[i]);
    CHECK(validate_initial_state(s, model.game).empty());
    s.z(4)(3) = 1e-6;
    const auto v = validate_initial_state(s, model.game);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "z_sum_nonzero");
  }
  SUBCASE("output outside its box") {
    SimState<double> s = model.initial;
    s.agent(2)(1) = 11.0;
    const auto v = validate_initial_state(s, model.game);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "x_outside_box");
    CHECK(v[0].player == 2);
  }
  SUBCASE("energy market starts two units outside their boxes") {
    const auto der = scenarios::build_model(scenarios::der());
    std::vector<Index> players;
    for (const auto& v : validate_initial_state(der.initial, der.game)) {
      CHECK(v.code == "x_outside_box");
      players.push_back(v.player);
    }
    CHECK(players == std::vector<Index>{1, 2});
  }
}

TEST_CASE("generator plant is an exact triple integrator in (P, P', P'')") {
  const auto model = scenarios::build_model(scenarios::der());
  REQUIRE(model.generator);
  const auto& plant = *model.generator;
  std::mt19937_64 rng(5);
  SimState<double> s = model.initial;
  s.data += testing::random_vector(s.data.size(), rng, -0.5, 0.5);
  const SimState<double> ds(s.layout, model.field(s));
  const Vector<double> y = outputs(model.game, s);
  for (Index i = 0; i < model.game.n_players; ++i) {
    CAPTURE(i);
    const Vector<double> block = s.agent(i);
    const Matrix<double> jac = testing::numeric_jacobian(
        [&](const Vector<double>& b) { return plant.chain_coordinates(i, b); }, block, 1e-6);
    const Vector<double> chain_rate = jac * Vector<double>(ds.agent(i));
    const Vector<double> chain = plant.chain_coordinates(i, block);
    const Vector<double> drive = agent_drive(model.game, s, i, Vector<double>(y.segment(i, 1)));
    const double jerk = -model.dynamics[static_cast<std::size_t>(i)].feedback().dot(chain) + drive(0);
    CHECK(chain_rate(0) == doctest::Approx(chain(1)).epsilon(1e-7));
    CHECK(chain_rate(1) == doctest::Approx(chain(2)).epsilon(1e-7));
    CHECK(chain_rate(2) == doctest::Approx(jerk).epsilon(1e-7));
  }
  SUBCASE("rest state and steady state") {
    for (Index i = 0; i < 6; ++i) {
      const Vector<double> c = plant.chain_coordinates(i, plant.initial_block(i, 30.0));
      CHECK(c(0) == doctest::Approx(30.0).epsilon(1e-15));
      CHECK(std::abs(c(1)) < 1e-12);
      CHECK(std::abs(c(2)) < 1e-12);
    }
  }
}

TEST_CASE("generator and pure-chain markets follow the same power trajectory") {
  auto a = scenarios::der();
  auto b = scenarios::der_chain();
  a.integrator.t_end = b.integrator.t_end = 20.0;
  const auto ta = scenarios::build_model(a).simulate();
  const auto tb = scenarios::build_model(b).simulate();
  REQUIRE(ta.size() == tb.size());
  double gap = 0.0;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    for (Index i = 0; i < 6; ++i) gap = std::max(gap, std::abs(ta.states[k].agent(i)(0) - tb.states[k].agent(i)(0)));
  }
  CHECK(gap < 1e-6);
}
