#include "gne/scenarios/scenarios.hpp"

#include "gne/equilibrium.hpp"

namespace gne::scenarios {

using config::ScenarioConfig;

namespace {

using Edge = Digraph<double>::Edge;

/// One-based (from, to, weight) triples.
std::vector<Edge> edges(std::initializer_list<std::array<double, 3>> triples) {
  std::vector<Edge> out;
  for (const auto& t : triples) out.push_back({static_cast<Index>(t[0]) - 1, static_cast<Index>(t[1]) - 1, t[2]});
  return out;
}

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

ScenarioConfig der_common() {
  ScenarioConfig cfg;
  // Ring of six with forward weight 2 and backward weight 1, plus the chords 1-4 and 2-5 both ways.
  cfg.graph.nodes = 6;
  cfg.graph.edges = edges({{1, 2, 2}, {2, 3, 2}, {3, 4, 2}, {4, 5, 2}, {5, 6, 2}, {6, 1, 2},
                           {2, 1, 1}, {3, 2, 1}, {4, 3, 1}, {5, 4, 1}, {6, 5, 1}, {1, 6, 1},
                           {1, 4, 1}, {4, 1, 1}, {2, 5, 1}, {5, 2, 1}});

  config::DerGame game;
  game.fixed_cost = vec({5, 8, 6, 9, 7, 8});
  game.linear_cost = vec({12, 10, 11, 11, 13, 14});
  game.quadratic_cost = vec({1.0, 0.5, 0.8, 0.7, 1.1, 0.6});
  game.demand = vec({30, 45, 28, 40, 23, 25});
  game.lower = vec({20, 45, 25, 30, 20, 20});
  game.upper = vec({30, 50, 35, 40, 30, 37});
  game.price_intercept = 50.0;
  game.price_slope = 0.1;
  cfg.game = game;

  cfg.dynamics.order = 3;
  cfg.dynamics.gains.assign(6, vec({1, 3, 3}));

  cfg.rule = {2.0, 0.05};
  cfg.integrator.step = 0.005;
  cfg.integrator.t_end = 120.0;
  cfg.integrator.record_every = 20;
  cfg.integrator.stop_tol = 0.0;

  cfg.init.outputs = vec({30, 35, 20, 35, 22, 28});
  return cfg;
}

}  // namespace

ScenarioConfig formation() {
  ScenarioConfig cfg;
  cfg.name = "formation";
  // Ring of five with forward weight 2 and backward weight 1, plus the chord 1-3 both ways.
  cfg.graph.nodes = 5;
  cfg.graph.edges = edges({{1, 2, 2}, {2, 3, 2}, {3, 4, 2}, {4, 5, 2}, {5, 1, 2},
                           {2, 1, 1}, {3, 2, 1}, {4, 3, 1}, {5, 4, 1}, {1, 5, 1},
                           {1, 3, 1}, {3, 1, 1}});

  config::FormationGame game;
  game.beta = 5.0;
  game.targets = Matrix<double>(5, 2);
  game.targets.col(0).setConstant(1.0);
  game.targets.col(1).setConstant(2.0);
  game.offsets = config::circle_offsets(5, 5.0);
  game.box_lower = -10.0;
  game.box_upper = 10.0;
  cfg.game = game;

  cfg.dynamics.order = 2;
  cfg.dynamics.gains.assign(5, vec({5}));

  cfg.rule = {1.0, 0.1};
  cfg.integrator.step = 0.01;
  cfg.integrator.t_end = 300.0;
  cfg.integrator.record_every = 50;
  cfg.integrator.stop_tol = 0.0;

  cfg.init.outputs = Matrix<double>(5, 2);
  cfg.init.outputs << 0, 0, -0.5, 0, 0, -0.5, 0.2, 0, 0, 0.2;
  cfg.outputs = {"formation.csv", "formation"};
  return cfg;
}

ScenarioConfig der() {
  ScenarioConfig cfg = der_common();
  cfg.name = "der";
  cfg.dynamics.plant = config::PlantKind::generator;
  auto& gen = cfg.dynamics.generator;
  gen.turbine_time = vec({0.35, 0.30, 0.28, 0.40, 0.43, 0.35});
  gen.governor_time = vec({0.10, 0.12, 0.08, 0.11, 0.90, 0.10});
  gen.turbine_gain = vec({1.0, 1.1, 0.9, 1.2, 0.8, 1.0});
  gen.governor_gain = gen.turbine_gain;
  gen.damping = vec({5, 4, 3, 4.5, 3.5, 5});
  gen.inertia = vec({4, 3.5, 2.8, 4.2, 3, 4});
  gen.regulation = vec({0.05, 0.04, 0.03, 0.06, 0.04, 0.05});
  gen.base_speed = 1.0;
  cfg.outputs = {"der.csv", "der"};
  return cfg;
}

ScenarioConfig der_chain() {
  ScenarioConfig cfg = der_common();
  cfg.name = "der_chain";
  cfg.dynamics.plant = config::PlantKind::integrator_chain;
  cfg.outputs = {"der_chain.csv", "der_chain"};
  return cfg;
}

std::optional<ScenarioConfig> builtin(std::string_view name) {
  if (name == "formation") return formation();
  if (name == "der") return der();
  if (name == "der_chain") return der_chain();
  return std::nullopt;
}

GameSpec<double> formation_game(const config::FormationGame& f, const Digraph<double>& g) {
  const Index players = g.size();
  if (f.targets.rows() != players || f.offsets.rows() != players || f.targets.cols() != 2 || f.offsets.cols() != 2) {
    throw ConfigError("formation: targets and offsets need one planar row per player");
  }
  const Matrix<double> lap = g.laplacian();
  const Matrix<double> sym = lap + lap.transpose();
  const Matrix<double> q = f.targets.transpose();  // 2 x N
  const Matrix<double> h = f.offsets.transpose();
  const double beta = f.beta;

  GameSpec<double> spec;
  spec.n_players = players;
  spec.strategy_dim = 2;
  spec.aggregate_dim = 2 * players;
  spec.constraint_dim = 2 * players;

  spec.cost_grad = [=](Index i, const Vector<double>& yi, const Vector<double>& eta) {
    Vector<double> grad = 2.0 * (yi - q.col(i));
    for (Index j = 0; j < players; ++j) {
      if (sym(i, j) == 0.0) continue;
      const Vector<double> yj = j == i ? yi : Vector<double>(eta.segment(2 * j, 2));
      grad += beta * sym(i, j) * (yj - h.col(j));
    }
    return grad;
  };
  spec.phi = [players](Index i, const Vector<double>& yi) {
    Vector<double> out = Vector<double>::Zero(2 * players);
    out.segment(2 * i, 2) = yi;
    return out;
  };
  spec.phi_jacobian = [players](Index i, const Vector<double>&) {
    Matrix<double> jac = Matrix<double>::Zero(2 * players, 2);
    jac.block(2 * i, 0, 2, 2).setIdentity();
    return jac;
  };
  spec.cost = [=](Index i, const Vector<double>& yi, const Vector<double>& sigma) {
    const Matrix<double> dev = Eigen::Map<const Matrix<double>>(sigma.data(), 2, players) - h;
    return (yi - q.col(i)).squaredNorm() + beta * (dev * lap.transpose()).cwiseProduct(dev).sum();
  };
  for (Index i = 0; i < players; ++i) {
    Matrix<double> a = Matrix<double>::Zero(2 * players, 2);
    for (Index r = 0; r < players; ++r) a.block(2 * r, 0, 2, 2) = lap(r, i) * Matrix<double>::Identity(2, 2);
    const Vector<double> d = a * h.col(i);
    spec.coupling.push_back({a, d});
    spec.boxes.emplace_back(Vector<double>::Constant(2, f.box_lower), Vector<double>::Constant(2, f.box_upper));
  }
  spec.validate();
  return spec;
}

GameSpec<double> der_game(const config::DerGame& d) {
  const Index players = d.demand.size();
  const double p0 = d.price_intercept, a = d.price_slope;
  const Vector<double> fixed = d.fixed_cost, lin = d.linear_cost, quad = d.quadratic_cost;

  GameSpec<double> spec;
  spec.n_players = players;
  spec.strategy_dim = 1;
  spec.aggregate_dim = 1;
  spec.constraint_dim = 1;
  spec.cost_grad = [=](Index i, const Vector<double>& yi, const Vector<double>& eta) {
    return Vector<double>::Constant(1, lin(i) + 2.0 * quad(i) * yi(0) - p0 + a * eta(0) + a * yi(0));
  };
  spec.phi = [](Index, const Vector<double>& yi) { return yi; };
  spec.phi_jacobian = [](Index, const Vector<double>&) { return Matrix<double>::Identity(1, 1); };
  spec.cost = [=](Index i, const Vector<double>& yi, const Vector<double>& sigma) {
    return fixed(i) + lin(i) * yi(0) + quad(i) * yi(0) * yi(0) - (p0 - a * sigma(0)) * yi(0);
  };
  for (Index i = 0; i < players; ++i) {
    spec.coupling.push_back({Matrix<double>::Ones(1, 1), Vector<double>::Constant(1, d.demand(i))});
    spec.boxes.emplace_back(Vector<double>::Constant(1, d.lower(i)), Vector<double>::Constant(1, d.upper(i)));
  }
  spec.validate();
  return spec;
}

Model build_model(const ScenarioConfig& cfg) {
  Digraph<double> graph = cfg.graph.build();
  GameSpec<double> game = std::holds_alternative<config::FormationGame>(cfg.game)
                              ? formation_game(std::get<config::FormationGame>(cfg.game), graph)
                              : der_game(std::get<config::DerGame>(cfg.game));
  if (game.n_players != graph.size()) throw ConfigError("scenario: game and graph disagree on the player count");
  auto dynamics = cfg.dynamics.build();
  if (static_cast<Index>(dynamics.size()) != game.n_players) {
    throw ConfigError("scenario: expected one gain entry per player");
  }

  std::optional<GeneratorPlant> generator;
  StateLayout layout;
  if (cfg.dynamics.plant == config::PlantKind::generator) {
    const auto* der = std::get_if<config::DerGame>(&cfg.game);
    if (!der) throw ConfigError("scenario: the generator plant needs the der game");
    generator.emplace(cfg.dynamics.generator, der->demand);
    layout = generator->layout(game);
  } else {
    layout = chain_layout(game, cfg.dynamics.order);
  }

  const Index n = game.strategy_dim;
  if (cfg.init.outputs.rows() != game.n_players || cfg.init.outputs.cols() != n) {
    throw ConfigError("scenario: init.outputs needs one row of " + std::to_string(n) + " per player");
  }
  SimState<double> s(layout);
  for (Index i = 0; i < game.n_players; ++i) {
    if (generator) {
      s.agent(i) = generator->initial_block(i, cfg.init.outputs(i, 0));
    } else {
      s.agent(i).head(n) = cfg.init.outputs.row(i).transpose();
    }
  }
  Vector<double> z0;
  if (cfg.init.z.size() > 0) {
    if (cfg.init.z.rows() != game.n_players || cfg.init.z.cols() != game.constraint_dim) {
      throw ConfigError("scenario: init.z needs one row of " + std::to_string(game.constraint_dim) + " per player");
    }
    const Matrix<double> zt = cfg.init.z.transpose();
    z0 = Eigen::Map<const Vector<double>>(zt.data(), zt.size());
  }
  SimState<double> initial = initialize_coordination(game, std::move(s), z0);

  return Model{cfg, std::move(graph), std::move(game), std::move(dynamics), layout, std::move(initial),
               std::move(generator)};
}

Vector<double> Model::field(const SimState<double>& s) const {
  if (generator) return generator->rhs(graph, game, dynamics, config.rule, s);
  if (config.dynamics.order == 2) return rhs_double_integrator(graph, game, dynamics, config.rule, s);
  return rhs_multi_integrator(graph, game, dynamics, config.rule, s);
}

SimState<double> Model::equilibrium(const Vector<double>& y_star, const Vector<double>& mu_star) const {
  using Block = StateLayout::Block;
  const SimState<double> chain = equilibrium_state(graph, game, config.dynamics.order, y_star, mu_star);
  if (!generator) return chain;
  SimState<double> s(layout);
  for (Index i = 0; i < game.n_players; ++i) s.agent(i) = generator->steady_block(i, chain.agent(i)(0));
  for (Block b : {Block::mu, Block::z, Block::eta, Block::w}) s.view(b) = chain.view(b);
  return s;
}

std::vector<double> Model::damping_gains() const {
  std::vector<double> k;
  for (const auto& d : dynamics) k.push_back(d.damping());
  return k;
}

Trajectory<double> Model::simulate(const IntegratorConfig<double>& cfg) const {
  cfg.validate(config.rule.epsilon);
  return integrate<double>([this](const SimState<double>& s) { return field(s); }, initial, cfg,
                           [this](const SimState<double>& s) { return residuals(s); });
}

bool coupled_set_nonempty(const GameSpec<double>& spec, double tol) {
  if (spec.constraint_dim == 0) return true;
  const Matrix<double> a = coupling_matrix(spec);
  const Vector<double> d = coupling_rhs(spec);
  const double norm = Eigen::JacobiSVD<Matrix<double>>(a).singularValues()(0);
  if (norm == 0.0) return d.norm() <= tol;
  const double step = 1.0 / (norm * norm);
  Vector<double> y = project(spec, Vector<double>(Vector<double>::Zero(spec.stacked_dim())));
  for (int it = 0; it < 200000; ++it) {
    const Vector<double> r = a * y - d;
    if (r.norm() <= tol) return true;
    y = project(spec, Vector<double>(y - step * a.transpose() * r));
  }
  return false;
}

}  // namespace gne::scenarios
