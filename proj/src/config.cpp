#include "gne/scenarios/config.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gne::config {

namespace {

bool same(const Matrix<double>& a, const Matrix<double>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same(const Vector<double>& a, const Vector<double>& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

Vector<double> to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector<double>>(v.data(), static_cast<Index>(v.size()));
}

Value number_list(const Vector<double>& v) {
  Value::Array out;
  for (Index k = 0; k < v.size(); ++k) out.push_back(Value::number(v(k)));
  return Value::array(std::move(out));
}

Value number_rows(const Matrix<double>& m) {
  Value::Array out;
  for (Index i = 0; i < m.rows(); ++i) out.push_back(number_list(m.row(i).transpose()));
  return Value::array(std::move(out));
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(doc_.where(key) + ": " + msg);
  }

  Vector<double> vector(const std::string& key, Index expected) const {
    const auto v = doc_.numbers(key);
    if (static_cast<Index>(v.size()) != expected) {
      fail(key, "'" + key + "' needs " + std::to_string(expected) + " entries, found " + std::to_string(v.size()));
    }
    return to_vector(v);
  }

  Matrix<double> rows(const std::string& key, Index n_rows, Index n_cols) const {
    const auto r = doc_.number_rows(key);
    if (static_cast<Index>(r.size()) != n_rows) {
      fail(key, "'" + key + "' needs " + std::to_string(n_rows) + " rows, found " + std::to_string(r.size()));
    }
    Matrix<double> m(n_rows, n_cols);
    for (Index i = 0; i < n_rows; ++i) {
      const auto& row = r[static_cast<std::size_t>(i)];
      if (static_cast<Index>(row.size()) != n_cols) {
        fail(key, "row " + std::to_string(i + 1) + " of '" + key + "' needs " + std::to_string(n_cols) + " entries");
      }
      m.row(i) = to_vector(row).transpose();
    }
    return m;
  }

  /// Rows of `n_cols` entries, or a flat list when `n_cols` is 1.
  Matrix<double> rows_or_flat(const std::string& key, Index n_rows, Index n_cols) const {
    const Value& v = doc_.at(key);
    if (!v.is_array()) fail(key, "'" + key + "' must be an array");
    const auto& arr = std::get<Value::Array>(v.data);
    if (n_cols == 1 && (arr.empty() || arr.front().is_number())) return vector(key, n_rows);
    return rows(key, n_rows, n_cols);
  }

  template <typename Fn>
  auto guarded(const std::string& key, Fn&& fn) const {
    try {
      return fn();
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      if (what.rfind(doc_.source(), 0) == 0) throw;
      fail(key, what);
    }
  }

  const Document& doc_;
};

GraphConfig read_graph(const Reader& rd) {
  const Document& doc = rd.doc_;
  GraphConfig g;
  g.nodes = doc.integer("graph.nodes");
  if (g.nodes <= 0) rd.fail("graph.nodes", "graph.nodes must be positive");
  for (const auto& e : doc.number_rows("graph.edges")) {
    if (e.size() != 3) rd.fail("graph.edges", "each edge is [from, to, weight]");
    if (std::floor(e[0]) != e[0] || std::floor(e[1]) != e[1] || e[0] < 1 || e[1] < 1 || e[0] > double(g.nodes) ||
        e[1] > double(g.nodes)) {
      rd.fail("graph.edges", "edge endpoints must be node labels 1.." + std::to_string(g.nodes));
    }
    g.edges.push_back({static_cast<Index>(e[0]) - 1, static_cast<Index>(e[1]) - 1, e[2]});
  }
  rd.guarded("graph.edges", [&] { return g.build(); });
  return g;
}

FormationGame read_formation(const Reader& rd, Index players) {
  const Document& doc = rd.doc_;
  FormationGame f;
  f.beta = doc.number("game.beta");
  f.targets = rd.rows("game.targets", players, 2);
  if (doc.has("game.offsets")) {
    f.offsets = rd.rows("game.offsets", players, 2);
  } else {
    f.offsets = circle_offsets(players, doc.number("game.offset_radius"));
  }
  const auto box = doc.numbers("game.box");
  if (box.size() != 2 || !(box[0] <= box[1])) rd.fail("game.box", "game.box must be [lower, upper] with lower <= upper");
  f.box_lower = box[0];
  f.box_upper = box[1];
  return f;
}

DerGame read_der(const Reader& rd, Index players) {
  const Document& doc = rd.doc_;
  DerGame d;
  d.fixed_cost = rd.vector("game.fixed_cost", players);
  d.linear_cost = rd.vector("game.linear_cost", players);
  d.quadratic_cost = rd.vector("game.quadratic_cost", players);
  d.demand = rd.vector("game.demand", players);
  d.lower = rd.vector("game.lower", players);
  d.upper = rd.vector("game.upper", players);
  d.price_intercept = doc.number("game.price_intercept");
  d.price_slope = doc.number("game.price_slope");
  for (Index i = 0; i < players; ++i) {
    if (!(d.lower(i) <= d.upper(i))) rd.fail("game.lower", "box " + std::to_string(i + 1) + " is empty");
  }
  return d;
}

DynamicsConfig read_dynamics(const Reader& rd, Index players) {
  const Document& doc = rd.doc_;
  DynamicsConfig dc;
  dc.order = doc.integer("dynamics.order");
  if (dc.order < 2) rd.fail("dynamics.order", "dynamics.order must be at least 2");
  if (dc.order == 2) {
    const Vector<double> k = rd.vector("dynamics.gains", players);
    for (Index i = 0; i < players; ++i) dc.gains.push_back(Vector<double>::Constant(1, k(i)));
  } else {
    const Matrix<double> k = rd.rows("dynamics.gains", players, dc.order);
    for (Index i = 0; i < players; ++i) dc.gains.push_back(k.row(i).transpose());
  }
  const std::string plant = doc.string_or("dynamics.plant", "chain");
  if (plant == "chain") {
    dc.plant = PlantKind::integrator_chain;
  } else if (plant == "generator") {
    dc.plant = PlantKind::generator;
    if (dc.order != 3) rd.fail("dynamics.plant", "the generator plant is driven by the third-order rule");
    auto& g = dc.generator;
    g.turbine_time = rd.vector("dynamics.generator.turbine_time", players);
    g.governor_time = rd.vector("dynamics.generator.governor_time", players);
    g.turbine_gain = rd.vector("dynamics.generator.turbine_gain", players);
    g.governor_gain = rd.vector("dynamics.generator.governor_gain", players);
    g.damping = rd.vector("dynamics.generator.damping", players);
    g.inertia = rd.vector("dynamics.generator.inertia", players);
    g.regulation = rd.vector("dynamics.generator.regulation", players);
    g.base_speed = doc.number_or("dynamics.generator.base_speed", 1.0);
    for (const auto* v : {&g.turbine_time, &g.governor_time, &g.turbine_gain, &g.governor_gain, &g.damping,
                          &g.inertia, &g.regulation}) {
      if (!(v->array() > 0.0).all()) rd.fail("dynamics.generator.turbine_time", "generator parameters must be positive");
    }
    if (!(g.base_speed > 0.0)) rd.fail("dynamics.generator.base_speed", "base_speed must be positive");
  } else {
    rd.fail("dynamics.plant", "unknown plant '" + plant + "' (chain or generator)");
  }
  rd.guarded("dynamics.gains", [&] { return dc.build(); });
  return dc;
}

}  // namespace

bool GraphConfig::operator==(const GraphConfig& o) const {
  if (nodes != o.nodes || edges.size() != o.edges.size()) return false;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto &a = edges[k], &b = o.edges[k];
    if (a.from != b.from || a.to != b.to || a.weight != b.weight) return false;
  }
  return true;
}

bool FormationGame::operator==(const FormationGame& o) const {
  return beta == o.beta && same(targets, o.targets) && same(offsets, o.offsets) && box_lower == o.box_lower &&
         box_upper == o.box_upper;
}

bool DerGame::operator==(const DerGame& o) const {
  return same(fixed_cost, o.fixed_cost) && same(linear_cost, o.linear_cost) && same(quadratic_cost, o.quadratic_cost) &&
         same(demand, o.demand) && same(lower, o.lower) && same(upper, o.upper) &&
         price_intercept == o.price_intercept && price_slope == o.price_slope;
}

bool GeneratorParams::operator==(const GeneratorParams& o) const {
  return same(turbine_time, o.turbine_time) && same(governor_time, o.governor_time) &&
         same(turbine_gain, o.turbine_gain) && same(governor_gain, o.governor_gain) && same(damping, o.damping) &&
         same(inertia, o.inertia) && same(regulation, o.regulation) && base_speed == o.base_speed;
}

bool DynamicsConfig::operator==(const DynamicsConfig& o) const {
  if (order != o.order || plant != o.plant || gains.size() != o.gains.size()) return false;
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (!same(gains[k], o.gains[k])) return false;
  }
  return plant != PlantKind::generator || generator == o.generator;
}

bool InitConfig::operator==(const InitConfig& o) const { return same(outputs, o.outputs) && same(z, o.z); }

std::vector<AgentDynamicsSpec<double>> DynamicsConfig::build() const {
  std::vector<AgentDynamicsSpec<double>> out;
  for (const auto& k : gains) out.push_back(AgentDynamicsSpec<double>::from_gains(order, k));
  return out;
}

Index ScenarioConfig::players() const { return graph.nodes; }

Matrix<double> circle_offsets(Index players, double radius) {
  Matrix<double> h(players, 2);
  for (Index i = 0; i < players; ++i) {
    const double angle = 2.0 * std::numbers::pi / static_cast<double>(players) * static_cast<double>(i);
    h(i, 0) = radius * std::cos(angle);
    h(i, 1) = radius * std::sin(angle);
  }
  return h;
}

ScenarioConfig from_document(const Document& doc) {
  static const std::vector<std::string> known = {
      "name", "graph.nodes", "graph.edges", "game.kind", "game.beta", "game.targets", "game.offsets",
      "game.offset_radius", "game.box", "game.fixed_cost", "game.linear_cost", "game.quadratic_cost", "game.demand",
      "game.lower", "game.upper", "game.price_intercept", "game.price_slope", "dynamics.order", "dynamics.gains",
      "dynamics.plant", "dynamics.generator.turbine_time", "dynamics.generator.governor_time",
      "dynamics.generator.turbine_gain", "dynamics.generator.governor_gain", "dynamics.generator.damping",
      "dynamics.generator.inertia", "dynamics.generator.regulation", "dynamics.generator.base_speed", "rule.alpha",
      "rule.epsilon", "integrator.step", "integrator.t_end", "integrator.record_every", "integrator.stop_tol",
      "init.outputs", "init.z", "output.trajectory", "output.report", "analysis.samples", "analysis.seed"};
  for (const auto& [key, value] : doc.entries()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(doc.where(key) + ": unknown key '" + key + "'");
    }
  }
  const Reader rd(doc);
  ScenarioConfig cfg;
  cfg.name = doc.string_or("name", "scenario");
  cfg.graph = read_graph(rd);
  const Index n_players = cfg.graph.nodes;

  const std::string kind = doc.string("game.kind");
  Index strategy_dim = 1, constraint_dim = 1;
  if (kind == "formation") {
    cfg.game = read_formation(rd, n_players);
    strategy_dim = 2;
    constraint_dim = 2 * n_players;
  } else if (kind == "der") {
    cfg.game = read_der(rd, n_players);
  } else {
    rd.fail("game.kind", "unknown game kind '" + kind + "' (formation or der)");
  }

  cfg.dynamics = read_dynamics(rd, n_players);
  if (cfg.dynamics.plant == PlantKind::generator && kind != "der") {
    rd.fail("dynamics.plant", "the generator plant needs the der game");
  }

  cfg.rule.alpha = doc.number("rule.alpha");
  cfg.rule.epsilon = doc.number("rule.epsilon");
  rd.guarded("rule.alpha", [&] {
    cfg.rule.validate();
    return 0;
  });

  auto& in = cfg.integrator;
  in.step = doc.number("integrator.step");
  in.t_end = doc.number("integrator.t_end");
  in.record_every = doc.integer_or("integrator.record_every", 1);
  in.stop_tol = doc.number_or("integrator.stop_tol", 0.0);
  rd.guarded("integrator.step", [&] {
    in.validate(cfg.rule.epsilon);
    return 0;
  });

  cfg.init.outputs = rd.rows_or_flat("init.outputs", n_players, strategy_dim);
  if (doc.has("init.z")) {
    cfg.init.z = rd.rows_or_flat("init.z", n_players, constraint_dim);
    if (cfg.init.z.colwise().sum().cwiseAbs().maxCoeff() > 1e-12) {
      rd.fail("init.z", "init.z must sum to zero over agents");
    }
  }

  cfg.outputs.trajectory = doc.string_or("output.trajectory", cfg.name + ".csv");
  cfg.outputs.report = doc.string_or("output.report", cfg.name);
  cfg.analysis.monotonicity_samples = doc.integer_or("analysis.samples", 2000);
  if (cfg.analysis.monotonicity_samples < 2) rd.fail("analysis.samples", "analysis.samples must be at least 2");
  const long seed = doc.integer_or("analysis.seed", 1);
  if (seed < 0) rd.fail("analysis.seed", "analysis.seed must be non-negative");
  cfg.analysis.seed = static_cast<std::uint64_t>(seed);
  return cfg;
}

Document to_document(const ScenarioConfig& cfg) {
  Document doc;
  doc.set("name", Value::string(cfg.name));

  doc.set("graph.nodes", Value::number(static_cast<double>(cfg.graph.nodes)));
  Value::Array edges;
  for (const auto& e : cfg.graph.edges) {
    edges.push_back(Value::array({Value::number(static_cast<double>(e.from + 1)),
                                  Value::number(static_cast<double>(e.to + 1)), Value::number(e.weight)}));
  }
  doc.set("graph.edges", Value::array(std::move(edges)));

  if (const auto* f = std::get_if<FormationGame>(&cfg.game)) {
    doc.set("game.kind", Value::string("formation"));
    doc.set("game.beta", Value::number(f->beta));
    doc.set("game.targets", number_rows(f->targets));
    doc.set("game.offsets", number_rows(f->offsets));
    doc.set("game.box", Value::array({Value::number(f->box_lower), Value::number(f->box_upper)}));
  } else {
    const auto& d = std::get<DerGame>(cfg.game);
    doc.set("game.kind", Value::string("der"));
    doc.set("game.fixed_cost", number_list(d.fixed_cost));
    doc.set("game.linear_cost", number_list(d.linear_cost));
    doc.set("game.quadratic_cost", number_list(d.quadratic_cost));
    doc.set("game.demand", number_list(d.demand));
    doc.set("game.lower", number_list(d.lower));
    doc.set("game.upper", number_list(d.upper));
    doc.set("game.price_intercept", Value::number(d.price_intercept));
    doc.set("game.price_slope", Value::number(d.price_slope));
  }

  const auto& dc = cfg.dynamics;
  doc.set("dynamics.order", Value::number(static_cast<double>(dc.order)));
  if (dc.order == 2) {
    Value::Array k;
    for (const auto& g : dc.gains) k.push_back(Value::number(g(0)));
    doc.set("dynamics.gains", Value::array(std::move(k)));
  } else {
    Value::Array rows;
    for (const auto& g : dc.gains) rows.push_back(number_list(g));
    doc.set("dynamics.gains", Value::array(std::move(rows)));
  }
  doc.set("dynamics.plant", Value::string(dc.plant == PlantKind::generator ? "generator" : "chain"));
  if (dc.plant == PlantKind::generator) {
    const auto& g = dc.generator;
    doc.set("dynamics.generator.turbine_time", number_list(g.turbine_time));
    doc.set("dynamics.generator.governor_time", number_list(g.governor_time));
    doc.set("dynamics.generator.turbine_gain", number_list(g.turbine_gain));
    doc.set("dynamics.generator.governor_gain", number_list(g.governor_gain));
    doc.set("dynamics.generator.damping", number_list(g.damping));
    doc.set("dynamics.generator.inertia", number_list(g.inertia));
    doc.set("dynamics.generator.regulation", number_list(g.regulation));
    doc.set("dynamics.generator.base_speed", Value::number(g.base_speed));
  }

  doc.set("rule.alpha", Value::number(cfg.rule.alpha));
  doc.set("rule.epsilon", Value::number(cfg.rule.epsilon));

  doc.set("integrator.step", Value::number(cfg.integrator.step));
  doc.set("integrator.t_end", Value::number(cfg.integrator.t_end));
  doc.set("integrator.record_every", Value::number(static_cast<double>(cfg.integrator.record_every)));
  doc.set("integrator.stop_tol", Value::number(cfg.integrator.stop_tol));

  doc.set("init.outputs", number_rows(cfg.init.outputs));
  if (cfg.init.z.size() > 0) doc.set("init.z", number_rows(cfg.init.z));

  doc.set("output.trajectory", Value::string(cfg.outputs.trajectory));
  doc.set("output.report", Value::string(cfg.outputs.report));
  doc.set("analysis.samples", Value::number(static_cast<double>(cfg.analysis.monotonicity_samples)));
  doc.set("analysis.seed", Value::number(static_cast<double>(cfg.analysis.seed)));
  return doc;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return from_document(Document::load(path)); }

ScenarioConfig parse_scenario(std::string_view text, std::string source) {
  return from_document(Document::parse(text, std::move(source)));
}

std::string serialize_scenario(const ScenarioConfig& cfg) { return to_document(cfg).serialize(); }

}  // namespace gne::config
