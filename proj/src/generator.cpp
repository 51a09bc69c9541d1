#include "gne/scenarios/generator.hpp"

namespace gne::scenarios {

GeneratorPlant::GeneratorPlant(config::GeneratorParams params, Vector<double> demand)
    : params_(std::move(params)), demand_(std::move(demand)) {
  const Index n = demand_.size();
  for (const auto* v : {&params_.turbine_time, &params_.governor_time, &params_.turbine_gain, &params_.governor_gain,
                        &params_.damping, &params_.inertia, &params_.regulation}) {
    if (v->size() != n) throw ConfigError("generator: parameter vectors must have one entry per unit");
  }
}

StateLayout GeneratorPlant::layout(const GameSpec<double>& spec) const {
  if (spec.strategy_dim != 1 || spec.n_players != size()) {
    throw ConfigError("generator: needs scalar strategies and one unit per player");
  }
  return StateLayout{spec.n_players, 1, width, spec.constraint_dim, spec.aggregate_dim};
}

Vector<double> GeneratorPlant::chain_coordinates(Index i, const Eigen::Ref<const Vector<double>>& b) const {
  const double tm = params_.turbine_time(i), te = params_.governor_time(i), km = params_.turbine_gain(i);
  const double governor = params_.governor_gain(i) / (te * params_.regulation(i) * params_.base_speed);
  const double p = b(0), xe = b(1), w = b(2), u = b(3);
  const double p_dot = -p / tm + km / tm * xe;
  const double xe_dot = -governor * w - xe / te + u / te;
  Vector<double> out(3);
  out << p, p_dot, -p_dot / tm + km / tm * xe_dot;
  return out;
}

Vector<double> GeneratorPlant::steady_block(Index i, double power) const {
  const double xe = power / params_.turbine_gain(i);
  const double w = params_.base_speed * (power - demand_(i)) / params_.damping(i);
  Vector<double> b(width);
  b << power, xe, w, xe + params_.governor_gain(i) * w / (params_.regulation(i) * params_.base_speed);
  return b;
}

Vector<double> GeneratorPlant::initial_block(Index i, double power) const {
  const double xe = power / params_.turbine_gain(i);
  Vector<double> b(width);
  b << power, xe, 0.0, xe;
  return b;
}

Vector<double> GeneratorPlant::rhs(const Digraph<double>& g, const GameSpec<double>& spec,
                                   const std::vector<AgentDynamicsSpec<double>>& dyn, const RuleParams<double>& p,
                                   const SimState<double>& s) const {
  detail::require_compatible(g, spec, s.layout, s.data.size());
  if (s.layout.agent_width != width || static_cast<Index>(dyn.size()) != size()) {
    throw ConfigError("generator: state layout or dynamics do not match the plant");
  }
  const Vector<double> y = outputs(spec, s);
  SimState<double> ds(s.layout);
  for (Index i = 0; i < size(); ++i) {
    const auto& feedback = dyn[static_cast<std::size_t>(i)].feedback();
    if (feedback.size() != 3) throw ConfigError("generator: the plant needs third-order feedback rows");
    const double tm = params_.turbine_time(i), te = params_.governor_time(i), km = params_.turbine_gain(i);
    const double governor = params_.governor_gain(i) / (te * params_.regulation(i) * params_.base_speed);
    const double two_h = 2.0 * params_.inertia(i);

    const auto b = s.agent(i);
    const double pw = b(0), xe = b(1), w = b(2), u = b(3);
    const double p_dot = -pw / tm + km / tm * xe;
    const double xe_dot = -governor * w - xe / te + u / te;
    const double w_dot = -params_.damping(i) / two_h * w + params_.base_speed / two_h * (pw - demand_(i));
    const double p_ddot = -p_dot / tm + km / tm * xe_dot;

    const Vector<double> yi = y.segment(i, 1);
    Vector<double> chain(3);
    chain << pw, p_dot, p_ddot;
    const double nu = -feedback.dot(chain) + agent_drive(spec, s, i, yi)(0);
    const double u_dot = te * ((tm / km) * (nu + p_ddot / tm) + governor * w_dot + xe_dot / te);

    ds.agent(i) << p_dot, xe_dot, w_dot, u_dot;
  }
  coordination_rhs(g, spec, p, s, y, ds);
  return std::move(ds.data);
}

}  // namespace gne::scenarios
