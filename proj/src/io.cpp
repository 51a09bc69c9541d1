#include "gne/scenarios/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gne::io {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json array(const Vector<double>& v) {
  auto out = nlohmann::ordered_json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

std::string list(const Vector<double>& v) {
  std::string out = "[";
  for (Index k = 0; k < v.size(); ++k) out += (k ? ", " : "") + num(v(k));
  return out + "]";
}

}  // namespace

std::string csv_header(const GameSpec<double>& spec) {
  std::string h = "time";
  auto block = [&](const char* name, Index width) {
    for (Index i = 1; i <= spec.n_players; ++i) {
      for (Index j = 1; j <= width; ++j) h += "," + std::string(name) + "_" + std::to_string(i) + "_" + std::to_string(j);
    }
  };
  block("y", spec.strategy_dim);
  block("mu", spec.constraint_dim);
  block("eta", spec.aggregate_dim);
  h += ",kkt_stationarity,kkt_feasibility,mu_consensus,eta_tracking";
  return h;
}

void write_trajectory_csv(std::ostream& os, const GameSpec<double>& spec, const Trajectory<double>& traj) {
  using Block = StateLayout::Block;
  os << csv_header(spec) << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    const KktReport<double> rep = k < traj.residuals.size() ? traj.residuals[k] : kkt_report(spec, s);
    std::string line = num(traj.times[k]);
    const Vector<double> y = outputs(spec, s);
    for (Index j = 0; j < y.size(); ++j) line += "," + num(y(j));
    for (Block b : {Block::mu, Block::eta}) {
      const auto v = s.view(b);
      for (Index i = 0; i < v.cols(); ++i) {
        for (Index j = 0; j < v.rows(); ++j) line += "," + num(v(j, i));
      }
    }
    line += "," + num(rep.stationarity) + "," + num(rep.feasibility) + "," + num(rep.mu_consensus) + "," +
            num(rep.eta_tracking);
    os << line << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const GameSpec<double>& spec,
                          const Trajectory<double>& traj) {
  std::ostringstream os;
  write_trajectory_csv(os, spec, traj);
  write_file(path, os.str());
}

nlohmann::ordered_json to_json(const KktReport<double>& rep) {
  return {{"stationarity", rep.stationarity},
          {"feasibility", rep.feasibility},
          {"mu_consensus", rep.mu_consensus},
          {"eta_tracking", rep.eta_tracking},
          {"stationarity_local", rep.stationarity_local}};
}

nlohmann::ordered_json to_json(const ConditionReport<double>& rep) {
  nlohmann::ordered_json j;
  j["satisfied"] = rep.satisfied;
  auto margins = nlohmann::ordered_json::array();
  for (const auto& m : rep.margins) {
    margins.push_back({{"id", m.id}, {"relation", std::string(1, m.relation)}, {"lhs", m.lhs}, {"rhs", m.rhs},
                       {"slack", m.slack}});
  }
  j["margins"] = margins;
  j["searched_a1"] = rep.searched_a1 ? nlohmann::ordered_json(*rep.searched_a1) : nlohmann::ordered_json(nullptr);
  j["notes"] = rep.notes;
  return j;
}

nlohmann::ordered_json to_json(const MonotonicityEstimate<double>& est) {
  return {{"omega", est.omega},
          {"theta", est.theta},
          {"method", to_string(est.method)},
          {"assumption_violated", est.assumption_violated}};
}

nlohmann::ordered_json to_json(const SpectralSummary<double>& sum) {
  return {{"lambda2", sum.lambda2},
          {"laplacian_norm", sum.laplacian_norm},
          {"is_weight_balanced", sum.is_weight_balanced},
          {"is_strongly_connected", sum.is_strongly_connected}};
}

nlohmann::ordered_json to_json(const OracleResult<double>& res) {
  nlohmann::ordered_json j;
  j["y"] = array(res.y);
  j["mu"] = array(res.mu);
  j["iterations"] = res.iterations;
  j["residual"] = res.residual;
  j["step"] = res.step;
  j["linear_check_error"] =
      res.linear_check_error ? nlohmann::ordered_json(*res.linear_check_error) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string to_text(const KktReport<double>& rep) {
  return "stationarity = " + num(rep.stationarity) + "\nfeasibility = " + num(rep.feasibility) +
         "\nmu_consensus = " + num(rep.mu_consensus) + "\neta_tracking = " + num(rep.eta_tracking) +
         "\nstationarity_local = " + num(rep.stationarity_local) + "\n";
}

std::string to_text(const ConditionReport<double>& rep) {
  std::string out = std::string("satisfied = ") + (rep.satisfied ? "true" : "false") + "\n";
  if (rep.searched_a1) out += "searched_a1 = " + num(*rep.searched_a1) + "\n";
  for (const auto& m : rep.margins) {
    out += "margin " + m.id + ": " + num(m.lhs) + " " + m.relation + " " + num(m.rhs) + "  slack = " + num(m.slack) +
           "\n";
  }
  for (const auto& n : rep.notes) out += "note: " + n + "\n";
  return out;
}

std::string to_text(const MonotonicityEstimate<double>& est) {
  return "omega = " + num(est.omega) + "\ntheta = " + num(est.theta) + "\nmethod = " + to_string(est.method) +
         "\nassumption_violated = " + (est.assumption_violated ? "true" : "false") + "\n";
}

std::string to_text(const SpectralSummary<double>& sum) {
  return "lambda2 = " + num(sum.lambda2) + "\nlaplacian_norm = " + num(sum.laplacian_norm) +
         "\nis_weight_balanced = " + (sum.is_weight_balanced ? "true" : "false") +
         "\nis_strongly_connected = " + (sum.is_strongly_connected ? "true" : "false") + "\n";
}

std::string to_text(const OracleResult<double>& res) {
  std::string out = "y = " + list(res.y) + "\nmu = " + list(res.mu) + "\niterations = " +
                    std::to_string(res.iterations) + "\nresidual = " + num(res.residual) + "\nstep = " + num(res.step) +
                    "\n";
  if (res.linear_check_error) out += "linear_check_error = " + num(*res.linear_check_error) + "\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

void write_report(const std::filesystem::path& stem, const std::string& text, const nlohmann::ordered_json& json) {
  write_file(stem.string() + ".txt", text);
  write_file(stem.string() + ".json", json.dump(2) + "\n");
}

}  // namespace gne::io
