#include "gne/scenarios/runner.hpp"

#include "gne/scenarios/io.hpp"
#include "gne/scenarios/scenarios.hpp"

#include <algorithm>
#include <future>
#include <sstream>
#include <thread>

namespace gne::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct SimOutcome {
  int code = ok;
  double final_time = 0.0;
  KktReport<double> final_residuals;
  std::string log;
};

bool is_double_integrator(const config::ScenarioConfig& cfg) {
  return cfg.dynamics.order == 2 && cfg.dynamics.plant == config::PlantKind::integrator_chain;
}

/// Graph certificate and initial-state checks shared by simulate and sweep.
int validate(const scenarios::Model& model, std::ostream& log) {
  const auto sum = spectral_summary(model.graph);
  if (!sum.is_weight_balanced || !sum.is_strongly_connected) {
    log << "validation: graph must be weight balanced and strongly connected (balanced = "
        << (sum.is_weight_balanced ? "true" : "false")
        << ", strongly connected = " << (sum.is_strongly_connected ? "true" : "false") << ")\n";
    return validation_error;
  }
  int code = ok;
  for (const auto& v : validate_initial_state(model.initial, model.game)) {
    // x(0) in Omega is required by the double-integrator rule only.
    const bool fatal = v.code != "x_outside_box" || is_double_integrator(model.config);
    log << (fatal ? "validation: " : "warning: ") << v.code << ": " << v.detail << "\n";
    if (fatal) code = validation_error;
  }
  return code;
}

SimOutcome simulate_one(const config::ScenarioConfig& cfg, const fs::path& csv, const fs::path& report_stem) {
  SimOutcome res;
  std::ostringstream log;
  const scenarios::Model model = scenarios::build_model(cfg);
  res.code = validate(model, log);
  if (res.code != ok) {
    res.log = log.str();
    return res;
  }
  try {
    const Trajectory<double> traj = model.simulate();
    io::write_trajectory_csv(csv, model.game, traj);
    res.final_time = traj.times.back();
    res.final_residuals = traj.residuals.back();
    ordered_json j;
    j["scenario"] = cfg.name;
    j["final_time"] = res.final_time;
    j["stopped_early"] = traj.stopped_early;
    j["final"] = io::to_json(res.final_residuals);
    io::write_report(report_stem.string() + ".kkt",
                     "scenario = " + cfg.name + "\nfinal_time = " + config::format_number(res.final_time) + "\n" +
                         io::to_text(res.final_residuals),
                     j);
    log << "simulate: " << cfg.name << " reached t = " << res.final_time << ", max residual "
        << res.final_residuals.max() << "\n"
        << "wrote " << csv.string() << "\n";
  } catch (const IntegrationDiverged<double>& e) {
    if (e.partial().size() > 0) io::write_trajectory_csv(csv, model.game, e.partial());
    log << "diverged: " << e.what() << " (partial trajectory in " << csv.string() << ")\n";
    res.code = diverged;
    res.final_time = e.time();
  }
  res.log = log.str();
  return res;
}

config::ScenarioConfig load(const Command& cmd) {
  config::ScenarioConfig cfg = config::load_scenario(cmd.config);
  if (cmd.seed) cfg.analysis.seed = *cmd.seed;
  return cfg;
}

int do_simulate(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto cfg = load(cmd);
  const SimOutcome res =
      simulate_one(cfg, cmd.out_dir / cfg.outputs.trajectory, cmd.out_dir / cfg.outputs.report);
  (res.code == ok ? out : err) << res.log;
  return res.code;
}

int do_check(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto cfg = load(cmd);
  const scenarios::Model model = scenarios::build_model(cfg);
  const auto spectral = spectral_summary(model.graph);
  const auto mono = estimate_monotonicity(model.game, static_cast<int>(cfg.analysis.monotonicity_samples),
                                          cfg.analysis.seed);
  const bool coupled = scenarios::coupled_set_nonempty(model.game);
  const bool graph_ok = spectral.is_weight_balanced && spectral.is_strongly_connected;

  ordered_json j;
  j["scenario"] = cfg.name;
  j["spectral"] = io::to_json(spectral);
  j["monotonicity"] = io::to_json(mono);
  j["assumptions"] = {{"graph_balanced_and_connected", graph_ok},
                      {"boxes_nonempty", true},
                      {"coupled_set_nonempty", coupled},
                      {"omega_positive", !mono.assumption_violated}};
  std::string text = "scenario = " + cfg.name + "\n\n[spectral]\n" + io::to_text(spectral) + "\n[monotonicity]\n" +
                     io::to_text(mono) + "\n[assumptions]\ngraph_balanced_and_connected = " +
                     (graph_ok ? "true" : "false") + "\nboxes_nonempty = true\ncoupled_set_nonempty = " +
                     (coupled ? "true" : "false") + "\nomega_positive = " +
                     (mono.assumption_violated ? "false" : "true") + "\n";

  int code = ok;
  if (graph_ok) {
    ConditionReport<double> rep;
    std::string which;
    if (cfg.dynamics.order == 2) {
      which = "double_integrator";
      rep = check_theorem1(model.graph, model.game, model.damping_gains(), cfg.rule, mono);
    } else {
      which = "multi_integrator";
      rep = check_theorem2(model.dynamics, model.game, cfg.rule, model.graph, mono);
    }
    j["conditions"] = io::to_json(rep);
    j["conditions"]["rule"] = which;
    text += "\n[conditions]\nrule = " + which + "\n" + io::to_text(rep);
    out << "check: sufficient conditions " << (rep.satisfied ? "satisfied" : "not satisfied") << " (" << which
        << ")\n";
  } else {
    text += "\n[conditions]\nskipped: graph is not balanced and strongly connected\n";
  }
  io::write_report(cmd.out_dir / (cfg.outputs.report + ".check"), text, j);
  if (!graph_ok || !coupled || mono.assumption_violated) {
    err << "validation: standing assumptions do not hold (see " << (cfg.outputs.report + ".check.txt") << ")\n";
    code = validation_error;
  }
  return code;
}

int do_oracle(const Command& cmd, std::ostream& out, std::ostream&) {
  const auto cfg = load(cmd);
  const scenarios::Model model = scenarios::build_model(cfg);
  const auto mono = estimate_monotonicity(model.game, static_cast<int>(cfg.analysis.monotonicity_samples),
                                          cfg.analysis.seed);
  const auto res = oracle_gne(model.game, mono);
  const auto kkt = kkt_report(model.game, model.equilibrium(res.y, res.mu));

  ordered_json j = io::to_json(res);
  j["kkt"] = io::to_json(kkt);
  j["monotonicity"] = io::to_json(mono);
  io::write_report(cmd.out_dir / (cfg.outputs.report + ".oracle"),
                   "scenario = " + cfg.name + "\n" + io::to_text(res) + "\n[kkt]\n" + io::to_text(kkt), j);
  out << "oracle: converged in " << res.iterations << " iterations, residual " << res.residual << "\n";
  return ok;
}

std::vector<std::string> split_grid(const std::string& grid) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : grid) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int do_sweep(const Command& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.sweep_param.empty()) throw ConfigError("sweep: missing parameter key");
  const auto values = split_grid(cmd.sweep_grid);
  if (values.empty()) throw ConfigError("sweep: empty grid");
  const config::Document base = config::Document::load(cmd.config);
  if (!base.has(cmd.sweep_param)) throw ConfigError("sweep: '" + cmd.sweep_param + "' is not set in " + cmd.config.string());

  struct Point {
    std::string value;
    SimOutcome outcome;
  };
  std::vector<Point> points(values.size());
  auto job = [&](std::size_t k) {
    Point p;
    p.value = values[k];
    try {
      config::Document doc = base;
      doc.set(cmd.sweep_param, config::Document::parse_value(values[k]));
      config::ScenarioConfig cfg = config::from_document(doc);
      if (cmd.seed) cfg.analysis.seed = *cmd.seed;
      const std::string tag = "_" + std::to_string(k + 1);
      const fs::path csv = cmd.out_dir / (fs::path(cfg.outputs.trajectory).stem().string() + tag + ".csv");
      p.outcome = simulate_one(cfg, csv, cmd.out_dir / (cfg.outputs.report + tag));
    } catch (const ConfigError& e) {
      p.outcome.code = config_error;
      p.outcome.log = std::string("config error: ") + e.what() + "\n";
    }
    return p;
  };

  const unsigned workers = std::max(1u, cmd.workers ? cmd.workers : std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < values.size(); start += workers) {
    std::vector<std::future<Point>> batch;
    for (std::size_t k = start; k < std::min(values.size(), start + workers); ++k) {
      batch.push_back(std::async(std::launch::async, job, k));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) points[start + b] = batch[b].get();
  }

  std::string summary = "index,param,value,status,final_time,kkt_stationarity,kkt_feasibility,mu_consensus,eta_tracking\n";
  int code = ok;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    const auto& r = p.outcome.final_residuals;
    std::string value = p.value;
    std::replace(value.begin(), value.end(), ',', ';');
    summary += std::to_string(k + 1) + "," + cmd.sweep_param + "," + value + "," + std::to_string(p.outcome.code) +
               "," + config::format_number(p.outcome.final_time) + "," + config::format_number(r.stationarity) + "," +
               config::format_number(r.feasibility) + "," + config::format_number(r.mu_consensus) + "," +
               config::format_number(r.eta_tracking) + "\n";
    (p.outcome.code == ok ? out : err) << "[" << cmd.sweep_param << " = " << p.value << "] " << p.outcome.log;
    if (code == ok) code = p.outcome.code;
  }
  io::write_file(cmd.out_dir / "sweep_summary.csv", summary);
  out << "wrote " << (cmd.out_dir / "sweep_summary.csv").string() << "\n";
  return code;
}

}  // namespace

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.name == "simulate") return do_simulate(cmd, out, err);
    if (cmd.name == "check") return do_check(cmd, out, err);
    if (cmd.name == "oracle") return do_oracle(cmd, out, err);
    if (cmd.name == "sweep") return do_sweep(cmd, out, err);
    err << "unknown command '" << cmd.name << "'\n";
    return config_error;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const PreconditionError& e) {
    err << "validation: " << e.what() << "\n";
    return validation_error;
  } catch (const OracleError& e) {
    err << "oracle failed: " << e.what() << "\n";
    return oracle_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gne::cli
