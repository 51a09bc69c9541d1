#include "gne/scenarios/io.hpp"
#include "gne/scenarios/runner.hpp"
#include "gne/scenarios/scenarios.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace gne;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Fresh directory under the system temp dir, removed on scope exit.
class Scratch {
 public:
  Scratch() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / ("gne_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scenario_text(const std::string& name) {
  return read_file(fs::path(GNE_SCENARIO_DIR) / (name + ".toml"));
}

std::string replace_line(std::string text, const std::string& prefix, const std::string& line) {
  const auto at = text.find("\n" + prefix);
  REQUIRE(at != std::string::npos);
  const auto end = text.find('\n', at + 1);
  return text.replace(at + 1, end - at - 1, line);
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run(const std::string& command, const fs::path& config, const fs::path& out_dir,
              const std::string& param = "", const std::string& grid = "") {
  cli::Command cmd;
  cmd.name = command;
  cmd.config = config;
  cmd.out_dir = out_dir;
  cmd.sweep_param = param;
  cmd.sweep_grid = grid;
  cmd.workers = 2;
  std::ostringstream out, err;
  const int code = cli::run(cmd, out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string line = std::string(GNE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(line.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');) out.push_back(c);
  return out;
}

std::string short_formation(double t_end = 20.0) {
  return replace_line(scenario_text("formation"), "t_end =", "t_end = " + config::format_number(t_end));
}

}  // namespace

TEST_CASE("simulate writes the trajectory and the final residuals") {
  Scratch dir;
  const auto cfg = dir.write("f.toml", short_formation());
  const auto r = run("simulate", cfg, dir.path());
  CHECK(r.code == cli::ok);
  CHECK(r.err.empty());
  const auto rows = lines_of(read_file(dir.path() / "formation.csv"));
  REQUIRE(rows.size() == 42);  // header, then t = 0, 0.5, ..., 20
  const auto header = split(rows.front());
  CHECK(header.size() == 1 + 10 + 50 + 50 + 4);
  CHECK(header[0] == "time");
  CHECK(header[1] == "y_1_1");
  CHECK(header[10] == "y_5_2");
  CHECK(header[11] == "mu_1_1");
  CHECK(header[61] == "eta_1_1");
  CHECK(header[header.size() - 4] == "kkt_stationarity");
  CHECK(header.back() == "eta_tracking");
  CHECK(rows.front() == io::csv_header(scenarios::build_model(scenarios::formation()).game));
  CHECK(std::stod(split(rows.back()).front()) == 20.0);
  for (const auto& row : rows) CHECK(split(row).size() == header.size());

  const json rep = json::parse(read_file(dir.path() / "formation.kkt.json"));
  CHECK(rep["final_time"] == 20.0);
  CHECK(rep["final"]["feasibility"].get<double>() == std::stod(split(rows.back())[header.size() - 3]));
  CHECK(fs::exists(dir.path() / "formation.kkt.txt"));
}

TEST_CASE("two runs give byte-identical CSV files") {
  Scratch a, b;
  const std::string text = replace_line(scenario_text("der"), "t_end =", "t_end = 5.0");
  CHECK(run("simulate", a.write("d.toml", text), a.path()).code == cli::ok);
  CHECK(run("simulate", b.write("d.toml", text), b.path()).code == cli::ok);
  const std::string first = read_file(a.path() / "der.csv");
  CHECK(first.size() > 1000);
  CHECK(first == read_file(b.path() / "der.csv"));
}

TEST_CASE("malformed config exits with 2 and names the line") {
  Scratch dir;
  const auto cfg = dir.write("bad.toml", replace_line(scenario_text("formation"), "beta =", "beta = five"));
  const auto r = run("simulate", cfg, dir.path());
  CHECK(r.code == cli::config_error);
  CHECK(r.err.find("bad.toml:16: invalid number 'five'") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "formation.csv"));

  CHECK(run("simulate", dir.path() / "missing.toml", dir.path()).code == cli::config_error);
  CHECK(run("bogus", cfg, dir.path()).code == cli::config_error);
  CHECK(run("sweep", dir.write("ok.toml", short_formation()), dir.path(), "rule.nothing", "1").code ==
        cli::config_error);
}

TEST_CASE("standing-assumption violations exit with 3") {
  Scratch dir;
  SUBCASE("double integrator starting outside its box") {
    const auto cfg = dir.write("f.toml", replace_line(short_formation(), "outputs =",
                                                      "outputs = [[20.0, 0.0], [-0.5, 0.0], [0.0, -0.5], [0.2, 0.0], "
                                                      "[0.0, 0.2]]"));
    const auto r = run("simulate", cfg, dir.path());
    CHECK(r.code == cli::validation_error);
    CHECK(r.err.find("x_outside_box") != std::string::npos);
  }
  SUBCASE("unbalanced graph") {
    const auto cfg = dir.write("f.toml", replace_line(short_formation(), "  [1, 3, 1.0], [3, 1, 1.0],", "  [1, 3, 1.0],"));
    const auto r = run("simulate", cfg, dir.path());
    CHECK(r.code == cli::validation_error);
    CHECK(r.err.find("weight balanced") != std::string::npos);
    CHECK(run("check", cfg, dir.path()).code == cli::validation_error);
    const json rep = json::parse(read_file(dir.path() / "formation.check.json"));
    CHECK(rep["assumptions"]["graph_balanced_and_connected"] == false);
  }
  SUBCASE("higher-order plants may start outside the box") {
    const auto cfg = dir.write("d.toml", replace_line(scenario_text("der_chain"), "t_end =", "t_end = 1.0"));
    const auto r = run("simulate", cfg, dir.path());
    CHECK(r.code == cli::ok);
    CHECK(r.err.empty());
    CHECK(r.out.find("warning: x_outside_box") != std::string::npos);
  }
}

TEST_CASE("divergence exits with 4 and keeps the partial trajectory") {
  Scratch dir;
  std::string text = replace_line(short_formation(2000.0), "epsilon =", "epsilon = 10.0");
  text = replace_line(text, "step =", "step = 1.0");
  text = replace_line(text, "record_every =", "record_every = 1");
  const auto r = run("simulate", dir.write("f.toml", text), dir.path());
  CHECK(r.code == cli::diverged);
  CHECK(r.err.find("diverged") != std::string::npos);
  const auto rows = lines_of(read_file(dir.path() / "formation.csv"));
  CHECK(rows.size() > 2);
  CHECK(rows.size() < 2002);
}

TEST_CASE("oracle failure exits with 5") {
  Scratch dir;
  // Total demand beyond every unit's capacity leaves no feasible point.
  const auto cfg = dir.write("d.toml", replace_line(scenario_text("der_chain"), "demand =",
                                                    "demand = [100.0, 100.0, 100.0, 100.0, 100.0, 100.0]"));
  const auto r = run("oracle", cfg, dir.path());
  CHECK(r.code == cli::oracle_failed);
  CHECK(r.err.find("oracle failed") != std::string::npos);
  CHECK(run("check", cfg, dir.path()).code == cli::validation_error);
}

TEST_CASE("check reports the sufficient conditions") {
  Scratch dir;
  for (const char* name : {"formation", "der_chain"}) {
    CAPTURE(name);
    const auto r = run("check", dir.write(std::string(name) + ".toml", scenario_text(name)), dir.path());
    CHECK(r.code == cli::ok);
    const json rep = json::parse(read_file(dir.path() / (std::string(name) + ".check.json")));
    CHECK(rep["conditions"]["satisfied"].is_boolean());
    CHECK(rep["conditions"]["margins"].size() >= 3);
    CHECK(rep["monotonicity"]["omega"].get<double>() > 0.0);
    CHECK(rep["assumptions"]["coupled_set_nonempty"] == true);
    CHECK(r.out.find("check: sufficient conditions") != std::string::npos);
  }
}

TEST_CASE("simulation ends at the oracle equilibrium") {
  Scratch dir;
  const auto cfg = dir.write("d.toml", scenario_text("der"));
  REQUIRE(run("oracle", cfg, dir.path()).code == cli::ok);
  REQUIRE(run("simulate", cfg, dir.path()).code == cli::ok);
  const json oracle = json::parse(read_file(dir.path() / "der.oracle.json"));
  const auto rows = lines_of(read_file(dir.path() / "der.csv"));
  const auto last = split(rows.back());
  double gap = 0.0, total = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double y = std::stod(last[1 + i]);
    gap += std::pow(y - oracle["y"][i].get<double>(), 2);
    total += y;
  }
  CHECK(std::sqrt(gap) < 1e-2);
  CHECK(std::abs(total - 191.0) < 0.1);
  CHECK(oracle["kkt"]["stationarity"].get<double>() < 1e-9);
}

TEST_CASE("sweep writes one CSV per point and a summary") {
  Scratch dir;
  const auto cfg = dir.write("f.toml", short_formation(5.0));
  const auto r = run("sweep", cfg, dir.path(), "rule.alpha", "0.5,1,2");
  CHECK(r.code == cli::ok);
  for (int k = 1; k <= 3; ++k) {
    CHECK(fs::exists(dir.path() / ("formation_" + std::to_string(k) + ".csv")));
    CHECK(fs::exists(dir.path() / ("formation_" + std::to_string(k) + ".kkt.json")));
  }
  const auto rows = lines_of(read_file(dir.path() / "sweep_summary.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "index,param,value,status,final_time,kkt_stationarity,kkt_feasibility,mu_consensus,eta_tracking");
  CHECK(rows[2].rfind("2,rule.alpha,1,0,5.0,", 0) == 0);

  // Each point matches a standalone run with the same value.
  Scratch solo;
  const auto one = solo.write("f.toml", replace_line(short_formation(5.0), "alpha =", "alpha = 2"));
  REQUIRE(run("simulate", one, solo.path()).code == cli::ok);
  CHECK(read_file(solo.path() / "formation.csv") == read_file(dir.path() / "formation_3.csv"));

  SUBCASE("a bad point is reported without stopping the others") {
    const auto bad = run("sweep", cfg, dir.path(), "rule.alpha", "1,-1");
    CHECK(bad.code == cli::config_error);
    const auto summary = lines_of(read_file(dir.path() / "sweep_summary.csv"));
    CHECK(summary[1].rfind("1,rule.alpha,1,0,", 0) == 0);
    CHECK(summary[2].rfind("2,rule.alpha,-1,2,", 0) == 0);
  }
}

TEST_CASE("command-line front end") {
  Scratch dir;
  const auto cfg = dir.write("f.toml", short_formation(2.0));
  CHECK(run_binary("simulate --config " + cfg.string() + " --out " + dir.path().string()) == 0);
  CHECK(fs::exists(dir.path() / "formation.csv"));
  CHECK(run_binary("simulate --config " + (dir.path() / "none.toml").string()) == 2);
  CHECK(run_binary("simulate") == 2);
  CHECK(run_binary("launch --config " + cfg.string()) == 2);
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("oracle --seed 3 --config " + cfg.string() + " --out " + dir.path().string()) == 0);
  CHECK(fs::exists(dir.path() / "formation.oracle.json"));
  const auto bad = dir.write("b.toml", replace_line(short_formation(), "step =", "step = 0.5"));
  CHECK(run_binary("simulate --config " + bad.string() + " --out " + dir.path().string()) == 2);
}
