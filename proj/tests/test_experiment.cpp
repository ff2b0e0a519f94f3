#include "lifespan/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace lifespan;
using namespace lifespan::experiment;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lifespan_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string key_of(const std::string& text) {
  try {
    parse_config_text(text).validate();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

ExperimentConfig small_sweep(const fs::path& out) {
  ExperimentConfig c;
  c.mode = Mode::sweep;
  c.lambda = 2.0;
  c.eps = {0.3, 0.2, 0.15};
  c.dr = 2e-3;
  c.horizon = 50.0;
  c.out = out.string();
  return c;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(LIFESPAN_LAB_EXE) + " " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal file resolves to the full default config") {
  const auto c = parse_config_text("mode = orlicz-check\ngamma = 2\n");
  ExperimentConfig d;
  d.mode = Mode::orlicz_check;
  CHECK(to_json(c) == to_json(d));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text") {
  const auto c = parse_config_text("# sweep\n[physics]\nn = 2 ; inline\nlambda=1\n\n[run]\neps = 0.02, 0.05\n");
  CHECK(c.n == 2);
  CHECK(c.lambda == 1.0);
  CHECK(c.eps == std::vector<double>{0.02, 0.05});

  CHECK(key_of("gamma = 0.9\n") == "gamma");
  CHECK(key_of("colour = red\n") == "colour");
  CHECK(key_of("n = two\n") == "n");
  CHECK(key_of("n = 4\n") == "n");
  CHECK(key_of("n = 1\nn = 2\n") == "n");
  CHECK(key_of("dr = 0.1\n") == "dr");
  CHECK(key_of("limiter = superbee\n") == "limiter");
  CHECK(key_of("mode = plot\n") == "mode");
  CHECK(key_of("backend = psystem\nn = 2\n") == "backend");
  CHECK(key_of("eps = 0.1, -0.2\n") == "eps");
  CHECK(key_of("just words\n") == "just words");
  try {
    parse_config_text("gamma = 0.9\n").validate();
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "gamma: must exceed 1");
  }
}

TEST_CASE("eps lists and ranges") {
  const auto r = parse_eps("0.02:0.1:6");
  REQUIRE(r.size() == 6);
  CHECK(r.front() == 0.02);
  CHECK(r.back() == 0.1);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] / r[i - 1] == doctest::Approx(std::pow(5.0, 0.2)));
  CHECK(parse_eps("0.1") == std::vector<double>{0.1});
  CHECK_THROWS_AS(parse_eps("0.1:0.2"), ConfigError);
  CHECK_THROWS_AS(parse_eps("0:0.2:3"), ConfigError);
  CHECK_THROWS_AS(parse_eps(""), ConfigError);
}

TEST_CASE("target exponents") {
  auto t = target_exponent(1, 1.0, 1.0);
  CHECK(t.available);
  CHECK(t.slope == -2.0);
  CHECK(target_exponent(1, 1.0, 0.5).slope == doctest::Approx(-4.0 / 3.0));
  CHECK(target_exponent(1, 2.0, 1.0).slope == -1.0);
  CHECK(target_exponent(2, 2.0, 1.0).slope == -2.0);
  CHECK(target_exponent(2, 2.0, 1.0).band == 0.4);
  CHECK(target_exponent(3, 2.0, 1.0).mode == odelab::FitMode::exponential);
  CHECK(target_exponent(2, 1.0, 1.0).mode == odelab::FitMode::exponential);
  CHECK_FALSE(target_exponent(2, 1.0, 1.5).available);
  CHECK_FALSE(target_exponent(1, 0.5, 1.0).available);
  CHECK(ode_target_exponent(0.5, 1.0).slope == -2.0);
  CHECK(ode_target_exponent(0.0, 0.5).slope == -0.5);
  CHECK(ode_target_exponent(1.0, 1.0).mode == odelab::FitMode::exponential);
}

TEST_CASE("lifespan CSV round trip") {
  TempDir tmp("csv");
  solver::LifespanRecord a;
  a.epsilon = 0.1;
  a.T_blow = 7.5;
  a.reason = solver::Termination::gradient_threshold;
  a.steps = 42;
  solver::LifespanRecord b = a;
  b.epsilon = 0.05;
  b.reason = solver::Termination::horizon_reached;
  std::ofstream(tmp.path / "l.csv") << [&] {
    std::ostringstream os;
    write_lifespans_csv(os, {a, b});
    return os.str();
  }();
  const auto back = read_lifespans_csv(tmp.path / "l.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].T_blow == 7.5);
  CHECK(back[0].steps == 42);
  CHECK(back[1].censored());
}

TEST_CASE("orlicz-check writes a manifest and passes") {
  TempDir tmp("orlicz");
  ExperimentConfig c;
  c.mode = Mode::orlicz_check;
  c.samples = 20;
  c.out = tmp.path.string();
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  const auto manifest = nlohmann::json::parse(slurp(tmp.path / "manifest.json"));
  CHECK(manifest["version"] == std::string(version));
  CHECK(manifest["config"]["gamma"] == 2.0);
  CHECK(fs::exists(tmp.path / "checks.csv"));
  CHECK(slurp(tmp.path / "summary.txt").find("ALL PASS") != std::string::npos);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  TempDir a("sweep_a"), b("sweep_b");
  auto ca = small_sweep(a.path);
  ca.jobs = 1;
  auto cb = small_sweep(b.path);
  cb.jobs = 3;
  std::ostringstream log;
  CHECK(run(ca, log) == 0);
  CHECK(run(cb, log) == 0);
  const std::string la = slurp(a.path / "lifespans.csv");
  CHECK(la == slurp(b.path / "lifespans.csv"));
  CHECK(slurp(a.path / "fit.json") == slurp(b.path / "fit.json"));
  const auto recs = read_lifespans_csv(a.path / "lifespans.csv");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].epsilon == 0.15);
  CHECK(recs[0].T_blow > recs[2].T_blow);
  CHECK_FALSE(fs::exists(a.path / "INCOMPLETE"));

  // fit re-reads the merged CSV and reproduces the sweep fit
  TempDir f("fit");
  ExperimentConfig cf = ca;
  cf.mode = Mode::fit;
  cf.input = a.path.string();
  cf.out = f.path.string();
  run(cf, log);
  CHECK(slurp(f.path / "fit.json") == slurp(a.path / "fit.json"));
}

TEST_CASE("failures leave an incomplete marker") {
  TempDir tmp("fail");
  ExperimentConfig c;
  c.mode = Mode::fit;
  c.out = tmp.path.string();
  std::ostringstream log;
  CHECK_THROWS(run(c, log));
  CHECK(fs::exists(tmp.path / "INCOMPLETE"));
  CHECK(fs::exists(tmp.path / "manifest.json"));
}

TEST_CASE("report needs artifacts") {
  TempDir tmp("report");
  ExperimentConfig c;
  c.mode = Mode::report;
  c.input = tmp.path.string();
  std::ostringstream log;
  CHECK_THROWS(run(c, log));
  c.input = (tmp.path / "missing").string();
  CHECK_THROWS(run(c, log));
}

TEST_CASE("command line") {
  TempDir tmp("cli");
  const auto log = tmp.path / "log.txt";
  std::ofstream(tmp.path / "bad.ini") << "gamma = 0.9\n";
  CHECK(run_cli("simulate --config " + (tmp.path / "bad.ini").string(), log) != 0);
  CHECK(slurp(log).find("gamma: must exceed 1") != std::string::npos);

  std::ofstream(tmp.path / "ode.ini") << "lambda = 0\neps = 1e-3:1e-2:3\nmin_points = 3\n";
  const auto out = tmp.path / "ode";
  CHECK(run_cli("odelab --config " + (tmp.path / "ode.ini").string() + " --eps 0.004,0.008 --out " + out.string(),
                log) == 0);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config"]["eps"] == nlohmann::json::array({0.004, 0.008}));
  CHECK(manifest["mode"] == "odelab");

  CHECK(run_cli("report --input " + (tmp.path / "empty").string(), log) != 0);
  fs::create_directories(tmp.path / "empty");
  CHECK(run_cli("report --input " + (tmp.path / "empty").string(), log) != 0);
  CHECK(run_cli("report --input " + out.string(), log) == 0);
  CHECK(slurp(log).find("mode: odelab") != std::string::npos);

  const auto env_out = tmp.path / "from_env";
  setenv("LIFESPAN_LAB_OUT", env_out.string().c_str(), 1);
  CHECK(run_cli("testfn-check", log) == 0);
  unsetenv("LIFESPAN_LAB_OUT");
  CHECK(fs::exists(env_out / "checks.csv"));
}
