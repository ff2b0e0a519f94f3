#include "lifespan/experiment.hpp"

#include "lifespan/csv.hpp"
#include "lifespan/functionals.hpp"
#include "lifespan/orlicz.hpp"
#include "lifespan/testfn.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace lifespan::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Mode, std::string_view> kModes[] = {
    {Mode::orlicz_check, "orlicz-check"}, {Mode::testfn_check, "testfn-check"}, {Mode::odelab, "odelab"},
    {Mode::simulate, "simulate"},         {Mode::sweep, "sweep"},               {Mode::fit, "fit"},
    {Mode::report, "report"}};

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key, "expected a number, got '" + t + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key, "expected an integer, got '" + t + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + t + "'");
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(jobs)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) { return csv::format(v); }

}  // namespace

std::string_view to_string(Mode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  for (const auto& [mode, n] : kModes)
    if (n == name) return mode;
  throw ConfigError("mode", "unknown mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<double> parse_eps(const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("eps", "a range is written lo:hi:count");
    const double lo = to_double("eps", parts[0]);
    const double hi = to_double("eps", parts[1]);
    const long long count = to_integer("eps", parts[2]);
    if (!(lo > 0.0) || !(hi > 0.0)) throw ConfigError("eps", "range ends must be positive");
    if (count < 1) throw ConfigError("eps", "range count must be at least 1");
    if (count == 1) return {lo};
    for (long long i = 0; i < count; ++i)
      out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / (count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
  }
  std::stringstream ss(t);
  for (std::string p; std::getline(ss, p, ',');) {
    if (trim(p).empty()) continue;
    out.push_back(to_double("eps", p));
  }
  if (out.empty()) throw ConfigError("eps", "empty list");
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(value);
  auto d = [&] { return to_double(key, v); };
  auto i = [&] { return to_integer(key, v); };
  if (key == "mode") cfg.mode = mode_from_string(v);
  else if (key == "n") cfg.n = static_cast<int>(i());
  else if (key == "gamma") cfg.gamma = d();
  else if (key == "mu") cfg.mu = d();
  else if (key == "lambda") cfg.lambda = d();
  else if (key == "eps" || key == "epsilon") cfg.eps = parse_eps(v);
  else if (key == "bump_k") cfg.bump_k = static_cast<int>(i());
  else if (key == "dr") cfg.dr = d();
  else if (key == "cfl") cfg.cfl = d();
  else if (key == "dt_out") cfg.dt_out = d();
  else if (key == "horizon") cfg.horizon = d();
  else if (key == "window") cfg.window = d();
  else if (key == "threshold") cfg.threshold = d();
  else if (key == "growth_factor") cfg.growth_factor = d();
  else if (key == "growth_reference") {
    try {
      cfg.growth_reference = solver::growth_reference_from_string(v);
    } catch (const std::invalid_argument&) {
      throw ConfigError(key, "expected initial or running_min, got '" + v + "'");
    }
  } else if (key == "limiter") {
    try {
      cfg.limiter = solver::limiter_from_string(v);
    } catch (const std::invalid_argument&) {
      throw ConfigError(key, "expected minmod or mc, got '" + v + "'");
    }
  } else if (key == "backend") cfg.backend = v;
  else if (key == "sensitivity") cfg.sensitivity = to_bool(key, v);
  else if (key == "min_span") cfg.min_span = d();
  else if (key == "min_points") cfg.min_points = static_cast<int>(i());
  else if (key == "alpha") cfg.alpha = d();
  else if (key == "beta") cfg.beta = d();
  else if (key == "samples") cfg.samples = static_cast<int>(i());
  else if (key == "seed") {
    const long long s = i();
    if (s < 0) throw ConfigError(key, "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "jobs") cfg.jobs = static_cast<int>(i());
  else if (key == "out") cfg.out = v;
  else if (key == "input") cfg.input = v;
  else throw ConfigError(key, "unknown key");
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(n >= 1 && n <= 3, "n", "must be 1, 2 or 3");
  require(gamma > 1.0 && std::isfinite(gamma), "gamma", "must exceed 1");
  require(mu >= 0.0 && std::isfinite(mu), "mu", "must be non-negative");
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be non-negative");
  require(!eps.empty(), "eps", "needs at least one value");
  for (double e : eps) require(e > 0.0 && std::isfinite(e), "eps", "values must be positive");
  require(bump_k >= 2, "bump_k", "must be at least 2");
  require(dr > 0.0 && dr <= 5e-3, "dr", "must lie in (0, 5e-3] (200 cells across the data)");
  require(cfl > 0.0 && cfl < 1.0, "cfl", "must lie in (0, 1)");
  require(dt_out >= 0.0 && std::isfinite(dt_out), "dt_out", "must be non-negative");
  require(horizon > 0.0 && std::isfinite(horizon), "horizon", "must be positive");
  require(window >= 0.0, "window", "must be non-negative");
  require(threshold >= 0.0, "threshold", "must be non-negative");
  require(growth_factor > 1.0, "growth_factor", "must exceed 1");
  require(backend == "euler" || backend == "psystem", "backend", "must be euler or psystem");
  require(backend == "euler" || n == 1, "backend", "psystem requires n = 1");
  require(min_span >= 1.0, "min_span", "must be at least 1");
  require(min_points >= 3, "min_points", "must be at least 3");
  require(alpha > 0.0, "alpha", "must be positive");
  require(beta > 0.0, "beta", "must be positive");
  require(samples >= 1, "samples", "must be at least 1");
  require(jobs >= 0, "jobs", "must be non-negative");
}

int ExperimentConfig::resolved_jobs() const {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::set<std::string> seen;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty() || (line.front() == '[' && line.back() == ']')) continue;  // blank or section header
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "line " + std::to_string(line_no) + " is not of the form key = value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    apply_setting(base, key, value);
  }
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

json to_json(const ExperimentConfig& c) {
  return json{{"mode", to_string(c.mode)},
              {"n", c.n},
              {"gamma", c.gamma},
              {"mu", c.mu},
              {"lambda", c.lambda},
              {"eps", c.eps},
              {"bump_k", c.bump_k},
              {"dr", c.dr},
              {"cfl", c.cfl},
              {"dt_out", c.dt_out},
              {"horizon", c.horizon},
              {"window", c.window},
              {"threshold", c.threshold},
              {"growth_factor", c.growth_factor},
              {"growth_reference", solver::to_string(c.growth_reference)},
              {"limiter", solver::to_string(c.limiter)},
              {"backend", c.backend},
              {"sensitivity", c.sensitivity},
              {"min_span", c.min_span},
              {"min_points", c.min_points},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"samples", c.samples},
              {"seed", c.seed},
              {"jobs", c.jobs},
              {"out", c.out},
              {"input", c.input}};
}

fs::path output_dir(const ExperimentConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("LIFESPAN_LAB_OUT"); env && *env) return env;
  return "lifespan_out";
}

// ---------------------------------------------------------------------------
// Targets

TargetExponent target_exponent(int n, double lambda, double mu) {
  TargetExponent t;
  if (lambda > 1.0) {
    t.available = true;
    if (n == 3) {
      t.mode = odelab::FitMode::exponential;
      t.law = "exp(C eps^-1)";
    } else {
      t.slope = -2.0 / (3 - n);
      t.band = n == 1 ? 0.2 : 0.4;
      t.law = n == 1 ? "C eps^-1" : "C eps^-2";
    }
  } else if (lambda == 1.0) {
    const double crit = 3.0 - n;
    if (mu < crit) {
      t.available = true;
      t.slope = -2.0 / (crit - mu);
      t.band = 0.15 * std::abs(t.slope);
      t.law = "C eps^-2/(3-n-mu)";
    } else if (mu == crit) {
      t.available = true;
      t.mode = odelab::FitMode::exponential;
      t.law = "exp(C eps^-1)";
    } else {
      t.law = "outside the blow-up range mu <= 3 - n";
    }
  } else {
    t.law = "no target for lambda < 1";
  }
  return t;
}

TargetExponent ode_target_exponent(double lambda, double alpha) {
  TargetExponent t;
  if (lambda < 1.0) {
    t.available = true;
    t.slope = -alpha / (1.0 - lambda);
    t.band = 0.1 * std::abs(t.slope);
    t.law = "C eps^-alpha/(1-lambda)";
  } else if (lambda == 1.0) {
    t.available = true;
    t.mode = odelab::FitMode::exponential;
    t.law = "exp(C eps^-alpha)";
  } else {
    t.law = "no target for lambda > 1";
  }
  return t;
}

// ---------------------------------------------------------------------------
// Suites

bool SuiteResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void SuiteResult::add(std::string name, double value, std::string bound, bool pass) {
  checks.push_back({std::move(name), value, std::move(bound), pass});
}

namespace {

std::string gamma_tag(double g) { return "gamma=" + fmt(g); }

void append(SuiteResult& into, const SuiteResult& from) {
  into.checks.insert(into.checks.end(), from.checks.begin(), from.checks.end());
}

}  // namespace

SuiteResult orlicz_inequality_suite(const std::vector<double>& gammas) {
  SuiteResult s;
  for (double g : gammas) {
    const orlicz::NFunctionFamily fam(g);
    // Upsilon^-1 (Upsilon*)^-1 / p in [1, 2] on 49 log points of 10^[-6, 6].
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i <= 48; ++i) {
      const double r = orlicz::inverse_product_ratio(std::pow(10.0, -6.0 + 0.25 * i), fam);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    s.add("inverse_product_ratio_min " + gamma_tag(g), lo, ">= 1 - 1e-9", lo >= 1.0 - 1e-9);
    s.add("inverse_product_ratio_max " + gamma_tag(g), hi, "<= 2 + 1e-9", hi <= 2.0 + 1e-9);

    // Young: pq <= Upsilon(p) + Upsilon*(q) on a 101 x 101 grid of 10^[-5, 5].
    double worst = -1e300;
    for (int a = 0; a <= 100; ++a) {
      const double p = std::pow(10.0, -5.0 + 0.1 * a);
      for (int b = 0; b <= 100; ++b) {
        const double q = std::pow(10.0, -5.0 + 0.1 * b);
        const double rhs = orlicz::upsilon(p, fam) + orlicz::upsilon_star(q, fam);
        worst = std::max(worst, p * q / rhs - 1.0);
      }
    }
    s.add("young_excess " + gamma_tag(g), worst, "<= 1e-12", worst <= 1e-12);

    double rel = 0.0;
    for (int e = -3; e <= 3; ++e) {
      const double q = std::pow(10.0, e);
      const double pmax = 2.0 * (orlicz::legendre_argmax(q, fam) + 1.0);
      const double oracle = orlicz::legendre_transform_oracle(q, fam, pmax, 2000);
      const double exact = orlicz::upsilon_star(q, fam);
      rel = std::max(rel, std::abs(exact - oracle) / std::max(exact, 1e-300));
    }
    s.add("legendre_oracle_rel " + gamma_tag(g), rel, "<= 1e-6", rel <= 1e-6);
  }
  return s;
}

SuiteResult multiplicativity_suite() {
  SuiteResult s;
  const orlicz::NFunctionFamily g2(2.0), g15(1.5), g3(3.0);
  double dev = 0.0;
  for (int a = 0; a <= 24; ++a)
    for (int b = 0; b <= 24; ++b)
      dev = std::max(dev, std::abs(orlicz::multiplicativity_ratio(std::pow(10.0, -3 + 0.25 * a),
                                                                  std::pow(10.0, -3 + 0.25 * b), g2) -
                                   2.0));
  s.add("ratio_minus_2 gamma=2", dev, "<= 1e-12", dev <= 1e-12);
  const auto a = orlicz::multiplicativity_scan(g15, -3, 3, 20);
  const auto b = orlicz::multiplicativity_scan(g15, -3, 3, 40);
  s.add("grid_min gamma=1.5", b.min, "> 0", b.min > 0.0);
  const double dmin = std::abs(b.min - a.min) / a.min;
  s.add("grid_min_change gamma=1.5", dmin, "< 0.02", dmin < 0.02);
  const auto c = orlicz::multiplicativity_scan(g3, -3, 3, 20);
  const auto d = orlicz::multiplicativity_scan(g3, -3, 3, 40);
  s.add("grid_max gamma=3", d.max, "finite", std::isfinite(d.max));
  const double dmax = std::abs(d.max - c.max) / c.max;
  s.add("grid_max_change gamma=3", dmax, "< 0.02", dmax < 0.02);
  return s;
}

SuiteResult holder_suite(const std::vector<double>& gammas, std::uint64_t seed, int pairs) {
  SuiteResult s;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> center(0.0, 2.5), width(0.2, 1.2), log_height(-2.0, 2.0), coin(0.0, 1.0);
  constexpr double dr = 4e-3;
  auto bump = [&](int n, double c, double w, double h) {
    return RadialGridFunction::sample(n, dr, 4.0, [&](double r) {
      const double x = (r - c) / w;
      return std::abs(x) < 1.0 ? h * (1 - x * x) * (1 - x * x) : 0.0;
    });
  };
  for (double g : gammas) {
    const orlicz::NFunctionFamily fam(g);
    double worst = 0.0;
    int ok = 0;
    for (int k = 0; k < pairs; ++k) {
      const int n = dim(rng);
      const double hu = std::pow(10.0, log_height(rng)) * (coin(rng) < 0.5 ? -1.0 : 1.0);
      const auto u = bump(n, center(rng), width(rng), hu);
      const auto v = bump(n, center(rng), width(rng), std::pow(10.0, log_height(rng)));
      const double r = orlicz::check_holder(u, v, fam);
      worst = std::max(worst, r);
      if (r <= 1.0) ++ok;
    }
    s.add("holder_max_ratio " + gamma_tag(g) + " pairs=" + std::to_string(pairs), worst, "<= 1", ok == pairs);
  }
  return s;
}

SuiteResult orlicz_suite(const std::vector<double>& gammas, std::uint64_t seed, int holder_pairs) {
  SuiteResult s = orlicz_inequality_suite(gammas);
  append(s, multiplicativity_suite());
  append(s, holder_suite(gammas, seed, holder_pairs));
  return s;
}

SuiteResult testfn_suite() {
  SuiteResult s;
  const testfn::TestFunctionContext n1(1), n2(2), n3(3);
  s.add("phi(0) n=1", testfn::phi(0.0, n1), "== 1", testfn::phi(0.0, n1) == 1.0);
  s.add("phi(0) n=3", testfn::phi(0.0, n3), "== 1", testfn::phi(0.0, n3) == 1.0);
  for (const auto& c : {n1, n2, n3}) {
    const std::string tag = " n=" + std::to_string(c.dim);
    const double a = testfn::check_laplacian_identity(c, 10.0, 2e-3);
    const double b = testfn::check_laplacian_identity(c, 10.0, 1e-3);
    s.add("laplacian_residual dr=1e-3" + tag, b, "<= 1e-5", b <= 1e-5);
    const double order = std::log2(a / b);
    s.add("laplacian_order" + tag, order, "in [1.8, 2.2]", order >= 1.8 && order <= 2.2);
  }
  for (const auto& c : {n2, n3}) {
    double dev = 0.0;
    for (double r = 0.0; r <= 10.0 + 1e-12; r += 0.25)
      dev = std::max(dev, std::abs(testfn::phi_sphere_average(r, c) / testfn::phi(r, c) - 1.0));
    s.add("sphere_average_rel n=" + std::to_string(c.dim), dev, "<= 1e-8", dev <= 1e-8);
  }
  for (const auto& c : {n1, n2, n3}) {
    double worst = 0.0;
    bool positive = true;
    for (double b : {0.0, 1.0, 2.0}) {
      for (double t : {0.0, 1.0, 10.0, 100.0}) {
        const double coarse = testfn::psi_power_ratio(t, b, c, 1e-2);
        const double fine = testfn::psi_power_ratio(t, b, c, 5e-3);
        positive = positive && coarse > 0.0 && fine > 0.0;
        worst = std::max(worst, std::abs(fine - coarse) / coarse);
      }
    }
    s.add("intpsi_band_change n=" + std::to_string(c.dim), worst, "<= 0.1", positive && worst <= 0.1);
  }
  return s;
}

// ---------------------------------------------------------------------------
// ODE lab

OdeSweep ode_sweep(double lambda, const odelab::PiecewisePowerN& N, const std::vector<double>& eps, int jobs) {
  OdeSweep out;
  out.runs.resize(eps.size());
  parallel_for(eps.size(), jobs, [&](std::size_t i) {
    odelab::OdeRunConfig cfg;
    cfg.lambda = lambda;
    cfg.epsilon = eps[i];
    out.runs[i] = odelab::integrate_blowup_ode(cfg, N);
  });
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto& r = out.runs[i];
    out.records.push_back({eps[i], r.T, !r.cap_insensitive()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PDE runs

solver::LifespanRecord run_one(const ExperimentConfig& cfg, double epsilon, const solver::Observer& observer) {
  solver::InitialDataFamily fam;
  fam.epsilon = epsilon;
  fam.bump_k = cfg.bump_k;
  const solver::DampingParams damping{cfg.mu, cfg.lambda};
  solver::RunSettings set;
  set.dim = cfg.n;
  set.gamma = cfg.gamma;
  set.horizon = cfg.horizon;
  set.dr = cfg.dr;
  set.cfl = cfg.cfl;
  set.limiter = cfg.limiter;
  set.window = cfg.window;
  set.dt_out = cfg.dt_out;
  set.blowup.threshold = cfg.threshold;
  set.blowup.growth_factor = cfg.growth_factor;
  set.blowup.reference = cfg.growth_reference;
  if (cfg.backend == "psystem") return solver::run_psystem_1d(fam, damping, set, observer);
  return solver::run_lifespan(fam, damping, set, observer);
}

namespace {

const std::vector<std::string> kLifespanColumns = {"epsilon",          "T_blow",        "reason",
                                                   "censored",         "dr",            "cfl",
                                                   "initial_gradient", "min_gradient",  "peak_gradient",
                                                   "final_gradient",   "steps"};

std::vector<std::string> lifespan_fields(const solver::LifespanRecord& r) {
  return {fmt(r.epsilon),         fmt(r.T_blow),        std::string(solver::to_string(r.reason)),
          r.censored() ? "1" : "0", fmt(r.dr),          fmt(r.cfl),
          fmt(r.initial_gradient), fmt(r.min_gradient), fmt(r.peak_gradient),
          fmt(r.final_gradient),   std::to_string(r.steps)};
}

}  // namespace

void write_lifespans_csv(std::ostream& out, const std::vector<solver::LifespanRecord>& records) {
  csv::Writer w(out);
  w.header(kLifespanColumns);
  for (const auto& r : records) w.row(lifespan_fields(r));
}

std::vector<solver::LifespanRecord> read_lifespans_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = csv::split_record(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : {"epsilon", "T_blow", "reason"})
    if (!col.count(name)) throw std::runtime_error(path.string() + ": missing column " + name);
  auto num = [&](const std::vector<std::string>& row, const char* name) {
    const auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return 0.0;
    return std::stod(row[it->second]);
  };
  std::vector<solver::LifespanRecord> out;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    const auto row = csv::split_record(line);
    if (row.size() != header.size()) throw std::runtime_error(path.string() + ": ragged row");
    solver::LifespanRecord r;
    r.epsilon = num(row, "epsilon");
    r.T_blow = num(row, "T_blow");
    r.reason = solver::termination_from_string(row[col["reason"]]);
    r.dr = num(row, "dr");
    r.cfl = num(row, "cfl");
    r.initial_gradient = num(row, "initial_gradient");
    r.min_gradient = num(row, "min_gradient");
    r.peak_gradient = num(row, "peak_gradient");
    r.final_gradient = num(row, "final_gradient");
    r.steps = static_cast<long>(num(row, "steps"));
    out.push_back(r);
  }
  return out;
}

std::vector<solver::LifespanRecord> sweep(const ExperimentConfig& cfg, const fs::path& dir) {
  const fs::path runs = dir / "runs";
  fs::create_directories(runs);
  parallel_for(cfg.eps.size(), cfg.resolved_jobs(), [&](std::size_t i) {
    const auto rec = run_one(cfg, cfg.eps[i]);
    std::ostringstream os;
    write_lifespans_csv(os, {rec});
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i << ".csv";
    write_atomically(runs / name.str(), os.str());
  });
  std::vector<solver::LifespanRecord> merged;
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i << ".csv";
    for (const auto& r : read_lifespans_csv(runs / name.str())) merged.push_back(r);
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  return merged;
}

json fit_json(const odelab::ScalingFit& fit, const TargetExponent& target) {
  json j{{"mode", odelab::to_string(fit.mode)},
         {"slope", fit.slope},
         {"intercept", fit.intercept},
         {"stderr", fit.stderr_slope},
         {"r_squared", fit.r_squared},
         {"n_points", fit.n_points},
         {"target_law", target.law}};
  if (target.available && target.mode == odelab::FitMode::power) {
    j["target_slope"] = target.slope;
    j["band"] = target.band;
    j["pass"] = std::abs(fit.slope - target.slope) <= target.band;
  } else if (target.available) {
    j["pass"] = fit.slope > 0.0 && fit.r_squared >= 0.99;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Dispatcher

namespace {

void write_checks(const fs::path& dir, const SuiteResult& suite, std::ostream& log) {
  std::ostringstream os;
  csv::Writer w(os);
  w.header({"check", "value", "bound", "pass"});
  for (const auto& c : suite.checks) w.row({c.name, fmt(c.value), c.bound, c.pass ? "1" : "0"});
  write_atomically(dir / "checks.csv", os.str());
  std::ostringstream summary;
  for (const auto& c : suite.checks)
    summary << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << fmt(c.value) << " (" << c.bound << ")\n";
  summary << (suite.all_pass() ? "ALL PASS" : "SOME CHECKS FAILED") << "\n";
  write_atomically(dir / "summary.txt", summary.str());
  log << summary.str();
}

std::vector<odelab::ScalingRecord> scaling_records(const std::vector<solver::LifespanRecord>& recs) {
  std::vector<odelab::ScalingRecord> out;
  for (const auto& r : recs) out.push_back({r.epsilon, r.T_blow, r.censored()});
  return out;
}

/// Fits and reports; returns true when the fit exists and meets the target band.
bool fit_and_report(const std::vector<odelab::ScalingRecord>& records, const TargetExponent& target,
                    const ExperimentConfig& cfg, double alpha, json& out, std::ostream& summary) {
  odelab::FitOptions opt;
  opt.mode = target.available ? target.mode : odelab::FitMode::power;
  opt.alpha = alpha;
  opt.min_points = cfg.min_points;
  opt.min_span = cfg.min_span;
  try {
    const auto fit = odelab::fit_scaling(records, opt);
    out = fit_json(fit, target);
    summary << "fit " << odelab::to_string(fit.mode) << ": slope = " << fmt(fit.slope) << " +- "
            << fmt(fit.stderr_slope) << ", R^2 = " << fmt(fit.r_squared) << ", points = " << fit.n_points << "\n";
    summary << "target " << target.law;
    if (target.available && target.mode == odelab::FitMode::power)
      summary << ": slope " << fmt(target.slope) << " +- " << fmt(target.band);
    summary << "\n";
    if (out.contains("pass")) {
      const bool pass = out["pass"].get<bool>();
      summary << (pass ? "PASS" : "FAIL") << " fitted law within the target band\n";
      return pass;
    }
    return true;
  } catch (const std::invalid_argument& e) {
    out = json{{"error", e.what()}, {"target_law", target.law}};
    summary << "no fit: " << e.what() << "\n";
    return false;
  }
}

int run_odelab(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const odelab::PiecewisePowerN N(cfg.alpha, cfg.beta);
  const auto sw = ode_sweep(cfg.lambda, N, cfg.eps, cfg.resolved_jobs());
  std::ostringstream os;
  csv::Writer w(os);
  w.header({"epsilon", "T", "T_cap10", "censored", "steps", "cap_sensitivity"});
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    const auto& r = sw.runs[i];
    w.row({fmt(cfg.eps[i]), fmt(r.T), fmt(r.T_cap10), sw.records[i].censored ? "1" : "0", std::to_string(r.steps),
           fmt(r.cap_sensitivity())});
  }
  write_atomically(dir / "ode_lifespans.csv", os.str());

  std::ostringstream summary;
  bool ok = true;
  const auto cmp = odelab::check_comparison_lemma(cfg.samples, cfg.seed);
  const auto cvx = odelab::check_convexity_lemma(cfg.samples, cfg.seed + 1);
  for (const auto& [name, rep] : {std::pair{"comparison_lemma", cmp}, std::pair{"convexity_lemma", cvx}}) {
    const bool pass = rep.pass_fraction() == 1.0;
    ok = ok && pass;
    summary << (pass ? "PASS " : "FAIL ") << name << " pass_fraction = " << fmt(rep.pass_fraction()) << " ("
            << rep.passed << "/" << rep.instances << ")\n";
  }
  const double mult = odelab::multiplicativity_min(N, 3.0, 20);
  summary << (mult > 0.0 ? "PASS" : "FAIL") << " multiplicativity_min = " << fmt(mult) << "\n";
  ok = ok && mult > 0.0;

  json fit;
  if (static_cast<int>(cfg.eps.size()) >= cfg.min_points) {
    const auto target = ode_target_exponent(cfg.lambda, cfg.alpha);
    ok = fit_and_report(sw.records, target, cfg, cfg.alpha, fit, summary) && ok;
  } else {
    summary << "no fit: " << cfg.eps.size() << " eps values\n";
  }
  write_atomically(dir / "fit.json", fit.dump(2) + "\n");
  summary << (ok ? "ALL PASS" : "SOME CHECKS FAILED") << "\n";
  write_atomically(dir / "summary.txt", summary.str());
  log << summary.str();
  return ok ? 0 : 1;
}

int run_simulate(const ExperimentConfig& config, const fs::path& dir, std::ostream& log) {
  ExperimentConfig cfg = config;
  if (cfg.dt_out > 0.0) cfg.window = 0.0;
  std::vector<solver::LifespanRecord> records;
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    std::ostringstream ts;
    csv::Writer w(ts);
    w.header({"t", "max_gradient", "F", "mass"});
    const auto rec = run_one(cfg, cfg.eps[i], [&](const solver::FluidState& s, double g) {
      w.numbers({s.t, g, functionals::compute_F(s), solver::total_mass(s)});
    });
    records.push_back(rec);
    if (cfg.dt_out > 0.0) {
      std::ostringstream name;
      name << "timeseries_" << std::setw(3) << std::setfill('0') << i << ".csv";
      write_atomically(dir / name.str(), ts.str());
    }
    log << "eps = " << fmt(rec.epsilon) << ": T = " << fmt(rec.T_blow) << " (" << solver::to_string(rec.reason)
        << ", " << rec.steps << " steps)\n";
  }
  std::ostringstream os;
  write_lifespans_csv(os, records);
  write_atomically(dir / "lifespans.csv", os.str());
  std::ostringstream summary;
  for (const auto& r : records)
    summary << "eps = " << fmt(r.epsilon) << ": T = " << fmt(r.T_blow) << " " << solver::to_string(r.reason) << "\n";
  write_atomically(dir / "summary.txt", summary.str());
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const auto records = sweep(cfg, dir);
  std::ostringstream os;
  write_lifespans_csv(os, records);
  write_atomically(dir / "lifespans.csv", os.str());

  const auto target = target_exponent(cfg.n, cfg.lambda, cfg.mu);
  std::ostringstream summary;
  for (const auto& r : records)
    summary << "eps = " << fmt(r.epsilon) << ": T = " << fmt(r.T_blow) << " " << solver::to_string(r.reason) << "\n";
  json fit;
  const bool ok = fit_and_report(scaling_records(records), target, cfg, 1.0, fit, summary);

  if (cfg.sensitivity) {
    json sens = json::array();
    for (double factor : {0.5, 2.0}) {
      ExperimentConfig alt = cfg;
      alt.growth_factor = cfg.growth_factor * factor;
      if (!(alt.growth_factor > 1.0)) continue;
      const fs::path sub = dir / ("sensitivity_growth_" + fmt(alt.growth_factor));
      const auto recs = sweep(alt, sub);
      std::ostringstream alt_csv;
      write_lifespans_csv(alt_csv, recs);
      write_atomically(sub / "lifespans.csv", alt_csv.str());
      json f;
      std::ostringstream ignored;
      fit_and_report(scaling_records(recs), target, alt, 1.0, f, ignored);
      f["growth_factor"] = alt.growth_factor;
      sens.push_back(f);
      summary << "sensitivity growth_factor = " << fmt(alt.growth_factor) << ": "
              << (f.contains("slope") ? "slope = " + fmt(f["slope"].get<double>()) : "no fit") << "\n";
    }
    fit["sensitivity"] = sens;
  }
  write_atomically(dir / "fit.json", fit.dump(2) + "\n");
  write_atomically(dir / "summary.txt", summary.str());
  log << summary.str();
  return ok ? 0 : 1;
}

int run_fit(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  const fs::path in = cfg.input.empty() ? dir : fs::path(cfg.input);
  const auto records = read_lifespans_csv(in / "lifespans.csv");
  const auto target = target_exponent(cfg.n, cfg.lambda, cfg.mu);
  std::ostringstream summary;
  json fit;
  const bool ok = fit_and_report(scaling_records(records), target, cfg, 1.0, fit, summary);
  write_atomically(dir / "fit.json", fit.dump(2) + "\n");
  write_atomically(dir / "summary.txt", summary.str());
  log << summary.str();
  return ok ? 0 : 1;
}

int run_report(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path in = cfg.input.empty() ? output_dir(cfg) : fs::path(cfg.input);
  if (!fs::is_directory(in)) throw std::runtime_error("report: " + in.string() + " is not a directory");
  const std::vector<std::string> known = {"manifest.json", "summary.txt", "fit.json", "lifespans.csv",
                                          "checks.csv",    "ode_lifespans.csv"};
  bool any = false;
  for (const auto& name : known) any = any || fs::exists(in / name);
  if (!any) throw std::runtime_error("report: no artifacts in " + in.string());
  if (fs::exists(in / "INCOMPLETE")) log << "warning: artifacts are marked incomplete\n";
  if (fs::exists(in / "manifest.json")) {
    std::ifstream f(in / "manifest.json");
    const json m = json::parse(f);
    log << "mode: " << m.value("mode", std::string("?")) << " (version " << m.value("version", std::string("?"))
        << ")\n";
  }
  if (fs::exists(in / "lifespans.csv")) {
    const auto recs = read_lifespans_csv(in / "lifespans.csv");
    const auto censored = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.censored(); });
    log << "lifespan records: " << recs.size() << " (" << censored << " censored)\n";
  }
  if (fs::exists(in / "summary.txt")) {
    std::ifstream f(in / "summary.txt");
    log << f.rdbuf();
  }
  if (fs::exists(in / "fit.json")) {
    std::ifstream f(in / "fit.json");
    log << "fit: " << json::parse(f).dump() << "\n";
  }
  return 0;
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.mode == Mode::report) return run_report(cfg, log);

  const fs::path dir = output_dir(cfg);
  fs::create_directories(dir);
  fs::remove(dir / "INCOMPLETE");
  const json manifest{{"version", version}, {"mode", to_string(cfg.mode)}, {"config", to_json(cfg)}};
  write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
  try {
    switch (cfg.mode) {
      case Mode::orlicz_check: {
        std::vector<double> gammas = {1.2, 1.5, 2.0, 3.0};
        if (std::find(gammas.begin(), gammas.end(), cfg.gamma) == gammas.end()) gammas.push_back(cfg.gamma);
        const auto suite = orlicz_suite(gammas, cfg.seed, cfg.samples);
        write_checks(dir, suite, log);
        return suite.all_pass() ? 0 : 1;
      }
      case Mode::testfn_check: {
        const auto suite = testfn_suite();
        write_checks(dir, suite, log);
        return suite.all_pass() ? 0 : 1;
      }
      case Mode::odelab: return run_odelab(cfg, dir, log);
      case Mode::simulate: return run_simulate(cfg, dir, log);
      case Mode::sweep: return run_sweep(cfg, dir, log);
      case Mode::fit: return run_fit(cfg, dir, log);
      case Mode::report: break;
    }
  } catch (const std::exception& e) {
    std::ofstream(dir / "INCOMPLETE") << e.what() << "\n";
    throw;
  }
  return 0;
}

}  // namespace lifespan::experiment
