// Acceptance checks: one PASS/FAIL line per criterion. Criterion 10 takes
// long and only runs with --long.

#include "lifespan/experiment.hpp"
#include "lifespan/functionals.hpp"
#include "lifespan/odelab.hpp"
#include "lifespan/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace lifespan;
namespace ex = lifespan::experiment;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  bool long_running;
  std::function<Outcome()> check;
};

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Outcome from_suite(const ex::SuiteResult& s) {
  Outcome o{s.all_pass(), {}};
  int failed = 0;
  for (const auto& c : s.checks) {
    if (c.pass) continue;
    if (failed++ < 3) o.detail += c.name + " = " + num(c.value) + " (" + c.bound + "); ";
  }
  if (o.pass) o.detail = std::to_string(s.checks.size()) + " checks";
  return o;
}

std::vector<double> log_points(double lo, double hi, int count) {
  return ex::parse_eps(num(lo, 17) + ":" + num(hi, 17) + ":" + std::to_string(count));
}

// --- 5: blow-up ODE exponents and lemma suites

Outcome ode_exponents() {
  Outcome o{true, {}};
  auto power_case = [&](double lambda, double alpha, double beta) {
    const auto sw = ex::ode_sweep(lambda, odelab::PiecewisePowerN(alpha, beta), log_points(1e-4, 1e-2, 8), 1);
    const auto fit = odelab::fit_scaling(sw.records, {.mode = odelab::FitMode::power, .alpha = alpha});
    const double target = -alpha / (1.0 - lambda);
    const bool ok = std::abs(fit.slope - target) <= 0.1 * std::abs(target);
    o.pass = o.pass && ok;
    o.detail += "lambda=" + num(lambda) + " alpha=" + num(alpha) + " slope " + num(fit.slope) + " (target " +
                num(target) + "); ";
  };
  for (double a : {0.5, 1.0, 2.0}) power_case(0.0, a, a);
  power_case(0.5, 1.0, 1.0);

  const auto sw = ex::ode_sweep(1.0, odelab::PiecewisePowerN(1, 1), log_points(0.05, 0.5, 8), 1);
  const auto fit = odelab::fit_scaling(sw.records, {.mode = odelab::FitMode::exponential, .alpha = 1.0});
  o.pass = o.pass && fit.slope > 0.0 && fit.r_squared >= 0.99;
  o.detail += "lambda=1 exponential R^2 " + num(fit.r_squared, 6) + "; ";

  const auto cmp = odelab::check_comparison_lemma(100, 1);
  const auto cvx = odelab::check_convexity_lemma(100, 2);
  o.pass = o.pass && cmp.pass_fraction() == 1.0 && cvx.pass_fraction() == 1.0;
  o.detail += "lemmas " + num(cmp.pass_fraction()) + ", " + num(cvx.pass_fraction());
  return o;
}

// --- 6: conservation, causality, fixed point

Outcome conservation() {
  Outcome o{true, {}};
  solver::InitialDataFamily fam;
  fam.epsilon = 0.1;
  const solver::DampingParams damping{1.0, 2.0};

  auto s = solver::make_initial_data(fam, {1, 1e-3, 3.0}, 2.0);
  double worst = 0.0, m = solver::total_mass(s);
  for (int k = 0; k < 1000; ++k) {
    s = solver::step(s, damping, 0.45);
    const double next = solver::total_mass(s);
    worst = std::max(worst, std::abs(next - m) / m);
    m = next;
  }
  o.pass = worst <= 1e-10;
  o.detail = "mass drift/step " + num(worst) + "; ";

  solver::RunSettings set;
  set.dim = 1;
  set.dr = 1e-3;
  set.cfl = 0.45;
  set.horizon = 10.0;
  set.dt_out = 0.1;
  double excess = -1e300;
  int outputs = 0;
  const auto rec = solver::run_lifespan(fam, damping, set, [&](const solver::FluidState& st, double) {
    ++outputs;
    excess = std::max(excess, solver::support_radius(st, 1e-12) - (1.0 + st.t + 5.0 * st.dr));
  });
  o.pass = o.pass && excess <= 0.0 && outputs > 10;
  o.detail += "support excess " + num(excess) + " over " + std::to_string(outputs) + " outputs to T=" +
              num(rec.T_blow) + "; ";

  double drift = 0.0;
  for (int dim : {1, 2, 3}) {
    solver::InitialDataFamily rest;
    rest.epsilon = 0.0;
    auto c = solver::make_initial_data(rest, {dim, 5e-3, 2.0}, 2.0);
    for (int k = 0; k < 10000; ++k) c = solver::step(c, damping, 0.45);
    drift = std::max({drift, c.theta.abs().maxCoeff(), c.u.abs().maxCoeff()});
  }
  o.pass = o.pass && drift <= 1e-15;
  o.detail += "rest-state drift " + num(drift);
  return o;
}

// --- 7, 8, 10: PDE lifespans

ex::ExperimentConfig pde_config(int n, double gamma, double lambda, double dr) {
  ex::ExperimentConfig c;
  c.n = n;
  c.gamma = gamma;
  c.mu = 1.0;
  c.lambda = lambda;
  c.dr = dr;
  c.horizon = 5000.0;
  c.window = 2.0;
  return c;
}

std::vector<odelab::ScalingRecord> lifespans(const ex::ExperimentConfig& cfg, const std::vector<double>& eps,
                                             std::string& detail) {
  std::vector<odelab::ScalingRecord> out;
  detail += "T:";
  for (double e : eps) {
    const auto r = ex::run_one(cfg, e);
    out.push_back({e, r.T_blow, r.censored()});
    detail += " " + num(r.T_blow) + (r.censored() ? "(censored)" : "");
  }
  return out;
}

Outcome scaling_1d(double dr) {
  Outcome o{true, {}};
  const std::vector<double> eps = {0.02, 0.03, 0.045, 0.07, 0.1};
  struct Case {
    double gamma, lambda, target, band;
  };
  for (const Case c : {Case{2.0, 2.0, -1.0, 0.2}, Case{1.5, 2.0, -1.0, 0.25}, Case{2.0, 1.0, -2.0, 0.3}}) {
    o.detail += "gamma=" + num(c.gamma) + " lambda=" + num(c.lambda) + " ";
    const auto recs = lifespans(pde_config(1, c.gamma, c.lambda, dr), eps, o.detail);
    try {
      const auto fit = odelab::fit_scaling(recs, {.mode = odelab::FitMode::power, .min_points = 4, .min_span = 2.0});
      const bool ok = std::abs(fit.slope - c.target) <= c.band;
      o.pass = o.pass && ok;
      o.detail += " slope " + num(fit.slope) + " (target " + num(c.target) + " +- " + num(c.band) + "); ";
    } catch (const std::invalid_argument& e) {
      o.pass = false;
      o.detail += std::string(" no fit: ") + e.what() + "; ";
    }
  }
  return o;
}

Outcome scaling_2d() {
  Outcome o{true, {}};
  const auto cfg = pde_config(2, 2.0, 2.0, 5e-4);
  const auto recs = lifespans(cfg, {0.1, 0.125, 0.16, 0.2}, o.detail);
  try {
    const auto fit = odelab::fit_scaling(recs, {.mode = odelab::FitMode::power, .min_points = 4, .min_span = 2.0});
    o.pass = std::abs(fit.slope + 2.0) <= 0.4;
    o.detail += "; slope " + num(fit.slope) + " (target -2 +- 0.4)";
  } catch (const std::invalid_argument& e) {
    o.pass = false;
    o.detail += std::string("; no fit: ") + e.what();
  }
  auto fine = cfg;
  fine.dr = cfg.dr / 2;
  const double mid = std::sqrt(0.1 * 0.2);
  const auto a = ex::run_one(cfg, mid), b = ex::run_one(fine, mid);
  const double change = std::abs(a.T_blow - b.T_blow) / b.T_blow;
  o.pass = o.pass && !a.censored() && !b.censored() && change < 0.1;
  o.detail += "; eps=" + num(mid) + " T " + num(a.T_blow) + " -> " + num(b.T_blow) + " under dr halving (" +
              num(100 * change, 3) + "%)";
  return o;
}

Outcome exponential_3d() {
  Outcome o{true, {}};
  const std::vector<double> eps = {0.2, 0.15, 0.1};
  const auto recs = lifespans(pde_config(3, 2.0, 2.0, 1e-3), eps, o.detail);
  for (const auto& r : recs) o.pass = o.pass && !r.censored;
  if (!o.pass) return o;
  // Local log-log exponents on the two neighbouring pairs. A power law keeps
  // them equal; exp(C/eps) makes them steepen as eps decreases. The smaller
  // pair must also be steeper than every exponent in the 2D band (-2 +- 0.4).
  const double s_hi = std::log(recs[1].T / recs[0].T) / std::log(eps[1] / eps[0]);
  const double s_lo = std::log(recs[2].T / recs[1].T) / std::log(eps[2] / eps[1]);
  o.pass = s_lo < s_hi && s_lo < -2.4;
  o.detail += "; local exponents " + num(s_hi) + " then " + num(s_lo) + " (need steepening and < -2.4)";
  return o;
}

// --- 9: functional diagnostics

// The traced runs integrate over the whole domain, so the grid is sized from a
// cheap windowed run to just past the blow-up time.
solver::RunSettings traced_settings(const solver::InitialDataFamily& fam, const solver::DampingParams& damping,
                                    double dr) {
  solver::RunSettings s;
  s.dim = 1;
  s.gamma = 2.0;
  s.dr = dr;
  s.cfl = 0.45;
  s.window = 2.0;
  s.horizon = 1000.0;
  s.horizon = 1.1 * solver::run_lifespan(fam, damping, s).T_blow;
  s.window = 0.0;
  // F'' and F' are differenced in time, so the cadence is refined with the grid.
  s.dt_out = 50.0 * dr;
  return s;
}

Outcome functional_diagnostics() {
  Outcome o{true, {}};
  solver::InitialDataFamily fam;
  fam.epsilon = 0.1;

  std::vector<double> identity, nonlinear;
  for (double dr : {2e-3, 1e-3}) {
    const auto run = functionals::trace_run(fam, {1.0, 2.0}, traced_settings(fam, {1.0, 2.0}, dr));
    const double t95 = 0.95 * run.record.T_blow;
    bool positive = !run.record.censored();
    for (std::size_t i = 0; i < run.trace.size(); ++i)
      if (run.trace.times[i] <= t95) positive = positive && run.trace.F[i] > 0.0;
    o.pass = o.pass && positive;
    identity.push_back(functionals::check_identity_F(run.trace, t95));
    nonlinear.push_back(functionals::check_nonlinear_lower_bound(run.trace, t95));
    if (dr == 1e-3) o.detail += "T=" + num(run.record.T_blow) + ", F>0 to 0.95T: " + (positive ? "yes" : "no") + "; ";
  }
  const double order = std::log2(identity[0] / identity[1]);
  o.pass = o.pass && identity[1] <= 5e-3 && order >= 1.0;
  o.detail += "identity residual " + num(identity[1]) + " (order " + num(order, 3) + "); ";
  const double nl_change = std::abs(nonlinear[1] - nonlinear[0]) / nonlinear[1];
  o.pass = o.pass && nonlinear[0] > 0.0 && nonlinear[1] > 0.0 && nl_change < 0.2;
  o.detail += "nonlinear ratio min " + num(nonlinear[1]) + " (change " + num(100 * nl_change, 3) + "%); ";

  std::vector<double> g;
  for (double dr : {2e-3, 1e-3}) {
    const auto run = functionals::trace_run(fam, {1.0, 1.0}, traced_settings(fam, {1.0, 1.0}, dr));
    o.pass = o.pass && !run.record.censored();
    g.push_back(functionals::check_G_inequality(run.trace, 0.95 * run.record.T_blow));
  }
  const double g_change = std::abs(g[1] - g[0]) / g[1];
  o.pass = o.pass && g[0] > 0.0 && g[1] > 0.0 && g_change < 0.2;
  o.detail += "G inequality min " + num(g[1]) + " (change " + num(100 * g_change, 3) + "%); ";

  const solver::GridLayout layout{1, 1e-3, 2.0};
  const double integral = solver::data_positivity(fam, layout).rho_phi;
  fam.epsilon = 1e-3;
  const double f1 = functionals::compute_F(solver::make_initial_data(fam, layout, 2.0));
  fam.epsilon = 1e-2;
  const double f2 = functionals::compute_F(solver::make_initial_data(fam, layout, 2.0));
  const double slope_err = std::abs((f2 - f1) / (1e-2 - 1e-3) / integral - 1.0);
  o.pass = o.pass && slope_err <= 0.01;
  o.detail += "F(0) slope error " + num(slope_err);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool long_tier = false;
  double dr_1d = 2e-4;
  std::vector<int> only, expected;
  app.add_flag("--long", long_tier, "Also run the long-running criterion 10");
  app.add_option("--dr-1d", dr_1d, "Grid spacing of the 1D scaling criterion");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--expect-fail", expected, "Criteria known to fail; their FAIL lines do not set the exit code");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "Orlicz inequalities", 10, false,
       [] { return from_suite(ex::orlicz_inequality_suite({1.2, 1.5, 2.0, 3.0})); }},
      {2, "multiplicativity", 10, false, [] { return from_suite(ex::multiplicativity_suite()); }},
      {3, "Hoelder inequality", 30, false, [] { return from_suite(ex::holder_suite({1.5, 2.0, 3.0}, 1, 1000)); }},
      {4, "test function", 60, false, [] { return from_suite(ex::testfn_suite()); }},
      {5, "ODE lifespan exponents", 300, false, ode_exponents},
      {6, "solver conservation and causality", 60, false, conservation},
      {7, "1D lifespan scaling", 1800, false, [dr_1d] { return scaling_1d(dr_1d); }},
      {8, "2D lifespan scaling", 7200, false, scaling_2d},
      {9, "functional diagnostics", 300, false, functional_diagnostics},
      {10, "3D super-polynomial lifespan", 7200, true, exponential_3d},
  };

  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> known_failures(expected.begin(), expected.end());
  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    if (c.long_running && !long_tier) {
      std::printf("SKIPPED criterion %d (%s): long-running, use --long\n", c.id, c.name);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec <= c.budget_s;
    const bool pass = o.pass && in_time;
    all = all && (pass || known_failures.count(c.id));
    std::printf("%s criterion %d (%s): %s [%.1f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), sec, c.budget_s, !pass && known_failures.count(c.id) ? " (known failure)" : "");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
