#include "lifespan/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace lifespan::solver;

namespace {

// Composite Simpson rule, used as the quadrature oracle.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

FluidState rest_state(int dim, double dr, double r_max, double gamma = 2.0) {
  InitialDataFamily fam;
  fam.epsilon = 0.0;
  return make_initial_data(fam, {dim, dr, r_max}, gamma);
}

RunSettings settings_1d(double dr, double horizon, double window = 3.0) {
  RunSettings s;
  s.dim = 1;
  s.gamma = 2.0;
  s.dr = dr;
  s.cfl = 0.45;
  s.window = window;
  s.horizon = horizon;
  return s;
}

double max_abs(const Eigen::ArrayXd& a) { return a.abs().maxCoeff(); }

}  // namespace

TEST_CASE("kernel integral matches quadrature") {
  for (double lambda : {1.0, 1.5, 2.0, 3.0}) {
    const DampingParams d{1.0, lambda};
    const double ref = simpson([&](double s) { return std::pow(1.0 + s, -lambda); }, 0.3, 7.0, 20000);
    CHECK(d.kernel_integral(0.3, 7.0) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(DampingParams{1.0, 1.0}.kernel_integral(0.0, std::exp(2.0) - 1.0) == doctest::Approx(2.0));
}

TEST_CASE("damping ranges are reported") {
  CHECK(DampingParams{1.0, 2.0}.in_scattering_range());
  CHECK_FALSE(DampingParams{1.0, 1.0}.in_scattering_range());
  CHECK(DampingParams{1.0, 1.0}.in_scale_invariant_range(1));
  CHECK(DampingParams{2.0, 1.0}.in_scale_invariant_range(1));
  CHECK_FALSE(DampingParams{2.0, 1.0}.in_scale_invariant_range(2));
}

TEST_CASE("theta and density conversions invert each other") {
  for (double gamma : {1.2, 1.5, 2.0, 3.0}) {
    for (double rho : {0.3, 0.99, 1.0, 1.5, 4.0}) {
      CHECK(density_from_theta(theta_from_density(rho, gamma), gamma) == doctest::Approx(rho).epsilon(1e-14));
    }
    CHECK(theta_from_density(1.0, gamma) == 0.0);
  }
  CHECK_THROWS(theta_from_density(0.0, 2.0));
  CHECK_THROWS(density_from_theta(-3.0, 2.0));
}

TEST_CASE("zero amplitude gives the constant state") {
  const FluidState s = rest_state(1, 1e-3, 2.0);
  CHECK(max_abs(s.theta) == 0.0);
  CHECK(max_abs(s.u) == 0.0);
}

TEST_CASE("initial data") {
  InitialDataFamily fam;
  fam.epsilon = 0.01;

  SUBCASE("positivity integral matches quadrature") {
    // int_{-1}^{1} (1-x^2)^2 cosh x dx
    const double oracle = simpson([](double x) { return std::pow(1 - x * x, 2) * std::cosh(x); }, -1.0, 1.0, 20000);
    CHECK(oracle == doctest::Approx(1.1450059220715919).epsilon(1e-12));
    const auto pos = data_positivity(fam, {1, 1e-3, 2.0});
    CHECK(pos.rho_phi == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(pos.u_grad_phi > 0.0);
  }

  SUBCASE("profile vanishes outside the unit ball") {
    for (int dim : {1, 2, 3}) {
      const FluidState s = make_initial_data(fam, {dim, 1e-3, 2.0}, 2.0);
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (i * s.dr >= 1.0) {
          REQUIRE(s.theta[i] == 0.0);
          REQUIRE(s.u[i] == 0.0);
        }
      }
      CHECK(s.u[0] == 0.0);
      CHECK(s.density()[0] == doctest::Approx(1.0 + fam.epsilon).epsilon(1e-14));
    }
  }

  SUBCASE("rejects coarse grids and bad parameters") {
    CHECK_THROWS_AS(make_initial_data(fam, {1, 1e-2, 2.0}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(make_initial_data(fam, {1, 1e-3, 0.5}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(make_initial_data(fam, {1, 1e-3, 2.0}, 1.0), std::invalid_argument);
    InitialDataFamily bad = fam;
    bad.bump_k = 1;
    CHECK_THROWS_AS(make_initial_data(bad, {1, 1e-3, 2.0}, 2.0), std::invalid_argument);
  }
}

TEST_CASE("constant state is an exact fixed point") {
  const DampingParams damping{1.0, 1.0};
  for (int dim : {1, 2, 3}) {
    FluidState s = rest_state(dim, 5e-3, 1.5);
    for (int k = 0; k < 10000; ++k) s = step(s, damping, 0.45);
    CHECK(max_abs(s.theta) <= 1e-15);
    CHECK(max_abs(s.u) <= 1e-15);
    CHECK(s.t > 0.0);
  }
}

TEST_CASE("mass is conserved per step") {
  InitialDataFamily fam;
  fam.epsilon = 0.1;
  const DampingParams damping{1.0, 2.0};
  for (int dim : {1, 2, 3}) {
    FluidState s = make_initial_data(fam, {dim, 2e-3, 3.0}, 2.0);
    double worst = 0.0;
    double m = total_mass(s);
    for (int k = 0; k < 200; ++k) {
      s = step(s, damping, 0.45);
      const double next = total_mass(s);
      worst = std::max(worst, std::abs(next - m) / m);
      m = next;
    }
    INFO("dim = " << dim);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("strong damping makes the velocity decay") {
  InitialDataFamily fam;
  fam.epsilon = 1e-3;
  FluidState s = make_initial_data(fam, {1, 2e-3, 2.0}, 2.0);
  const DampingParams damping{50.0, 1.0};
  double prev = max_abs(s.u);
  for (int k = 0; k < 50; ++k) {
    s = step(s, damping, 0.45);
    const double cur = max_abs(s.u);
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("step rejects invalid input") {
  const FluidState s = rest_state(1, 5e-3, 1.5);
  CHECK_THROWS_AS(step(s, {}, 1.5), std::invalid_argument);
  FluidState bad = s;
  bad.theta[3] = -10.0;
  CHECK_THROWS(step(bad, {}, 0.4));
}

TEST_CASE("detect_blowup") {
  const FluidState rest = rest_state(1, 1e-3, 2.0);
  CHECK_FALSE(detect_blowup(rest, 1.0));
  CHECK_THROWS_AS(detect_blowup(rest, 0.0), std::invalid_argument);

  // Riemann-type data: a compressive velocity jump steepens into a shock.
  FluidState s = rest;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double r = i * s.dr;
    if (r > 0.4 && r < 0.6) s.u[i] = 0.1 * (r - 0.4) / 0.2;
    else if (r >= 0.6 && r < 0.8) s.u[i] = 0.1 * (0.8 - r) / 0.2;
  }
  CHECK_FALSE(detect_blowup(s, 5.0));
  bool hit = false;
  for (int k = 0; k < 20000 && !hit; ++k) {
    s = step(s, {}, 0.45);
    hit = detect_blowup(s, 5.0);
  }
  CHECK(hit);
}

TEST_CASE("blow-up criterion level") {
  BlowupCriterion c;
  c.threshold = 2.0;
  c.growth_factor = 5.0;
  CHECK(c.level(0.1) == 2.0);
  CHECK(c.level(1.0) == 5.0);
}

TEST_CASE("names round trip") {
  for (auto r : {Termination::gradient_threshold, Termination::dt_collapse, Termination::density_floor,
                 Termination::horizon_reached})
    CHECK(termination_from_string(to_string(r)) == r);
  for (auto l : {Limiter::minmod, Limiter::mc}) CHECK(limiter_from_string(to_string(l)) == l);
  for (auto g : {GrowthReference::initial, GrowthReference::running_min})
    CHECK(growth_reference_from_string(to_string(g)) == g);
  CHECK_THROWS(termination_from_string("exploded"));
  CHECK_THROWS(limiter_from_string("superbee"));
}

TEST_CASE("support and symmetry hold at every output time") {
  InitialDataFamily fam;
  fam.epsilon = 0.1;
  for (int dim : {1, 2, 3}) {
    RunSettings s;
    s.dim = dim;
    s.dr = 2e-3;
    s.cfl = 0.45;
    s.horizon = 4.0;
    s.dt_out = 0.25;
    double worst = -1.0;
    double origin_u = 0.0;
    int calls = 0;
    run_lifespan(fam, {1.0, 2.0}, s, [&](const FluidState& st, double) {
      ++calls;
      worst = std::max(worst, support_radius(st, 1e-12) - (1.0 + st.t + 5.0 * st.dr));
      origin_u = std::max(origin_u, std::abs(st.u[0]));
      REQUIRE((st.density() > 0.0).all());
    });
    INFO("dim = " << dim);
    CHECK(calls >= 17);
    CHECK(worst <= 0.0);
    CHECK(origin_u == 0.0);
  }
}

TEST_CASE("smooth solutions converge at second order") {
  // Short run before any steepening; three grids, compared on the coarse nodes.
  InitialDataFamily fam;
  fam.epsilon = 0.05;
  std::vector<FluidState> finals;
  for (double dr : {4e-3, 2e-3, 1e-3}) {
    RunSettings s;
    s.dr = dr;
    s.cfl = 0.4;
    s.horizon = 0.25;
    FluidState last;
    const auto rec = run_lifespan(fam, {}, s, [&](const FluidState& st, double) { last = st; });
    REQUIRE(rec.censored());
    REQUIRE(last.t == doctest::Approx(0.25));
    finals.push_back(last);
  }
  auto diff = [&](const FluidState& a, const FluidState& b) {
    const int ratio = static_cast<int>(std::lround(a.dr / b.dr));
    double sum = 0.0;
    const auto n = static_cast<Eigen::Index>(1.25 / a.dr);
    for (Eigen::Index i = 0; i <= n; ++i) sum += std::abs(a.u[i] - b.u[i * ratio]) * a.dr;
    return sum;
  };
  const double e1 = diff(finals[0], finals[1]);
  const double e2 = diff(finals[1], finals[2]);
  const double order = std::log2(e1 / e2);
  INFO("order = " << order);
  CHECK(order >= 1.5);
}

TEST_CASE("lifespan") {
  SUBCASE("horizon-censored run") {
    InitialDataFamily fam;
    fam.epsilon = 0.01;
    const auto rec = run_lifespan(fam, {1.0, 2.0}, settings_1d(2e-3, 1.0));
    CHECK(rec.reason == Termination::horizon_reached);
    CHECK(rec.censored());
    CHECK(rec.T_blow == doctest::Approx(1.0));
  }

  SUBCASE("scattering damping: halving eps doubles T") {
    std::vector<double> T;
    for (double eps : {0.04, 0.06, 0.08}) {
      InitialDataFamily fam;
      fam.epsilon = eps;
      const auto rec = run_lifespan(fam, {1.0, 2.0}, settings_1d(2e-3, 200.0));
      REQUIRE(rec.reason == Termination::gradient_threshold);
      T.push_back(rec.T_blow);
    }
    CHECK(T[0] > T[1]);
    CHECK(T[1] > T[2]);
    CHECK(T[0] / T[2] == doctest::Approx(2.0).epsilon(0.25));
  }

  SUBCASE("growth reference matters only after an initial decay") {
    InitialDataFamily fam;
    fam.epsilon = 0.08;
    RunSettings s = settings_1d(2e-3, 200.0);
    const auto running = run_lifespan(fam, {1.0, 2.0}, s);
    s.blowup.reference = GrowthReference::initial;
    const auto initial = run_lifespan(fam, {1.0, 2.0}, s);
    CHECK(running.min_gradient <= running.initial_gradient);
    CHECK(initial.T_blow >= running.T_blow);
  }

  SUBCASE("invalid settings") {
    InitialDataFamily fam;
    RunSettings s = settings_1d(2e-3, 1.0);
    s.cfl = 1.0;
    CHECK_THROWS_AS(run_lifespan(fam, {}, s), std::invalid_argument);
    s = settings_1d(2e-3, -1.0);
    CHECK_THROWS_AS(run_lifespan(fam, {}, s), std::invalid_argument);
    s = settings_1d(2e-3, 1.0);
    s.blowup.growth_factor = 1.0;
    CHECK_THROWS_AS(run_lifespan(fam, {}, s), std::invalid_argument);
    CHECK_THROWS_AS(run_lifespan(fam, {-1.0, 1.0}, settings_1d(2e-3, 1.0)), std::invalid_argument);
  }
}

TEST_CASE("p-system backend") {
  SUBCASE("mass coordinate of the data") {
    InitialDataFamily fam;
    fam.epsilon = 0.1;
    const double oracle = simpson([&](double x) { return 1.0 + fam.epsilon * fam.rho0(x); }, 0.0, 0.7, 2000);
    CHECK(mass_coordinate(fam, 0.7) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(mass_coordinate(fam, 2.0) == doctest::Approx(2.0 + mass_coordinate(fam, 1.0) - 1.0));
  }

  SUBCASE("data inversion") {
    InitialDataFamily fam;
    fam.epsilon = 0.1;
    const PSystemState s = make_psystem_data(fam, 1e-3, 3.0, 2.0);
    // v(m(x)) = 1/rho(x) at x = 0.5.
    const double m = mass_coordinate(fam, 0.5);
    const auto j = static_cast<Eigen::Index>(std::lround(m / s.dm));
    const double x = 0.5 + (j * s.dm - m) / (1.0 + fam.epsilon * fam.rho0(0.5));
    CHECK(s.v[j] == doctest::Approx(1.0 / (1.0 + fam.epsilon * fam.rho0(x))).epsilon(1e-9));
    CHECK(s.v[s.v.size() - 1] == 1.0);
  }

  SUBCASE("constant state does not blow up") {
    InitialDataFamily fam;
    fam.epsilon = 0.0;
    const auto rec = run_psystem_1d(fam, {1.0, 1.0}, settings_1d(2e-3, 5.0));
    CHECK(rec.reason == Termination::horizon_reached);
    CHECK(rec.peak_gradient == 0.0);
  }

  SUBCASE("volume is conserved per step") {
    InitialDataFamily fam;
    fam.epsilon = 0.1;
    PSystemState s = make_psystem_data(fam, 2e-3, 3.0, 2.0);
    double vol = psystem_volume(s);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      s = psystem_step(s, {1.0, 1.0}, 0.45);
      const double next = psystem_volume(s);
      worst = std::max(worst, std::abs(next - vol) / vol);
      vol = next;
    }
    CHECK(worst <= 1e-10);
  }

  SUBCASE("agrees with the Eulerian backend") {
    InitialDataFamily fam;
    fam.epsilon = 0.05;
    const RunSettings s = settings_1d(2e-3, 1000.0);
    const auto euler = run_lifespan(fam, {1.0, 1.0}, s);
    const auto lagrange = run_psystem_1d(fam, {1.0, 1.0}, s);
    REQUIRE(euler.reason == Termination::gradient_threshold);
    REQUIRE(lagrange.reason == Termination::gradient_threshold);
    CHECK(std::abs(lagrange.T_blow - euler.T_blow) / euler.T_blow <= 0.15);
  }

  SUBCASE("rejects other dimensions") {
    InitialDataFamily fam;
    RunSettings s = settings_1d(2e-3, 1.0);
    s.dim = 2;
    CHECK_THROWS_AS(run_psystem_1d(fam, {}, s), std::invalid_argument);
  }
}
