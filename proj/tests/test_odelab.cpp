#include "doctest.h"

#include "lifespan/odelab.hpp"
#include "lifespan/rosenbrock.hpp"

#include <cmath>
#include <random>

using namespace lifespan::odelab;

TEST_CASE("piecewise power nonlinearity") {
  const PiecewisePowerN N(1.0, 2.0);
  CHECK(N(0.0) == 0.0);
  CHECK(N(-1.0) == 0.0);
  CHECK(N(0.5) == doctest::Approx(0.25));
  CHECK(N(2.0) == doctest::Approx(8.0));
  CHECK(N(1.0) == doctest::Approx(1.0));
  for (double p : {0.1, 0.9, 1.5, 7.0}) {
    CHECK(N(p) > 0);
    CHECK(N.derivative(p) > 0);
    CHECK(N.derivative(p) == doctest::Approx((N(p + 1e-6) - N(p - 1e-6)) / 2e-6).epsilon(1e-6));
  }
  CHECK_THROWS(PiecewisePowerN(0.0, 1.0));
}

TEST_CASE("Rosenbrock stepper reaches fourth order on a non-autonomous problem") {
  // y' = -y + cos t has y = (cos t + sin t)/2 + (y0 - 1/2) e^{-t}.
  using S = Rosenbrock4<1>;
  auto f = [](const S::State& y, double t) { return S::State(-y[0] + std::cos(t)); };
  auto jac = [](const S::State&, double t, S::Matrix& J, S::State& d) {
    J(0, 0) = -1;
    d[0] = -std::sin(t);
  };
  auto exact = [](double t) { return 0.5 * (std::cos(t) + std::sin(t)) + 0.5 * std::exp(-t); };
  long prev_steps = 0;
  for (double tol : {1e-6, 1e-10}) {
    S st(tol, tol);
    st.initialize(S::State(1.0), 0.0, 1e-2);
    long steps = 0;
    double worst = 0;
    while (st.current_time() < 10) {
      st.do_step(f, jac);
      ++steps;
      worst = std::max(worst, std::abs(st.current_state()[0] - exact(st.current_time())));
      const double mid = 0.5 * (st.previous_time() + st.current_time());
      worst = std::max(worst, std::abs(st.calc_state(mid)[0] - exact(mid)));
    }
    CHECK(worst < 100 * tol);
    if (prev_steps) CHECK(double(steps) / prev_steps < 20.0);  // ~10^(4/4) for an order-4 pair
    prev_steps = steps;
  }
}

TEST_CASE("blow-up ODE") {
  SUBCASE("no forcing never blows up") {
    OdeRunConfig c;
    c.epsilon = 0.01;
    c.c0 = 0;
    const auto r = integrate_blowup_ode(c, PiecewisePowerN(1, 1));
    CHECK(r.censored);
    CHECK(std::isnan(r.cap_sensitivity()));
  }
  SUBCASE("lambda = 0 lifespan halves with doubled amplitude") {
    OdeRunConfig c;
    c.epsilon = 0.01;
    const auto a = integrate_blowup_ode(c, PiecewisePowerN(1, 1));
    c.epsilon = 0.005;
    const auto b = integrate_blowup_ode(c, PiecewisePowerN(1, 1));
    REQUIRE(!a.censored);
    CHECK(a.cap_insensitive());
    CHECK(b.T / a.T == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("I'' + I' = I^2 against an independent explicit integration") {
    // Classical RK4 on a fixed fine grid up to I = 1e4. Near blow-up I'' ~ I^2,
    // so I ~ 6 / (T - t)^2 and the remaining time from level L is sqrt(6 / L).
    OdeRunConfig c;
    c.epsilon = 0.5;
    const auto r = integrate_blowup_ode(c, PiecewisePowerN(1, 1));
    double t = 0, y = 0.5, v = 0;
    const double h = 1e-4;
    auto acc = [](double y, double v) { return -v + y * y; };
    while (y < 1e4) {
      const double k1y = v, k1v = acc(y, v);
      const double k2y = v + 0.5 * h * k1v, k2v = acc(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
      const double k3y = v + 0.5 * h * k2v, k3v = acc(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
      const double k4y = v + h * k3v, k4v = acc(y + h * k3y, v + h * k3v);
      y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      t += h;
    }
    CHECK(r.T + std::sqrt(6 / c.cap) == doctest::Approx(t + std::sqrt(6 / y)).epsilon(1e-4));
  }
  CHECK_THROWS(integrate_blowup_ode(OdeRunConfig{.lambda = 1.5}, PiecewisePowerN(1, 1)));
  CHECK_THROWS(integrate_blowup_ode(OdeRunConfig{.epsilon = 0}, PiecewisePowerN(1, 1)));
}

TEST_CASE("auxiliary problem") {
  const PiecewisePowerN N(2, 2);
  const AuxiliaryJ J = solve_auxiliary_J(1.0, 1.0, N);
  CHECK(J.Mcal(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(J.blowup_time() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(J(0.0) == doctest::Approx(1.0).epsilon(1e-15));

  const PiecewisePowerN N2(1.0, 0.5);
  for (double J0 : {0.05, 1.0, 3.0}) {
    const AuxiliaryJ a = solve_auxiliary_J(J0, 0.7, N2);
    for (double y = 0.01; y < 200; y *= 1.37) CHECK(a.Mcal(a.Mcal_inverse(y)) == doctest::Approx(y).epsilon(1e-10));

    // J' = eta M(J) by the Rosenbrock stepper, compared with the closed form.
    using S = Rosenbrock4<1>;
    const PiecewisePowerN M = N2.halved();
    auto f = [&](const S::State& y, double) { return S::State(0.7 * M(y[0])); };
    auto jac = [&](const S::State& y, double, S::Matrix& Jm, S::State& d) {
      Jm(0, 0) = 0.7 * M.derivative(y[0]);
      d[0] = 0;
    };
    S st(1e-14, 1e-11);
    st.initialize(S::State(J0), 0.0, 1e-4);
    const double t_end = 0.99 * a.blowup_time();
    while (st.current_time() < t_end) {
      st.do_step(f, jac);
      const double t = std::min(st.current_time(), t_end);
      CHECK(st.calc_state(t)[0] == doctest::Approx(a(t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("comparison and convexity lemmas") {
  CHECK(check_comparison_lemma(100, 1).pass_fraction() == 1.0);
  CHECK(check_convexity_lemma(100, 2).pass_fraction() == 1.0);
  CHECK_THROWS(check_comparison_lemma(0, 1));
}

TEST_CASE("super-multiplicativity of N") {
  const PiecewisePowerN N(2.0, 1.0);
  const double a = multiplicativity_min(N, 3, 10), b = multiplicativity_min(N, 3, 20);
  CHECK(a > 0);
  CHECK(b == doctest::Approx(a).epsilon(1e-6));
  CHECK(multiplicativity_min(PiecewisePowerN(1, 1, 2, 2), 3, 10) == doctest::Approx(0.5));
}

TEST_CASE("scaling fits") {
  std::vector<ScalingRecord> exact, noisy, expo;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 8; ++i) {
    const double e = std::pow(10.0, -4 + 2.0 * i / 7);
    exact.push_back({e, std::pow(e, -2.0)});
    noisy.push_back({e, 3 / e * (1 + 0.01 * u(rng))});
    const double ee = 0.05 + 0.45 * i / 7;
    expo.push_back({ee, std::exp(2 / ee)});
  }
  const ScalingFit a = fit_scaling(exact);
  CHECK(a.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(a.r_squared == doctest::Approx(1.0));
  CHECK(fit_scaling(noisy).slope == doctest::Approx(-1.0).epsilon(0.02));
  const ScalingFit c = fit_scaling(expo, {.mode = FitMode::exponential, .alpha = 1.0});
  CHECK(c.slope == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(c.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  auto few = exact;
  few.resize(3);
  CHECK_THROWS(fit_scaling(few));
  for (auto& r : exact) r.censored = true;
  CHECK_THROWS(fit_scaling(exact));
  CHECK_THROWS(fit_scaling({{0.1, 10}, {0.11, 9}, {0.12, 8}, {0.13, 7}}));
  CHECK(fit_mode_from_string(to_string(FitMode::exponential)) == FitMode::exponential);
}
