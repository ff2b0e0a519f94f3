#include "lifespan/odelab.hpp"

#include "lifespan/rosenbrock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace lifespan::odelab {

PiecewisePowerN::PiecewisePowerN(double a, double b, double cl, double ch)
    : alpha(a), beta(b), c_low(cl), c_high(ch) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("PiecewisePowerN: alpha and beta must be positive");
  if (!(cl > 0) || !(ch > 0)) throw std::invalid_argument("PiecewisePowerN: constants must be positive");
}

double PiecewisePowerN::operator()(double p) const {
  if (p <= 0) return 0.0;
  return p <= 1 ? c_low * std::pow(p, 1 + alpha) : c_high * std::pow(p, 1 + beta);
}

double PiecewisePowerN::derivative(double p) const {
  if (p <= 0) return 0.0;
  return p <= 1 ? c_low * (1 + alpha) * std::pow(p, alpha) : c_high * (1 + beta) * std::pow(p, beta);
}

void OdeRunConfig::validate() const {
  if (!(lambda >= 0 && lambda <= 1)) throw std::invalid_argument("OdeRunConfig: lambda must lie in [0,1]");
  if (!(epsilon > 0)) throw std::invalid_argument("OdeRunConfig: epsilon must be positive");
  if (!(c0 >= 0)) throw std::invalid_argument("OdeRunConfig: c0 must be non-negative");
  if (!(I1 >= 0)) throw std::invalid_argument("OdeRunConfig: I1 must be non-negative");
  if (!(cap > 1)) throw std::invalid_argument("OdeRunConfig: cap must exceed 1");
  if (!(rtol > 0) || !(atol > 0)) throw std::invalid_argument("OdeRunConfig: tolerances must be positive");
  if (max_steps < 1) throw std::invalid_argument("OdeRunConfig: max_steps must be positive");
}

double OdeLifespan::cap_sensitivity() const {
  if (censored) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(T_cap10 - T) / T;
}

namespace {

/// Steps until component `component` reaches `level` and returns the crossing
/// time (bisection on the dense output), or NaN when the budget runs out or
/// on_step asks to stop.
template <int N, typename F, typename J, typename OnStep>
double advance_to_level(Rosenbrock4<N>& st, F& f, J& jac, int component, double level, double t_max,
                        long max_steps, long& steps, OnStep on_step) {
  if (st.current_state()[component] >= level) return st.current_time();
  while (steps < max_steps && st.current_time() < t_max) {
    st.do_step(f, jac);
    ++steps;
    if (!on_step(st)) break;
    const double v = st.current_state()[component];
    if (!std::isfinite(v)) break;
    if (v >= level) {
      double lo = st.previous_time(), hi = st.current_time();
      for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (st.calc_state(mid)[component] >= level ? hi : lo) = mid;
      }
      return hi;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

template <int N, typename F, typename J>
double advance_to_level(Rosenbrock4<N>& st, F& f, J& jac, int component, double level, double t_max,
                        long max_steps, long& steps) {
  return advance_to_level(st, f, jac, component, level, t_max, max_steps, steps,
                          [](const Rosenbrock4<N>&) { return true; });
}

}  // namespace

OdeLifespan integrate_blowup_ode(const OdeRunConfig& cfg, const PiecewisePowerN& N) {
  cfg.validate();
  using Stepper = Rosenbrock4<2>;
  using V = Stepper::State;
  const double c0 = cfg.c0, lam = cfg.lambda;

  auto rhs = [&](const V& y, double t) { return V(y[1], -y[1] + c0 * std::pow(1 + t, -lam) * N(y[0])); };
  auto jac = [&](const V& y, double t, Stepper::Matrix& J, V& dfdt) {
    const double w = c0 * std::pow(1 + t, -lam);
    J << 0, 1, w * N.derivative(y[0]), -1;
    dfdt << 0, -lam * w / (1 + t) * N(y[0]);
  };

  Stepper st(cfg.atol, cfg.rtol);
  st.initialize(V(cfg.epsilon, cfg.I1), 0.0, 1e-3);

  OdeLifespan out;
  try {
    out.T = advance_to_level(st, rhs, jac, 0, cfg.cap, cfg.t_max, cfg.max_steps, out.steps);
    if (std::isfinite(out.T))
      out.T_cap10 = advance_to_level(st, rhs, jac, 0, 10 * cfg.cap, cfg.t_max, cfg.max_steps, out.steps);
  } catch (const StepAdjustmentError&) {
    out.T = std::numeric_limits<double>::quiet_NaN();
  }
  out.censored = !std::isfinite(out.T) || !std::isfinite(out.T_cap10);
  return out;
}

AuxiliaryJ::AuxiliaryJ(double J0, double eta, const PiecewisePowerN& N)
    : J0_(J0), eta_(eta), a_(N.alpha / 2), b_(N.beta / 2) {
  if (!(J0 > 0) || !(eta > 0)) throw std::invalid_argument("AuxiliaryJ: J0 and eta must be positive");
}

double AuxiliaryJ::Mcal(double p) const {
  if (p >= 1) return std::pow(p, -b_) / b_;
  return (std::pow(p, -a_) - 1) / a_ + 1 / b_;
}

double AuxiliaryJ::Mcal_inverse(double y) const {
  if (!(y > 0)) return std::numeric_limits<double>::infinity();
  if (y <= 1 / b_) return std::pow(b_ * y, -1 / b_);
  return std::pow(a_ * (y - 1 / b_) + 1, -1 / a_);
}

AuxiliaryJ solve_auxiliary_J(double J0, double eta, const PiecewisePowerN& N) { return AuxiliaryJ(J0, eta, N); }

namespace {

/// Positive coefficient a(t) or b(t) with its time derivative.
struct Coefficient {
  int kind = 0;  // 0 constant, 1 power of (1+t), 2 oscillating
  double scale = 1, param = 0, freq = 1;

  double value(double t) const {
    switch (kind) {
      case 1: return scale * std::pow(1 + t, param);
      case 2: return scale * (1 + param * std::sin(freq * t));
      default: return scale;
    }
  }
  double derivative(double t) const {
    switch (kind) {
      case 1: return scale * param * std::pow(1 + t, param - 1);
      case 2: return scale * param * freq * std::cos(freq * t);
      default: return 0.0;
    }
  }
};

Coefficient sample_coefficient(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Coefficient c;
  c.kind = int(u(rng) * 3) % 3;
  c.scale = 0.2 + 1.8 * u(rng);
  if (c.kind == 1) c.param = -1 + 2 * u(rng);
  if (c.kind == 2) {
    c.param = 0.9 * u(rng);
    c.freq = 0.1 + 3 * u(rng);
  }
  return c;
}

PiecewisePowerN sample_nonlinearity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return PiecewisePowerN(0.25 + 2.75 * u(rng), 0.25 + 2.75 * u(rng));
}

constexpr double kPropertyCap = 1e6;
constexpr double kPropertyHorizon = 20.0;
constexpr long kPropertyMaxSteps = 200000;

}  // namespace

PropertyReport check_comparison_lemma(int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("check_comparison_lemma: sample_count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropertyReport rep;
  for (int i = 0; i < sample_count; ++i) {
    const Coefficient a = sample_coefficient(rng), b = sample_coefficient(rng);
    const PiecewisePowerN N = sample_nonlinearity(rng);
    const double k0 = 0.1 + 1.9 * u(rng), k1 = u(rng);
    const int data_case = i % 3;  // strict value gap, strict slope gap, both
    const double h0 = data_case == 1 ? k0 : k0 * (1 - 0.5 * u(rng)) - 1e-3;
    const double h1 = data_case == 0 ? k1 : k1 - 0.01 - 0.5 * u(rng);
    constexpr double shrink = 0.9;

    using Stepper = Rosenbrock4<4>;
    using V = Stepper::State;
    auto rhs = [&](const V& y, double t) {
      const double at = a.value(t), bt = b.value(t);
      return V(y[1], (bt * N(y[0]) - y[1]) / at, y[3], (shrink * bt * N(y[2]) - y[3]) / at);
    };
    auto jac = [&](const V& y, double t, Stepper::Matrix& J, V& dfdt) {
      const double at = a.value(t), bt = b.value(t), da = a.derivative(t), db = b.derivative(t);
      J.setZero();
      J(0, 1) = 1;
      J(1, 0) = bt * N.derivative(y[0]) / at;
      J(1, 1) = -1 / at;
      J(2, 3) = 1;
      J(3, 2) = shrink * bt * N.derivative(y[2]) / at;
      J(3, 3) = -1 / at;
      dfdt[0] = 0;
      dfdt[1] = db * N(y[0]) / at - (bt * N(y[0]) - y[1]) * da / (at * at);
      dfdt[2] = 0;
      dfdt[3] = shrink * db * N(y[2]) / at - (shrink * bt * N(y[2]) - y[3]) * da / (at * at);
    };

    Stepper st(1e-12, 1e-10);
    st.initialize(V(k0, k1, h0, h1), 0.0, 1e-4);
    bool ok = true;
    long steps = 0;
    try {
      advance_to_level(st, rhs, jac, 0, kPropertyCap, kPropertyHorizon, kPropertyMaxSteps, steps,
                       [&](const Stepper& s) {
                         const V& x = s.current_state();
                         if (!(x[1] > x[3])) ok = false;
                         return ok && x[2] < kPropertyCap;
                       });
    } catch (const StepAdjustmentError&) {
      ok = false;
    }
    ++rep.instances;
    if (ok) ++rep.passed;
  }
  return rep;
}

PropertyReport check_convexity_lemma(int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("check_convexity_lemma: sample_count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropertyReport rep;
  for (int i = 0; i < sample_count; ++i) {
    const Coefficient a = sample_coefficient(rng);
    const PiecewisePowerN N = sample_nonlinearity(rng);
    const double c = 0.1 + 4.9 * u(rng);
    const double h0 = 0.1 + 1.9 * u(rng);

    using Stepper = Rosenbrock4<2>;
    using V = Stepper::State;
    auto second = [&](double h, double hp, double t) { return (c * N(h) - hp) / a.value(t); };
    auto rhs = [&](const V& y, double t) { return V(y[1], second(y[0], y[1], t)); };
    auto jac = [&](const V& y, double t, Stepper::Matrix& J, V& dfdt) {
      const double at = a.value(t);
      J << 0, 1, c * N.derivative(y[0]) / at, -1 / at;
      dfdt << 0, -second(y[0], y[1], t) * a.derivative(t) / at;
    };

    bool ok = second(h0, 0, 0) > 0;
    Stepper st(1e-12, 1e-10);
    st.initialize(V(h0, 0), 0.0, 1e-4);
    long steps = 0;
    try {
      advance_to_level(st, rhs, jac, 0, kPropertyCap, kPropertyHorizon, kPropertyMaxSteps, steps,
                       [&](const Stepper& s) {
                         const V& x = s.current_state();
                         if (!(second(x[0], x[1], s.current_time()) > 0)) ok = false;
                         return ok;
                       });
    } catch (const StepAdjustmentError&) {
      ok = false;
    }
    ++rep.instances;
    if (ok) ++rep.passed;
  }
  return rep;
}

double multiplicativity_min(const PiecewisePowerN& N, double decades, int points_per_decade) {
  if (!(decades > 0) || points_per_decade < 1) throw std::invalid_argument("multiplicativity_min: bad grid");
  const int n = int(std::lround(2 * decades * points_per_decade));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double p = std::pow(10.0, -decades + double(i) / points_per_decade);
    for (int j = 0; j <= n; ++j) {
      const double q = std::pow(10.0, -decades + double(j) / points_per_decade);
      best = std::min(best, N(p * q) / (N(p) * N(q)));
    }
  }
  return best;
}

ScalingFit fit_scaling(const std::vector<ScalingRecord>& records, const FitOptions& opt) {
  std::vector<double> x, y;
  double emin = std::numeric_limits<double>::infinity(), emax = 0;
  for (const auto& r : records) {
    if (r.censored || !(r.epsilon > 0) || !(r.T > 0) || !std::isfinite(r.T)) continue;
    x.push_back(opt.mode == FitMode::power ? std::log(r.epsilon) : std::pow(r.epsilon, -opt.alpha));
    y.push_back(std::log(r.T));
    emin = std::min(emin, r.epsilon);
    emax = std::max(emax, r.epsilon);
  }
  const int n = int(x.size());
  if (n < std::max(opt.min_points, 3))
    throw std::invalid_argument("fit_scaling: need at least " + std::to_string(std::max(opt.min_points, 3)) +
                                " uncensored records, have " + std::to_string(n));
  if (emax / emin < opt.min_span * (1 - 1e-12))
    throw std::invalid_argument("fit_scaling: epsilon range too narrow");

  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  ScalingFit f;
  f.mode = opt.mode;
  f.n_points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    ssr += e * e;
  }
  f.stderr_slope = std::sqrt(ssr / (n - 2) / sxx);
  f.r_squared = syy > 0 ? 1 - ssr / syy : 1.0;
  return f;
}

std::string to_string(FitMode m) { return m == FitMode::power ? "power" : "exponential"; }

FitMode fit_mode_from_string(const std::string& s) {
  if (s == "power") return FitMode::power;
  if (s == "exponential") return FitMode::exponential;
  throw std::invalid_argument("unknown fit mode '" + s + "'");
}

}  // namespace lifespan::odelab
