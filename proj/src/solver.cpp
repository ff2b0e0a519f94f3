#include "lifespan/solver.hpp"

#include "lifespan/testfn.hpp"
#include "schemes.hpp"

#include <array>
#include <cmath>

namespace lifespan::solver {

double DampingParams::kernel_integral(double a, double b) const {
  const double rel = (b - a) / (1.0 + a);
  if (lambda == 1.0) return std::log1p(rel);
  const double k = 1.0 - lambda;
  return std::pow(1.0 + a, k) * std::expm1(k * std::log1p(rel)) / k;
}

double theta_from_density(double rho, double gamma) {
  if (!(rho > 0.0)) throw std::invalid_argument("theta_from_density: rho must be positive");
  const double e = 0.5 * (gamma - 1.0);
  return std::expm1(e * std::log1p(rho - 1.0)) / e;
}

double density_from_theta(double theta, double gamma) {
  const double e = 0.5 * (gamma - 1.0);
  const double s = 1.0 + e * theta;
  if (!(s > 0.0)) throw std::invalid_argument("density_from_theta: sound speed must be positive");
  return std::pow(s, 1.0 / e);
}

double InitialDataFamily::rho0(double r) const {
  const double s = 1.0 - r * r;
  return s > 0.0 ? a_rho * std::pow(s, bump_k) : 0.0;
}

double InitialDataFamily::u0(double r) const {
  const double s = 1.0 - r * r;
  return s > 0.0 ? a_u * r * std::pow(s, bump_k) : 0.0;
}

namespace {

void validate(const InitialDataFamily& fam) {
  if (!(fam.epsilon >= 0.0) || !std::isfinite(fam.epsilon))
    throw std::invalid_argument("initial data: epsilon must be non-negative");
  if (fam.bump_k < 2) throw std::invalid_argument("initial data: bump exponent must be >= 2");
  if (!(fam.a_rho > 0.0) || !(fam.a_u > 0.0)) throw std::invalid_argument("initial data: amplitudes must be positive");
}

RadialGridFunction sample_layout(const GridLayout& layout) {
  return RadialGridFunction::zeros(layout.dim, layout.dr, layout.r_max);
}

}  // namespace

DataPositivity data_positivity(const InitialDataFamily& fam, const GridLayout& layout) {
  validate(fam);
  const testfn::TestFunctionContext ctx(layout.dim);
  const auto grid = sample_layout(layout);
  const Eigen::ArrayXd w = grid.trapezoid_weights();
  DataPositivity out;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double r = grid.radius(i);
    if (r >= 1.0) break;
    out.rho_phi += w[i] * fam.rho0(r) * testfn::phi(r, ctx);
    out.u_grad_phi += w[i] * fam.u0(r) * testfn::phi_prime(r, ctx);
  }
  return out;
}

FluidState make_initial_data(const InitialDataFamily& fam, const GridLayout& layout, double gamma) {
  validate(fam);
  if (!(gamma > 1.0)) throw std::invalid_argument("make_initial_data: gamma must exceed 1");
  if (!(layout.dr > 0.0) || 1.0 / layout.dr < 200.0 - 1e-9)
    throw std::invalid_argument("make_initial_data: the unit ball needs at least 200 cells");
  if (layout.r_max < 1.0) throw std::invalid_argument("make_initial_data: domain must contain the unit ball");
  const auto pos = data_positivity(fam, layout);
  if (!(pos.rho_phi > 0.0) || !(pos.u_grad_phi > 0.0))
    throw std::domain_error("make_initial_data: positivity integrals are not positive");

  FluidState s;
  s.dim = layout.dim;
  s.dr = layout.dr;
  s.gamma = gamma;
  const Eigen::Index n = layout.nodes();
  s.theta = Eigen::ArrayXd::Zero(n);
  s.u = Eigen::ArrayXd::Zero(n);
  const double e = 0.5 * (gamma - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = layout.dr * static_cast<double>(i);
    if (r >= 1.0) break;
    const double excess = fam.epsilon * fam.rho0(r);
    if (!(1.0 + excess > 0.0)) throw std::domain_error("make_initial_data: density is not positive");
    s.theta[i] = std::expm1(e * std::log1p(excess)) / e;
    s.u[i] = fam.epsilon * fam.u0(r);
  }
  return s;
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::gradient_threshold: return "gradient_threshold";
    case Termination::dt_collapse: return "dt_collapse";
    case Termination::density_floor: return "density_floor";
    case Termination::horizon_reached: return "horizon_reached";
  }
  return "unknown";
}

std::string_view to_string(Limiter l) { return l == Limiter::mc ? "mc" : "minmod"; }

Limiter limiter_from_string(std::string_view name) {
  if (name == "minmod") return Limiter::minmod;
  if (name == "mc") return Limiter::mc;
  throw std::invalid_argument("unknown limiter: " + std::string(name));
}

std::string_view to_string(GrowthReference ref) {
  return ref == GrowthReference::initial ? "initial" : "running_min";
}

GrowthReference growth_reference_from_string(std::string_view name) {
  if (name == "initial") return GrowthReference::initial;
  if (name == "running_min") return GrowthReference::running_min;
  throw std::invalid_argument("unknown growth reference: " + std::string(name));
}

Termination termination_from_string(std::string_view name) {
  for (auto r : {Termination::gradient_threshold, Termination::dt_collapse, Termination::density_floor,
                 Termination::horizon_reached})
    if (to_string(r) == name) return r;
  throw std::invalid_argument("unknown termination reason: " + std::string(name));
}

namespace {

template <typename Scheme>
void one_step(Scheme& scheme, const DampingParams& damping, double t, double cfl) {
  if (!(cfl > 0.0 && cfl < 1.0)) throw std::invalid_argument("step: cfl must lie in (0, 1)");
  detail::DenormalGuard guard;
  if (!scheme.refresh()) throw StepFailure(Termination::density_floor, "step: density is not positive");
  const double dt = cfl * scheme.dr() / scheme.step_speed();
  if (!(dt >= 1e-12 * scheme.dr())) throw StepFailure(Termination::dt_collapse, "step: time step collapsed");
  const double mid = t + 0.5 * dt;
  scheme.damp(detail::damping_factor(damping, t, mid));
  scheme.advance(dt);
  scheme.damp(detail::damping_factor(damping, mid, t + dt));
  if (!scheme.refresh()) throw StepFailure(Termination::density_floor, "step: density is not positive");
}

}  // namespace

FluidState step(const FluidState& state, const DampingParams& damping, double cfl) {
  detail::EulerScheme scheme(state);
  scheme.refresh();
  const double dt = cfl * state.dr / scheme.step_speed();
  one_step(scheme, damping, state.t, cfl);
  return scheme.snapshot(state.t + dt);
}

double max_gradient(const FluidState& state) {
  detail::EulerScheme scheme(state);
  scheme.refresh();
  return scheme.gradient();
}

bool detect_blowup(const FluidState& state, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("detect_blowup: threshold must be positive");
  return max_gradient(state) > threshold;
}

namespace {

void validate(const RunSettings& set) {
  if (set.dim < 1 || set.dim > 3) throw std::invalid_argument("run: dim must be 1, 2 or 3");
  if (!(set.gamma > 1.0)) throw std::invalid_argument("run: gamma must exceed 1");
  if (!(set.horizon > 0.0)) throw std::invalid_argument("run: horizon must be positive");
  if (!(set.dr > 0.0)) throw std::invalid_argument("run: dr must be positive");
  if (!(set.cfl > 0.0 && set.cfl < 1.0)) throw std::invalid_argument("run: cfl must lie in (0, 1)");
  if (set.window < 0.0) throw std::invalid_argument("run: window must be non-negative");
  if (set.dt_out < 0.0) throw std::invalid_argument("run: dt_out must be non-negative");
  if (!(set.blowup.growth_factor > 1.0)) throw std::invalid_argument("run: growth_factor must exceed 1");
  if (!(set.blowup.threshold >= 0.0)) throw std::invalid_argument("run: threshold must be non-negative");
}

void validate(const DampingParams& d) {
  if (!(d.mu >= 0.0)) throw std::invalid_argument("damping: mu must be non-negative");
  if (!(d.lambda >= 0.0)) throw std::invalid_argument("damping: lambda must be non-negative");
}

}  // namespace

LifespanRecord run_lifespan(const InitialDataFamily& fam, const DampingParams& damping, const RunSettings& settings,
                            const Observer& observer) {
  validate(settings);
  validate(damping);
  const FluidState init = make_initial_data(fam, settings.layout(), settings.gamma);
  detail::EulerScheme scheme(init, settings.limiter);
  return detail::drive(scheme, damping, settings, fam.epsilon, observer);
}

double mass_coordinate(const InitialDataFamily& fam, double x) {
  // int_0^x (1 - s^2)^k ds expanded binomially.
  const double y = std::min(std::abs(x), 1.0);
  double sum = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= fam.bump_k; ++j) {
    if (j > 0) binom *= static_cast<double>(fam.bump_k - j + 1) / j;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    sum += sign * binom * std::pow(y, 2 * j + 1) / (2 * j + 1);
  }
  return std::copysign(std::abs(x) + fam.epsilon * fam.a_rho * sum, x);
}

PSystemState make_psystem_data(const InitialDataFamily& fam, double dm, double m_max, double gamma) {
  validate(fam);
  if (!(gamma > 1.0)) throw std::invalid_argument("make_psystem_data: gamma must exceed 1");
  if (!(dm > 0.0) || 1.0 / dm < 200.0 - 1e-9)
    throw std::invalid_argument("make_psystem_data: the data support needs at least 200 cells");
  const double m_data = mass_coordinate(fam, 1.0);
  if (m_max < m_data) throw std::invalid_argument("make_psystem_data: domain must contain the data");
  PSystemState s;
  s.dm = dm;
  s.gamma = gamma;
  const auto n = static_cast<Eigen::Index>(std::llround(m_max / dm)) + 1;
  s.v = Eigen::ArrayXd::Ones(n);
  s.u = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double m = dm * static_cast<double>(j);
    if (m >= m_data) break;
    // m(x) is increasing with m'(x) = rho_0 >= 1; Newton from x = m converges monotonically.
    double x = m / (1.0 + fam.epsilon * fam.a_rho);
    for (int it = 0; it < 100; ++it) {
      const double f = mass_coordinate(fam, x) - m;
      const double dx = f / (1.0 + fam.epsilon * fam.rho0(x));
      x -= dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, x)) break;
    }
    x = std::clamp(x, 0.0, 1.0);
    s.v[j] = 1.0 / (1.0 + fam.epsilon * fam.rho0(x));
    s.u[j] = fam.epsilon * fam.u0(x);
  }
  return s;
}

PSystemState psystem_step(const PSystemState& state, const DampingParams& damping, double cfl) {
  detail::PSystemScheme scheme(state.dm, state.gamma, state.v, state.u, 0.0);
  scheme.refresh();
  const double dt = cfl * state.dm / scheme.step_speed();
  one_step(scheme, damping, state.t, cfl);
  PSystemState out = state;
  out.t = state.t + dt;
  out.v = scheme.specific_volume();
  out.u = scheme.velocity();
  return out;
}

double psystem_volume(const PSystemState& state) {
  return state.dm * (state.v.sum() - 0.5 * state.v[0]);
}

LifespanRecord run_psystem_1d(const InitialDataFamily& fam, const DampingParams& damping,
                              const RunSettings& settings, const Observer& observer) {
  validate(settings);
  validate(damping);
  if (settings.dim != 1) throw std::invalid_argument("run_psystem_1d: only n = 1 is supported");
  const double m_data = mass_coordinate(fam, 1.0);
  const PSystemState init =
      make_psystem_data(fam, settings.dr, m_data + settings.horizon + 10.0 * settings.dr, settings.gamma);
  detail::PSystemScheme scheme(init.dm, init.gamma, init.v, init.u, m_data, settings.limiter);
  return detail::drive(scheme, damping, settings, fam.epsilon, observer);
}

double total_mass(const FluidState& state) {
  const int n = state.dim;
  const double h = state.dr;
  const double e = 0.5 * (state.gamma - 1.0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double r = h * static_cast<double>(i);
    const double vol = i == 0 ? std::pow(0.5 * h, n) / n
                              : (n == 1 ? h : (std::pow(r + 0.5 * h, n) - std::pow(r - 0.5 * h, n)) / n);
    sum += vol * std::pow(1.0 + e * state.theta[i], 1.0 / e);
  }
  return sphere_area(n) * sum;
}

double support_radius(const FluidState& state, double tol) {
  const double e = 0.5 * (state.gamma - 1.0);
  for (Eigen::Index i = state.size() - 1; i >= 0; --i) {
    const double excess = std::expm1(std::log1p(e * state.theta[i]) / e);
    if (std::abs(excess) + std::abs(state.u[i]) > tol) return state.dr * static_cast<double>(i);
  }
  return 0.0;
}

}  // namespace lifespan::solver
