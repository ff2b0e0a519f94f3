#pragma once

#include "lifespan/radial_grid.hpp"

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lifespan::solver {

/// Time-dependent damping coefficient mu / (1+t)^lambda.
struct DampingParams {
  double mu = 0.0;
  double lambda = 1.0;

  double coefficient(double t) const { return mu / std::pow(1.0 + t, lambda); }

  /// Exact value of int_a^b (1+s)^{-lambda} ds (log form at lambda = 1).
  double kernel_integral(double a, double b) const;

  /// lambda > 1 and mu >= 0.
  bool in_scattering_range() const { return lambda > 1.0 && mu >= 0.0; }
  /// lambda = 1 and 0 <= mu <= 3 - n.
  bool in_scale_invariant_range(int dim) const { return lambda == 1.0 && mu >= 0.0 && mu <= 3.0 - dim; }
};

/// Uniform radial grid with nodes r_i = i * dr up to r_max.
struct GridLayout {
  int dim = 1;
  double dr = 1e-3;
  double r_max = 2.0;

  Eigen::Index nodes() const { return static_cast<Eigen::Index>(std::llround(r_max / dr)) + 1; }
};

/// Solution snapshot in the (theta, u) variables: theta = 2(rho^{(gamma-1)/2} - 1)/(gamma-1),
/// u the radial velocity. In 1D the profile is the even/odd restriction to r >= 0.
struct FluidState {
  double t = 0.0;
  int dim = 1;
  double dr = 1e-3;
  double gamma = 2.0;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd u;

  Eigen::Index size() const { return theta.size(); }
  double r_max() const { return dr * static_cast<double>(size() - 1); }
  GridLayout layout() const { return {dim, dr, r_max()}; }

  /// Local sound speed 1 + (gamma-1) theta / 2.
  Eigen::ArrayXd sound_speed() const { return 1.0 + 0.5 * (gamma - 1.0) * theta; }
  Eigen::ArrayXd density() const { return sound_speed().pow(2.0 / (gamma - 1.0)); }

  RadialGridFunction as_grid(const Eigen::ArrayXd& values) const { return {dim, dr, values}; }
};

double theta_from_density(double rho, double gamma);
double density_from_theta(double theta, double gamma);

/// eps-scaled bump data rho_0 = a_rho (1-r^2)_+^k, u_0 = a_u r (1-r^2)_+^k.
struct InitialDataFamily {
  double epsilon = 0.05;
  int bump_k = 2;
  double a_rho = 1.0;
  double a_u = 1.0;

  double rho0(double r) const;
  double u0(double r) const;
};

/// int rho_0 phi dx and int u_0 . grad(phi) dx on the given layout.
struct DataPositivity {
  double rho_phi = 0.0;
  double u_grad_phi = 0.0;
};
DataPositivity data_positivity(const InitialDataFamily& fam, const GridLayout& layout);

/// Builds the initial state. Requires >= 200 cells across the unit ball, both
/// positivity integrals strictly positive and a positive density.
FluidState make_initial_data(const InitialDataFamily& fam, const GridLayout& layout, double gamma);

enum class Termination { gradient_threshold, dt_collapse, density_floor, horizon_reached };

std::string_view to_string(Termination reason);
Termination termination_from_string(std::string_view name);

/// Raised by step() when the update cannot proceed.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(Termination reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
  Termination reason() const { return reason_; }

 private:
  Termination reason_;
};

/// Advances one step with dt = cfl dr / max(|u| + c): Strang splitting of the
/// exactly integrated damping around a MUSCL (minmod-limited) + local Lax-Friedrichs
/// update (Heun time stepping) of the mass and velocity equations.
FluidState step(const FluidState& state, const DampingParams& damping, double cfl);

/// max over interior nodes of |du/dr| + |dtheta/dr| by central differences.
double max_gradient(const FluidState& state);
bool detect_blowup(const FluidState& state, double threshold);

/// Blow-up trigger: the gradient measure exceeds both `threshold` and
/// growth_factor times a reference level. The reference is either the initial
/// gradient or the smallest gradient seen so far; the latter discounts the
/// early decay caused by strong damping.
enum class GrowthReference { initial, running_min };

std::string_view to_string(GrowthReference ref);
GrowthReference growth_reference_from_string(std::string_view name);

struct BlowupCriterion {
  double threshold = 0.0;
  double growth_factor = 5.0;
  GrowthReference reference = GrowthReference::running_min;

  double level(double reference_gradient) const { return std::max(threshold, growth_factor * reference_gradient); }
};

/// Slope limiter of the MUSCL reconstruction.
enum class Limiter { minmod, mc };

std::string_view to_string(Limiter l);
Limiter limiter_from_string(std::string_view name);

struct RunSettings {
  int dim = 1;
  double gamma = 2.0;
  double horizon = 10.0;
  double dr = 1e-3;
  double cfl = 0.3;
  Limiter limiter = Limiter::mc;
  /// Width behind the leading front that is evolved; 0 evolves the whole domain.
  double window = 0.0;
  /// Observer cadence; 0 disables observation.
  double dt_out = 0.0;
  BlowupCriterion blowup;
  /// Minimum admissible step as a fraction of dr.
  double dt_min_factor = 1e-12;

  /// r_max = 1 + horizon + 10 dr.
  GridLayout layout() const { return {dim, dr, 1.0 + horizon + 10.0 * dr}; }
};

struct LifespanRecord {
  double epsilon = 0.0;
  double T_blow = 0.0;
  Termination reason = Termination::horizon_reached;
  double dr = 0.0;
  double cfl = 0.0;
  double initial_gradient = 0.0;
  double min_gradient = 0.0;
  double final_gradient = 0.0;
  double peak_gradient = 0.0;
  long steps = 0;

  bool censored() const { return reason == Termination::horizon_reached; }
};

/// Called at t = 0, at every multiple of dt_out, and at termination.
using Observer = std::function<void(const FluidState& state, double gradient)>;

/// Eulerian radial backend.
LifespanRecord run_lifespan(const InitialDataFamily& fam, const DampingParams& damping, const RunSettings& settings,
                            const Observer& observer = {});

/// Lagrangian p-system backend (n = 1 only): v_t - u_m = 0, u_t + p(v)_m = -a(t) u
/// with p(v) = v^{-gamma}/gamma, on the mass coordinate m. Observer states are
/// reported on the mass grid with theta computed from rho = 1/v.
LifespanRecord run_psystem_1d(const InitialDataFamily& fam, const DampingParams& damping,
                              const RunSettings& settings, const Observer& observer = {});

/// Lagrangian state: specific volume v = 1/rho and velocity u on mass nodes m_j = j dm.
struct PSystemState {
  double t = 0.0;
  double dm = 1e-3;
  double gamma = 2.0;
  Eigen::ArrayXd v;
  Eigen::ArrayXd u;
};

/// Mass coordinate m(x) = int_0^x rho_0 of the eps-scaled data.
double mass_coordinate(const InitialDataFamily& fam, double x);

/// Samples the data on the mass grid up to m_max (Newton inversion of m(x)).
PSystemState make_psystem_data(const InitialDataFamily& fam, double dm, double m_max, double gamma);
PSystemState psystem_step(const PSystemState& state, const DampingParams& damping, double cfl);
/// sum_j w_j v_j with half weight at m = 0 (the exactly conserved quantity).
double psystem_volume(const PSystemState& state);

/// Finite-volume mass sum_i V_i rho_i * |S^{n-1}| (the exactly conserved quantity).
double total_mass(const FluidState& state);

/// Largest node radius where |rho - 1| + |u| exceeds tol (0 if none).
double support_radius(const FluidState& state, double tol);

}  // namespace lifespan::solver
