#pragma once

#include "lifespan/orlicz.hpp"
#include "lifespan/solver.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace lifespan::functionals {

/// R(p) = ((p+1)^gamma - 1)/gamma - p for p >= -1.
double compute_R(double p, double gamma);

struct Band {
  double min = 0.0;
  double max = 0.0;
};

/// min/max of R(p)/Upsilon(p) over p in [lo, hi] without 0, sampled uniformly.
Band check_R_equiv_upsilon(const orlicz::NFunctionFamily& fam, double lo = -0.999, double hi = 10.0,
                           int samples = 20001);

/// Integrals of one snapshot against psi(t, .) = e^{-t} phi. All are truncated
/// at r = 1 + t + 5 dr, outside of which the state is at rest.
struct Integrals {
  double t = 0.0;
  double F = 0.0;                  ///< int (rho - 1) psi
  double nonlinear_R = 0.0;        ///< int R(rho - 1) psi
  double nonlinear_upsilon = 0.0;  ///< int Upsilon(rho - 1) psi
  double flux_quadratic = 0.0;     ///< int rho u^2 psi_rr (the Hessian trace for radial u)
};

Integrals integrate_state(const solver::FluidState& state);
double compute_F(const solver::FluidState& state);

/// Time series on a uniform cadence, with central-difference derivatives.
/// Endpoint derivatives are NaN.
struct FunctionalTrace {
  int dim = 1;
  double gamma = 2.0;
  solver::DampingParams damping;
  std::vector<double> times;
  std::vector<double> F;
  std::vector<double> G;  ///< (1+t)^{mu/2} F
  std::vector<double> dF;
  std::vector<double> ddF;
  std::vector<double> rhs_R;
  std::vector<double> rhs_nonlinear;  ///< int Upsilon(rho-1) psi
  std::vector<double> flux_quadratic;

  std::size_t size() const { return times.size(); }
};

/// Builds the trace (derivatives, G) from snapshot integrals; the times must be
/// uniformly spaced.
FunctionalTrace build_trace(const std::vector<Integrals>& samples, int dim, double gamma,
                            const solver::DampingParams& damping);

/// Runs the Eulerian solver with the given cadence (full domain) and returns
/// the trace along with the lifespan record.
struct TracedRun {
  solver::LifespanRecord record;
  FunctionalTrace trace;
};
TracedRun trace_run(const solver::InitialDataFamily& fam, const solver::DampingParams& damping,
                    const solver::RunSettings& settings);

/// Residual of F'' + 2F' + d(t)(F' + F) - flux_quadratic - int R(rho-1) psi at
/// the interior samples.
std::vector<double> identity_residual(const FunctionalTrace& trace);

/// max |residual| / (1 + max |term|) over interior samples with t <= t_max.
double check_identity_F(const FunctionalTrace& trace, double t_max);
/// Same residual normalised by the largest term instead of 1 + largest term.
double identity_relative_residual(const FunctionalTrace& trace, double t_max);

/// min over samples with t <= t_max of int Upsilon(rho-1) psi / (<t>^{-(n-1)/2} Upsilon(F)).
/// Throws std::domain_error when F <= 0 is encountered.
double check_nonlinear_lower_bound(const FunctionalTrace& trace, double t_max);

/// Ratio series used by check_nonlinear_lower_bound (NaN where undefined).
std::vector<double> nonlinear_ratio(const FunctionalTrace& trace);

/// min over interior samples with t <= t_max of
/// (G'' + 2G' + mu(2-mu)/4 (1+t)^{-2} G) / (<t>^{-(n+mu-1)/2} Upsilon(G)).
/// Requires lambda = 1 and F > 0.
double check_G_inequality(const FunctionalTrace& trace, double t_max);

/// Damping multipliers.
/// m(t) = exp(mu (1+t)^{1-lambda} / (1-lambda)) for lambda > 1 and (1+t)^mu for lambda = 1.
double multiplier_m(double t, double mu, double lambda);
/// l(t) = exp(-mu(2-mu) / (8(1+t))).
double multiplier_l(double t, double mu);
/// varpi(t) = (1+t) exp(mu(2-mu) / (16(1+t))).
double multiplier_varpi(double t, double mu);

/// Closed-form log-derivatives, used against finite differences of the closed forms.
double multiplier_m_log_derivative(double t, double mu, double lambda);  ///< mu/(1+t)^lambda
double multiplier_l_prime(double t, double mu);
double multiplier_l_second(double t, double mu);
double multiplier_varpi_log_derivative(double t, double mu);

/// Diagnostics CSV: t, F, G, dF, ddF, rhs_nonlinear, flux_quadratic,
/// identity_residual, ratio_nonlinear.
void write_diagnostics_csv(std::ostream& out, const FunctionalTrace& trace);

}  // namespace lifespan::functionals
