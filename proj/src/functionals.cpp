#include "lifespan/functionals.hpp"

#include "lifespan/csv.hpp"
#include "lifespan/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lifespan::functionals {

double compute_R(double p, double gamma) {
  if (p < -1.0 || std::isnan(p)) throw std::invalid_argument("compute_R: p must be >= -1");
  if (p >= 0.0) return orlicz::detail::power_excess(p, gamma);
  if (p == -1.0) return 1.0 - 1.0 / gamma;
  // Series in p for small |p| (alternating binomial tail), closed form otherwise.
  if (p > -0.1) {
    double coeff = gamma;
    double pk = p;
    double sum = 0.0;
    for (int k = 2; k < 80; ++k) {
      coeff *= (gamma - k + 1) / k;
      pk *= p;
      const double term = coeff * pk / gamma;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::expm1(gamma * std::log1p(p)) / gamma - p;
}

Band check_R_equiv_upsilon(const orlicz::NFunctionFamily& fam, double lo, double hi, int samples) {
  if (lo < -1.0 || !(hi > lo) || samples < 2) throw std::invalid_argument("check_R_equiv_upsilon: bad range");
  Band b{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < samples; ++i) {
    const double p = lo + (hi - lo) * i / (samples - 1);
    if (p == 0.0) continue;
    const double r = compute_R(p, fam.gamma) / orlicz::upsilon(p, fam);
    b.min = std::min(b.min, r);
    b.max = std::max(b.max, r);
  }
  return b;
}

namespace {

/// Per-node quadrature weights folded with the scaled test function.
struct PsiTable {
  int dim = 0;
  double dr = 0.0;
  Eigen::Index size = 0;
  Eigen::ArrayXd radius;
  Eigen::ArrayXd w_phi;   // trapezoid weight * phi(r) e^{-r}
  Eigen::ArrayXd w_phi2;  // trapezoid weight * phi''(r) e^{-r}

  bool matches(const solver::FluidState& s) const { return dim == s.dim && dr == s.dr && size == s.size(); }
};

PsiTable make_table(const solver::FluidState& s) {
  PsiTable tab;
  tab.dim = s.dim;
  tab.dr = s.dr;
  tab.size = s.size();
  const testfn::TestFunctionContext ctx(s.dim);
  const RadialGridFunction grid(s.dim, s.dr, Eigen::ArrayXd::Zero(s.size()));
  const Eigen::ArrayXd w = grid.trapezoid_weights();
  tab.radius = grid.radii();
  tab.w_phi.resize(s.size());
  tab.w_phi2.resize(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    tab.w_phi[i] = w[i] * testfn::phi_scaled(tab.radius[i], ctx);
    tab.w_phi2[i] = w[i] * testfn::phi_second_scaled(tab.radius[i], ctx);
  }
  return tab;
}

Integrals integrate_with(const PsiTable& tab, const solver::FluidState& s) {
  const orlicz::NFunctionFamily fam(s.gamma);
  const double e = 0.5 * (s.gamma - 1.0);
  const double cutoff = 1.0 + s.t + 5.0 * s.dr;
  Integrals out;
  out.t = s.t;
  // The last node inside the cutoff carries a half weight, as if the domain ended there.
  const auto last = std::min<Eigen::Index>(s.size() - 1, static_cast<Eigen::Index>(std::floor(cutoff / s.dr)));
  for (Eigen::Index i = 0; i <= last; ++i) {
    const double excess = std::expm1(std::log1p(e * s.theta[i]) / e);
    const double u = s.u[i];
    if (excess == 0.0 && u == 0.0) continue;
    const double grow = std::exp(tab.radius[i] - s.t);
    const double scale = (i == last && last < s.size() - 1) ? 0.5 : 1.0;
    const double wpsi = scale * grow * tab.w_phi[i];
    out.F += excess * wpsi;
    out.nonlinear_R += compute_R(excess, s.gamma) * wpsi;
    out.nonlinear_upsilon += orlicz::upsilon(excess, fam) * wpsi;
    out.flux_quadratic += (1.0 + excess) * u * u * scale * grow * tab.w_phi2[i];
  }
  return out;
}

}  // namespace

Integrals integrate_state(const solver::FluidState& state) { return integrate_with(make_table(state), state); }

double compute_F(const solver::FluidState& state) { return integrate_state(state).F; }

FunctionalTrace build_trace(const std::vector<Integrals>& samples, int dim, double gamma,
                            const solver::DampingParams& damping) {
  FunctionalTrace tr;
  tr.dim = dim;
  tr.gamma = gamma;
  tr.damping = damping;
  const std::size_t n = samples.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : samples) {
    tr.times.push_back(s.t);
    tr.F.push_back(s.F);
    tr.G.push_back(std::pow(1.0 + s.t, 0.5 * damping.mu) * s.F);
    tr.rhs_R.push_back(s.nonlinear_R);
    tr.rhs_nonlinear.push_back(s.nonlinear_upsilon);
    tr.flux_quadratic.push_back(s.flux_quadratic);
  }
  tr.dF.assign(n, nan);
  tr.ddF.assign(n, nan);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = tr.times[i] - tr.times[i - 1];
    const double h2 = tr.times[i + 1] - tr.times[i];
    if (std::abs(h1 - h2) > 1e-9 * std::max(h1, h2))
      throw std::invalid_argument("build_trace: samples must be uniformly spaced");
    tr.dF[i] = (tr.F[i + 1] - tr.F[i - 1]) / (h1 + h2);
    tr.ddF[i] = (tr.F[i + 1] - 2.0 * tr.F[i] + tr.F[i - 1]) / (h1 * h2);
  }
  return tr;
}

TracedRun trace_run(const solver::InitialDataFamily& fam, const solver::DampingParams& damping,
                    const solver::RunSettings& settings) {
  if (!(settings.dt_out > 0.0)) throw std::invalid_argument("trace_run: dt_out must be positive");
  solver::RunSettings set = settings;
  set.window = 0.0;  // the integrals need the whole domain
  std::vector<Integrals> samples;
  PsiTable table;
  double last_t = -1.0;
  auto observer = [&](const solver::FluidState& s, double) {
    if (!table.matches(s)) table = make_table(s);
    // Keep only the uniform cadence; the terminal snapshot may fall in between.
    const double k = s.t / set.dt_out;
    if (std::abs(k - std::round(k)) > 1e-6 || s.t <= last_t) return;
    samples.push_back(integrate_with(table, s));
    last_t = s.t;
  };
  TracedRun out;
  out.record = solver::run_lifespan(fam, damping, set, observer);
  out.trace = build_trace(samples, settings.dim, settings.gamma, damping);
  return out;
}

std::vector<double> identity_residual(const FunctionalTrace& tr) {
  std::vector<double> res(tr.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
    const double d = tr.damping.coefficient(tr.times[i]);
    const double lhs = tr.ddF[i] + 2.0 * tr.dF[i] + d * (tr.dF[i] + tr.F[i]);
    res[i] = lhs - tr.flux_quadratic[i] - tr.rhs_R[i];
  }
  return res;
}

namespace {

void require_samples(const FunctionalTrace& tr) {
  if (tr.size() < 5) throw std::invalid_argument("functional check: trace needs at least 5 samples");
}

struct ResidualScale {
  double residual = 0.0;
  double term = 0.0;
};

ResidualScale residual_scale(const FunctionalTrace& tr, double t_max) {
  require_samples(tr);
  const auto res = identity_residual(tr);
  ResidualScale out;
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
    if (tr.times[i] > t_max) break;
    const double d = tr.damping.coefficient(tr.times[i]);
    for (double term : {tr.ddF[i], 2.0 * tr.dF[i], d * (tr.dF[i] + tr.F[i]), tr.flux_quadratic[i], tr.rhs_R[i]})
      out.term = std::max(out.term, std::abs(term));
    out.residual = std::max(out.residual, std::abs(res[i]));
  }
  return out;
}

}  // namespace

double check_identity_F(const FunctionalTrace& trace, double t_max) {
  const auto s = residual_scale(trace, t_max);
  return s.residual / (1.0 + s.term);
}

double identity_relative_residual(const FunctionalTrace& trace, double t_max) {
  const auto s = residual_scale(trace, t_max);
  return s.term > 0.0 ? s.residual / s.term : 0.0;
}

std::vector<double> nonlinear_ratio(const FunctionalTrace& tr) {
  const orlicz::NFunctionFamily fam(tr.gamma);
  std::vector<double> out(tr.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!(tr.F[i] > 0.0)) continue;
    const double weight = std::pow(japanese(tr.times[i]), -0.5 * (tr.dim - 1));
    out[i] = tr.rhs_nonlinear[i] / (weight * orlicz::upsilon(tr.F[i], fam));
  }
  return out;
}

double check_nonlinear_lower_bound(const FunctionalTrace& trace, double t_max) {
  require_samples(trace);
  const auto ratio = nonlinear_ratio(trace);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.times[i] > t_max) break;
    if (!(trace.F[i] > 0.0)) throw std::domain_error("check_nonlinear_lower_bound: F is not positive");
    best = std::min(best, ratio[i]);
  }
  return best;
}

double check_G_inequality(const FunctionalTrace& tr, double t_max) {
  require_samples(tr);
  if (tr.damping.lambda != 1.0) throw std::invalid_argument("check_G_inequality: needs lambda = 1");
  const orlicz::NFunctionFamily fam(tr.gamma);
  const double mu = tr.damping.mu;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
    const double t = tr.times[i];
    if (t > t_max) break;
    if (!(tr.F[i] > 0.0)) throw std::domain_error("check_G_inequality: F is not positive");
    const double h = tr.times[i + 1] - tr.times[i];
    const double dG = (tr.G[i + 1] - tr.G[i - 1]) / (2.0 * h);
    const double ddG = (tr.G[i + 1] - 2.0 * tr.G[i] + tr.G[i - 1]) / (h * h);
    const double lhs = ddG + 2.0 * dG + 0.25 * mu * (2.0 - mu) / ((1.0 + t) * (1.0 + t)) * tr.G[i];
    const double rhs = std::pow(japanese(t), -0.5 * (tr.dim + mu - 1.0)) * orlicz::upsilon(tr.G[i], fam);
    best = std::min(best, lhs / rhs);
  }
  return best;
}

double multiplier_m(double t, double mu, double lambda) {
  if (t < 0.0) throw std::invalid_argument("multiplier_m: t must be non-negative");
  if (lambda == 1.0) return std::pow(1.0 + t, mu);
  if (!(lambda > 1.0)) throw std::invalid_argument("multiplier_m: lambda must be >= 1");
  return std::exp(mu * std::pow(1.0 + t, 1.0 - lambda) / (1.0 - lambda));
}

double multiplier_l(double t, double mu) {
  if (t < 0.0) throw std::invalid_argument("multiplier_l: t must be non-negative");
  return std::exp(-mu * (2.0 - mu) / (8.0 * (1.0 + t)));
}

double multiplier_varpi(double t, double mu) {
  if (t < 0.0) throw std::invalid_argument("multiplier_varpi: t must be non-negative");
  return (1.0 + t) * std::exp(mu * (2.0 - mu) / (16.0 * (1.0 + t)));
}

double multiplier_m_log_derivative(double t, double mu, double lambda) { return mu / std::pow(1.0 + t, lambda); }

double multiplier_l_prime(double t, double mu) {
  const double k = mu * (2.0 - mu) / 8.0;
  return multiplier_l(t, mu) * k / ((1.0 + t) * (1.0 + t));
}

double multiplier_l_second(double t, double mu) {
  const double k = mu * (2.0 - mu) / 8.0;
  const double s = 1.0 + t;
  return multiplier_l(t, mu) * (k * k / (s * s * s * s) - 2.0 * k / (s * s * s));
}

double multiplier_varpi_log_derivative(double t, double mu) {
  const double s = 1.0 + t;
  return 1.0 / s - mu * (2.0 - mu) / (16.0 * s * s);
}

void write_diagnostics_csv(std::ostream& out, const FunctionalTrace& trace) {
  csv::Writer w(out);
  w.header({"t", "F", "G", "dF", "ddF", "rhs_nonlinear", "flux_quadratic", "identity_residual", "ratio_nonlinear"});
  const auto res = identity_residual(trace);
  const auto ratio = nonlinear_ratio(trace);
  for (std::size_t i = 0; i < trace.size(); ++i)
    w.numbers({trace.times[i], trace.F[i], trace.G[i], trace.dF[i], trace.ddF[i], trace.rhs_nonlinear[i],
               trace.flux_quadratic[i], res[i], ratio[i]});
}

}  // namespace lifespan::functionals
