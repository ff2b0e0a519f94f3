#include "schemes.hpp"

#include <stdexcept>

namespace lifespan::solver::detail {

PSystemScheme::PSystemScheme(double dm, double gamma, Eigen::ArrayXd v, Eigen::ArrayXd u, double front0,
                             Limiter limiter)
    : dm_(dm), gamma_(gamma), front0_(front0), limiter_(limiter), n_(v.size()) {
  if (!(dm_ > 0.0)) throw std::invalid_argument("p-system: dm must be positive");
  if (!(gamma_ > 1.0)) throw std::invalid_argument("p-system: gamma must exceed 1");
  if (n_ < 4 || u.size() != n_) throw std::invalid_argument("p-system: bad array sizes");
  const auto padded = static_cast<std::size_t>(n_ + 2 * pad);
  for (auto* a : {&w_, &u_, &w1_, &u1_, &sw_, &su_, &spd_}) a->assign(padded, 0.0);
  fw_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
  fu_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
  for (Eigen::Index i = 0; i < n_; ++i) {
    w_[i + pad] = v[i] - 1.0;
    u_[i + pad] = u[i];
  }
  u_[pad] = 0.0;
  w1_ = w_;
  u1_ = u_;
  set_window(0, n_ - 1);
}

void PSystemScheme::set_window(Eigen::Index lo, Eigen::Index hi) {
  lo_ = std::clamp<Eigen::Index>(lo, 0, n_ - 1);
  hi_ = std::clamp<Eigen::Index>(hi, lo_, n_ - 1);
}

void PSystemScheme::fill_ghosts(double* w, double* u) const {
  w[-1] = w[1];
  w[-2] = w[2];
  u[-1] = -u[1];
  u[-2] = -u[2];
  const Eigen::Index e = n_ - 1;
  w[e + 1] = w[e + 2] = w[e];
  u[e + 1] = u[e + 2] = u[e];
}

namespace {

/// v^{-gamma} and the Lagrangian sound speed v^{-(gamma+1)/2}, with
/// sqrt-based paths for gamma = 2 and gamma = 3/2.
enum class GammaKind { two, three_halves, general };

template <GammaKind K>
inline double pressure_power(double v, double g) {
  if constexpr (K == GammaKind::two) return 1.0 / (v * v);
  else if constexpr (K == GammaKind::three_halves) return 1.0 / (v * std::sqrt(v));
  else return std::pow(v, -g);
}

template <GammaKind K>
inline double lagrangian_speed(double v, double g) {
  if constexpr (K == GammaKind::two) return 1.0 / (v * std::sqrt(v));
  else if constexpr (K == GammaKind::three_halves) return 1.0 / (v * std::sqrt(std::sqrt(v)));
  else return std::pow(v, -0.5 * (g + 1.0));
}

GammaKind classify_gamma(double g) {
  if (g == 2.0) return GammaKind::two;
  if (g == 1.5) return GammaKind::three_halves;
  return GammaKind::general;
}

}  // namespace

void PSystemScheme::stage(const double* w, const double* u, const double* base_w, const double* base_u,
                          double* out_w, double* out_u, double dt, double blend) {
  switch (classify_gamma(gamma_)) {
    case GammaKind::two: stage_impl<2>(w, u, base_w, base_u, out_w, out_u, dt, blend); break;
    case GammaKind::three_halves: stage_impl<1>(w, u, base_w, base_u, out_w, out_u, dt, blend); break;
    default: stage_impl<0>(w, u, base_w, base_u, out_w, out_u, dt, blend); break;
  }
}

template <int Kind>
void PSystemScheme::stage_impl(const double* w, const double* u, const double* base_w, const double* base_u,
                               double* out_w, double* out_u, double dt, double blend) {
  constexpr GammaKind K = Kind == 2 ? GammaKind::two : Kind == 1 ? GammaKind::three_halves : GammaKind::general;
  double* sw = sw_.data() + pad;
  double* su = su_.data() + pad;
  double* spd = spd_.data() + pad;
  const Eigen::Index k0 = lo_ - 1;
  const Eigen::Index k1 = hi_ + 1;
  limited_slopes(limiter_, w, sw, k0, k1);
  limited_slopes(limiter_, u, su, k0, k1);
  const double g = gamma_;
#pragma omp simd
  for (Eigen::Index k = k0; k <= k1; ++k) spd[k] = lagrangian_speed<K>(1.0 + w[k], g);

  const double inv_g = 1.0 / g;
  double* fw = fw_.data() + 1;
  double* fu = fu_.data() + 1;
  // Local Lax-Friedrichs with the larger nodal speed of the two neighbours.
#pragma omp simd
  for (Eigen::Index j = lo_ - 1; j <= hi_; ++j) {
    const double vl = 1.0 + w[j] + 0.5 * sw[j];
    const double vr = 1.0 + w[j + 1] - 0.5 * sw[j + 1];
    const double ul = u[j] + 0.5 * su[j];
    const double ur = u[j + 1] - 0.5 * su[j + 1];
    const double a = spd[j] > spd[j + 1] ? spd[j] : spd[j + 1];
    // Pressure relative to the rest state keeps the flux of the constant state exactly zero.
    const double pl = (pressure_power<K>(vl, g) - 1.0) * inv_g;
    const double pr = (pressure_power<K>(vr, g) - 1.0) * inv_g;
    fw[j] = -0.5 * (ul + ur) - 0.5 * a * (vr - vl);
    fu[j] = 0.5 * (pl + pr) - 0.5 * a * (ur - ul);
  }
  const double keep = 1.0 - blend;
  const double inv_dm = 1.0 / dm_;
  Eigen::Index start = lo_;
  if (lo_ == 0) {
    // Half cell at m = 0: the odd flux -u mirrors, so only the right face counts (twice).
    out_w[0] = keep * base_w[0] + blend * (w[0] - 2.0 * dt * inv_dm * fw[0]);
    out_u[0] = 0.0;
    start = 1;
  }
#pragma omp simd
  for (Eigen::Index i = start; i <= hi_; ++i) {
    out_w[i] = keep * base_w[i] + blend * (w[i] - dt * inv_dm * (fw[i] - fw[i - 1]));
    out_u[i] = keep * base_u[i] + blend * (u[i] - dt * inv_dm * (fu[i] - fu[i - 1]));
  }
}

void PSystemScheme::advance(double dt) {
  double* w = w_.data() + pad;
  double* u = u_.data() + pad;
  double* w1 = w1_.data() + pad;
  double* u1 = u1_.data() + pad;
  for (Eigen::Index k = std::max<Eigen::Index>(lo_ - 2, 0); k < lo_; ++k) {
    w1[k] = w[k];
    u1[k] = u[k];
  }
  for (Eigen::Index k = hi_ + 1; k <= std::min(hi_ + 2, n_ - 1); ++k) {
    w1[k] = w[k];
    u1[k] = u[k];
  }
  fill_ghosts(w, u);
  stage(w, u, w, u, w1, u1, dt, 1.0);
  fill_ghosts(w1, u1);
  stage(w1, u1, w, u, w, u, dt, 0.5);
}

void PSystemScheme::damp(double factor) {
  if (factor == 1.0) return;
  double* u = u_.data() + pad;
  for (Eigen::Index i = lo_; i <= hi_; ++i) u[i] *= factor;
}

bool PSystemScheme::refresh() {
  switch (classify_gamma(gamma_)) {
    case GammaKind::two: return refresh_impl<2>();
    case GammaKind::three_halves: return refresh_impl<1>();
    default: return refresh_impl<0>();
  }
}

template <int Kind>
bool PSystemScheme::refresh_impl() {
  constexpr GammaKind K = Kind == 2 ? GammaKind::two : Kind == 1 ? GammaKind::three_halves : GammaKind::general;
  const double* w = w_.data() + pad;
  const double* u = u_.data() + pad;
  const Eigen::Index a = std::max<Eigen::Index>(lo_ - 1, 0);
  const Eigen::Index b = std::min(hi_ + 1, n_ - 1);
  const double g = gamma_;
  double min_v = std::numeric_limits<double>::infinity();
  double speed = 0.0;
#pragma omp simd reduction(min : min_v) reduction(max : speed)
  for (Eigen::Index i = a; i <= b; ++i) {
    const double v = 1.0 + w[i];
    min_v = std::min(min_v, v);
    speed = std::max(speed, lagrangian_speed<K>(v, g));
  }
  const bool ok = min_v > 0.0 && std::isfinite(speed);
  if (!ok) return false;
  // The node at m = 0 exchanges through one face with double weight.
  speed_ = lo_ == 0 ? std::max(speed, 2.0 * lagrangian_speed<K>(1.0 + w[0], g)) : speed;

  // theta as a function of v: 2 (v^{-(gamma-1)/2} - 1) / (gamma - 1); the
  // sound-speed factor c = v^{-(gamma-1)/2} is v * lagrangian_speed.
  const double theta_scale = 2.0 / (g - 1.0);
  double grad = 0.0;
  const Eigen::Index lo = std::max<Eigen::Index>(lo_, 1);
  const Eigen::Index hi = std::min(hi_, n_ - 2);
#pragma omp simd reduction(max : grad)
  for (Eigen::Index i = lo; i <= hi; ++i) {
    const double vp = 1.0 + w[i + 1];
    const double vm = 1.0 + w[i - 1];
    const double gu = std::abs(u[i + 1] - u[i - 1]);
    const double gt = theta_scale * std::abs(vp * lagrangian_speed<K>(vp, g) - vm * lagrangian_speed<K>(vm, g));
    grad = std::max(grad, gu + gt);
  }
  gradient_ = grad * 0.5 / dm_;
  return true;
}

FluidState PSystemScheme::snapshot(double t) const {
  FluidState s;
  s.t = t;
  s.dim = 1;
  s.dr = dm_;
  s.gamma = gamma_;
  s.theta.resize(n_);
  s.u.resize(n_);
  const double e = 0.5 * (gamma_ - 1.0);
  for (Eigen::Index i = 0; i < n_; ++i) {
    // rho = 1/v, so rho^e - 1 = expm1(-e log1p(w)).
    s.theta[i] = std::expm1(-e * std::log1p(w_[i + pad])) / e;
    s.u[i] = u_[i + pad];
  }
  return s;
}

double PSystemScheme::volume() const {
  double sum = 0.5 * (1.0 + w_[pad]);
  for (Eigen::Index i = 1; i < n_; ++i) sum += 1.0 + w_[i + pad];
  return sum * dm_;
}

Eigen::ArrayXd PSystemScheme::specific_volume() const {
  Eigen::ArrayXd v(n_);
  for (Eigen::Index i = 0; i < n_; ++i) v[i] = 1.0 + w_[i + pad];
  return v;
}

Eigen::ArrayXd PSystemScheme::velocity() const {
  Eigen::ArrayXd u(n_);
  for (Eigen::Index i = 0; i < n_; ++i) u[i] = u_[i + pad];
  return u;
}

}  // namespace lifespan::solver::detail
