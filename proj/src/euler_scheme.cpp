#include "schemes.hpp"

#include <stdexcept>

namespace lifespan::solver::detail {

EulerScheme::EulerScheme(const FluidState& state, Limiter limiter)
    : dim_(state.dim),
      dr_(state.dr),
      gamma_(state.gamma),
      expo_(0.5 * (state.gamma - 1.0)),
      kind_(classify_power(0.5 * (state.gamma - 1.0))),
      limiter_(limiter),
      n_(state.size()) {
  if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("solver: dim must be 1, 2 or 3");
  if (n_ < 4) throw std::invalid_argument("solver: need at least 4 nodes");
  if (state.u.size() != n_) throw std::invalid_argument("solver: theta and u sizes differ");
  if (!(gamma_ > 1.0)) throw std::invalid_argument("solver: gamma must exceed 1");

  const auto padded = static_cast<std::size_t>(n_ + 2 * pad);
  for (auto* v : {&q_, &u_, &q1_, &u1_, &sq_, &su_, &c_, &spd_}) v->assign(padded, 0.0);
  fq_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
  fu_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
  area_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
  inv_vol_.assign(static_cast<std::size_t>(n_), 0.0);

  const double n = dim_;
  for (Eigen::Index j = -1; j < n_; ++j) {
    const double rf = (static_cast<double>(j) + 0.5) * dr_;
    area_[j + 1] = dim_ == 1 ? 1.0 : std::pow(rf, dim_ - 1);
  }
  inv_vol_[0] = n / std::pow(0.5 * dr_, dim_);
  for (Eigen::Index i = 1; i < n_; ++i) {
    const double r = static_cast<double>(i) * dr_;
    const double vol = dim_ == 1 ? dr_ : (std::pow(r + 0.5 * dr_, dim_) - std::pow(r - 0.5 * dr_, dim_)) / n;
    inv_vol_[i] = 1.0 / vol;
  }

  for (Eigen::Index i = 0; i < n_; ++i) {
    const double s = 1.0 + expo_ * state.theta[i];
    if (!(s > 0.0)) throw std::invalid_argument("solver: theta gives non-positive sound speed");
    q_[i + pad] = std::expm1(std::log1p(expo_ * state.theta[i]) / expo_);
    u_[i + pad] = state.u[i];
  }
  u_[pad] = 0.0;
  q1_ = q_;
  u1_ = u_;
  set_window(0, n_ - 1);
}

void EulerScheme::set_window(Eigen::Index lo, Eigen::Index hi) {
  lo_ = std::clamp<Eigen::Index>(lo, 0, n_ - 1);
  hi_ = std::clamp<Eigen::Index>(hi, lo_, n_ - 1);
}

void EulerScheme::fill_ghosts(double* q, double* u) const {
  // q, u point at node 0.
  q[-1] = q[1];
  q[-2] = q[2];
  u[-1] = -u[1];
  u[-2] = -u[2];
  const Eigen::Index e = n_ - 1;
  q[e + 1] = q[e];
  q[e + 2] = q[e];
  u[e + 1] = u[e];
  u[e + 2] = u[e];
}

template <PowerKind K>
void EulerScheme::stage(const double* q, const double* u, const double* base_q, const double* base_u, double* out_q,
                        double* out_u, double dt, double blend) {
  double* sq = sq_.data() + pad;
  double* su = su_.data() + pad;
  const double e = expo_;
  const double inv_gm1 = 1.0 / (gamma_ - 1.0);

  // Limited slopes and nodal signal speeds |u| + c on nodes lo-1 .. hi+1.
  double* spd = spd_.data() + pad;
  const Eigen::Index k0 = lo_ - 1;
  const Eigen::Index k1 = hi_ + 1;
  limited_slopes(limiter_, q, sq, k0, k1);
  limited_slopes(limiter_, u, su, k0, k1);
#pragma omp simd
  for (Eigen::Index k = k0; k <= k1; ++k) {
    spd[k] = std::abs(u[k]) + power<K>(1.0 + q[k], e);
  }

  // Local Lax-Friedrichs fluxes; the dissipation speed is the larger nodal
  // speed of the two neighbours, the flux itself uses c^2 = rho^(gamma-1).
  double* fq = fq_.data() + 1;
  double* fu = fu_.data() + 1;
  const double* area = area_.data() + 1;
#pragma omp simd
  for (Eigen::Index j = lo_ - 1; j <= hi_; ++j) {
    const double ql = q[j] + 0.5 * sq[j];
    const double qr = q[j + 1] - 0.5 * sq[j + 1];
    const double ul = u[j] + 0.5 * su[j];
    const double ur = u[j + 1] - 0.5 * su[j + 1];
    const double a = spd[j] > spd[j + 1] ? spd[j] : spd[j + 1];
    const double mass = 0.5 * ((1.0 + ql) * ul + (1.0 + qr) * ur) - 0.5 * a * (qr - ql);
    const double hl = 0.5 * ul * ul + (square_power<K>(1.0 + ql, e) - 1.0) * inv_gm1;
    const double hr = 0.5 * ur * ur + (square_power<K>(1.0 + qr, e) - 1.0) * inv_gm1;
    fq[j] = area[j] * mass;
    fu[j] = 0.5 * (hl + hr) - 0.5 * a * (ur - ul);
  }

  const double keep = 1.0 - blend;
  const double inv_dr = 1.0 / dr_;
  Eigen::Index start = lo_;
  if (lo_ == 0) {
    out_q[0] = keep * base_q[0] + blend * (q[0] - dt * inv_vol_[0] * fq[0]);
    out_u[0] = 0.0;
    start = 1;
  }
  const double* inv_vol = inv_vol_.data();
#pragma omp simd
  for (Eigen::Index i = start; i <= hi_; ++i) {
    out_q[i] = keep * base_q[i] + blend * (q[i] - dt * inv_vol[i] * (fq[i] - fq[i - 1]));
    out_u[i] = keep * base_u[i] + blend * (u[i] - dt * inv_dr * (fu[i] - fu[i - 1]));
  }
}

void EulerScheme::advance(double dt) {
  double* q = q_.data() + pad;
  double* u = u_.data() + pad;
  double* q1 = q1_.data() + pad;
  double* u1 = u1_.data() + pad;

  // Stage values just outside the window are read by the second stage.
  for (Eigen::Index k = std::max<Eigen::Index>(lo_ - 2, 0); k < lo_; ++k) {
    q1[k] = q[k];
    u1[k] = u[k];
  }
  for (Eigen::Index k = hi_ + 1; k <= std::min(hi_ + 2, n_ - 1); ++k) {
    q1[k] = q[k];
    u1[k] = u[k];
  }

  fill_ghosts(q, u);
  auto run = [&](auto tag) {
    constexpr PowerKind K = decltype(tag)::value;
    stage<K>(q, u, q, u, q1, u1, dt, 1.0);
    fill_ghosts(q1, u1);
    stage<K>(q1, u1, q, u, q, u, dt, 0.5);
  };
  switch (kind_) {
    case PowerKind::quarter: run(std::integral_constant<PowerKind, PowerKind::quarter>{}); break;
    case PowerKind::half: run(std::integral_constant<PowerKind, PowerKind::half>{}); break;
    case PowerKind::one: run(std::integral_constant<PowerKind, PowerKind::one>{}); break;
    default: run(std::integral_constant<PowerKind, PowerKind::general>{}); break;
  }
}

void EulerScheme::damp(double factor) {
  if (factor == 1.0) return;
  double* u = u_.data() + pad;
  for (Eigen::Index i = lo_; i <= hi_; ++i) u[i] *= factor;
}

template <PowerKind K>
void EulerScheme::refresh_impl(bool& ok) {
  const double* q = q_.data() + pad;
  const double* u = u_.data() + pad;
  double* c = c_.data() + pad;
  const Eigen::Index a = std::max<Eigen::Index>(lo_ - 1, 0);
  const Eigen::Index b = std::min(hi_ + 1, n_ - 1);

  double min_rho = std::numeric_limits<double>::infinity();
  double speed = 0.0;
  double total = 0.0;  // NaN detector
#pragma omp simd reduction(min : min_rho) reduction(max : speed) reduction(+ : total)
  for (Eigen::Index i = a; i <= b; ++i) {
    const double rho = 1.0 + q[i];
    min_rho = std::min(min_rho, rho);
    c[i] = power<K>(rho, expo_);
    speed = std::max(speed, std::abs(u[i]) + c[i]);
    total += q[i] + u[i];
  }
  ok = min_rho > 0.0 && std::isfinite(total) && std::isfinite(speed);
  if (lo_ == 0) speed = std::max(speed, dim_ * c[0]);
  speed_ = speed;

  const double theta_scale = 2.0 / (gamma_ - 1.0);
  const double half_inv_dr = 0.5 / dr_;
  double g = 0.0;
  const Eigen::Index i0 = std::max<Eigen::Index>(lo_, 1);
  const Eigen::Index i1 = std::min(hi_, n_ - 2);
#pragma omp simd reduction(max : g)
  for (Eigen::Index i = i0; i <= i1; ++i) {
    const double gu = std::abs(u[i + 1] - u[i - 1]);
    const double gc = std::abs(c[i + 1] - c[i - 1]);
    g = std::max(g, (gu + theta_scale * gc) * half_inv_dr);
  }
  gradient_ = g;
}

bool EulerScheme::refresh() {
  bool ok = false;
  switch (kind_) {
    case PowerKind::quarter: refresh_impl<PowerKind::quarter>(ok); break;
    case PowerKind::half: refresh_impl<PowerKind::half>(ok); break;
    case PowerKind::one: refresh_impl<PowerKind::one>(ok); break;
    default: refresh_impl<PowerKind::general>(ok); break;
  }
  return ok;
}

FluidState EulerScheme::snapshot(double t) const {
  FluidState s;
  s.t = t;
  s.dim = dim_;
  s.dr = dr_;
  s.gamma = gamma_;
  s.theta.resize(n_);
  s.u.resize(n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    s.theta[i] = std::expm1(expo_ * std::log1p(q_[i + pad])) / expo_;
    s.u[i] = u_[i + pad];
  }
  return s;
}

}  // namespace lifespan::solver::detail
