#pragma once

// Internal finite-volume kernels shared by the Eulerian and Lagrangian backends.

#include "lifespan/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#if defined(__SSE__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace lifespan::solver::detail {

inline double minmod(double a, double b) {
  // Branch-free so the slope loops vectorize.
  return 0.5 * (std::copysign(1.0, a) + std::copysign(1.0, b)) * std::min(std::abs(a), std::abs(b));
}

/// Monotonized central limiter: minmod(2a, 2b, (a+b)/2).
inline double monotonized_central(double a, double b) {
  const double s = 0.5 * (std::copysign(1.0, a) + std::copysign(1.0, b));
  return s * std::min(std::min(2.0 * std::abs(a), 2.0 * std::abs(b)), 0.5 * std::abs(a + b));
}

/// Limited slopes of x on nodes k0..k1.
inline void limited_slopes(Limiter l, const double* x, double* s, Eigen::Index k0, Eigen::Index k1) {
  if (l == Limiter::mc) {
#pragma omp simd
    for (Eigen::Index k = k0; k <= k1; ++k) s[k] = monotonized_central(x[k] - x[k - 1], x[k + 1] - x[k]);
  } else {
#pragma omp simd
    for (Eigen::Index k = k0; k <= k1; ++k) s[k] = minmod(x[k] - x[k - 1], x[k + 1] - x[k]);
  }
}

/// Exponents that show up for the common adiabatic indices get sqrt-based paths.
enum class PowerKind { quarter, half, one, general };

inline PowerKind classify_power(double e) {
  if (e == 0.25) return PowerKind::quarter;
  if (e == 0.5) return PowerKind::half;
  if (e == 1.0) return PowerKind::one;
  return PowerKind::general;
}

template <PowerKind K>
inline double power(double x, double e) {
  if constexpr (K == PowerKind::quarter) return std::sqrt(std::sqrt(x));
  else if constexpr (K == PowerKind::half) return std::sqrt(x);
  else if constexpr (K == PowerKind::one) return x;
  else return std::pow(x, e);
}

/// x^(2e), the square of power().
template <PowerKind K>
inline double square_power(double x, double e) {
  if constexpr (K == PowerKind::quarter) return std::sqrt(x);
  else if constexpr (K == PowerKind::half) return x;
  else if constexpr (K == PowerKind::one) return x * x;
  else return std::pow(x, 2.0 * e);
}

/// Flushes denormals to zero for the lifetime of the guard. Precursor tails of
/// the numerical flux decay geometrically and would otherwise stall the loops.
class DenormalGuard {
 public:
  DenormalGuard() {
#if defined(__SSE__)
    ftz_ = _MM_GET_FLUSH_ZERO_MODE();
    daz_ = _MM_GET_DENORMALS_ZERO_MODE();
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
#endif
  }
  ~DenormalGuard() {
#if defined(__SSE__)
    _MM_SET_FLUSH_ZERO_MODE(ftz_);
    _MM_SET_DENORMALS_ZERO_MODE(daz_);
#endif
  }
  DenormalGuard(const DenormalGuard&) = delete;
  DenormalGuard& operator=(const DenormalGuard&) = delete;

 private:
  unsigned ftz_ = 0;
  unsigned daz_ = 0;
};

/// Radial Euler equations in the variables q = rho - 1 and u, vertex-centred:
/// node i carries the shell [r_i - dr/2, r_i + dr/2] (a half shell at the
/// origin). The mass equation is updated with exact shell volumes and face
/// areas, so the discrete mass telescopes for every dimension; the velocity
/// equation u_t + (u^2/2 + (c^2-1)/(gamma-1))_r = 0 has no geometric source.
class EulerScheme {
 public:
  explicit EulerScheme(const FluidState& state, Limiter limiter = Limiter::minmod);

  Eigen::Index nodes() const { return n_; }
  double dr() const { return dr_; }
  double front(double t) const { return 1.0 + t; }

  /// Restricts updates to nodes [lo, hi]; nodes outside stay frozen.
  void set_window(Eigen::Index lo, Eigen::Index hi);
  Eigen::Index window_lo() const { return lo_; }
  Eigen::Index window_hi() const { return hi_; }

  void advance(double dt);
  void damp(double factor);

  /// Recomputes sound speed, step speed and gradient on the window. Returns
  /// false when the density is no longer positive and finite.
  bool refresh();
  /// max(|u| + c) with the origin shell weighted by its area/volume ratio.
  double step_speed() const { return speed_; }
  double gradient() const { return gradient_; }

  FluidState snapshot(double t) const;

 private:
  template <PowerKind K>
  void stage(const double* q, const double* u, const double* base_q, const double* base_u, double* out_q,
             double* out_u, double dt, double blend);
  template <PowerKind K>
  void refresh_impl(bool& ok);
  void fill_ghosts(double* q, double* u) const;

  static constexpr Eigen::Index pad = 2;

  int dim_;
  double dr_;
  double gamma_;
  double expo_;  // (gamma - 1) / 2
  PowerKind kind_;
  Limiter limiter_;
  Eigen::Index n_;
  Eigen::Index lo_ = 0;
  Eigen::Index hi_ = 0;

  std::vector<double> q_, u_, q1_, u1_;
  std::vector<double> sq_, su_;
  std::vector<double> fq_, fu_;   // face fluxes, index j + 1 for face j (between nodes j and j+1)
  std::vector<double> area_;      // face areas, same indexing
  std::vector<double> inv_vol_;   // per node
  std::vector<double> c_;         // sound speed per node
  std::vector<double> spd_;       // |u| + c per node, stage scratch
  double speed_ = 1.0;
  double gradient_ = 0.0;
};

/// Lagrangian p-system in w = v - 1 and u on the mass coordinate m >= 0, with
/// even/odd reflection at m = 0.
class PSystemScheme {
 public:
  PSystemScheme(double dm, double gamma, Eigen::ArrayXd v, Eigen::ArrayXd u, double front0,
                Limiter limiter = Limiter::minmod);

  Eigen::Index nodes() const { return n_; }
  double dr() const { return dm_; }
  double front(double t) const { return front0_ + t; }

  void set_window(Eigen::Index lo, Eigen::Index hi);
  void advance(double dt);
  void damp(double factor);
  bool refresh();
  double step_speed() const { return speed_; }
  double gradient() const { return gradient_; }

  FluidState snapshot(double t) const;
  /// sum of node weights times v (half weight at m = 0).
  double volume() const;
  Eigen::ArrayXd specific_volume() const;
  Eigen::ArrayXd velocity() const;

 private:
  void stage(const double* w, const double* u, const double* base_w, const double* base_u, double* out_w,
             double* out_u, double dt, double blend);
  template <int Kind>
  bool refresh_impl();
  template <int Kind>
  void stage_impl(const double* w, const double* u, const double* base_w, const double* base_u, double* out_w,
                  double* out_u, double dt, double blend);
  void fill_ghosts(double* w, double* u) const;

  static constexpr Eigen::Index pad = 2;

  double dm_;
  double gamma_;
  double front0_;
  Limiter limiter_;
  Eigen::Index n_;
  Eigen::Index lo_ = 0;
  Eigen::Index hi_ = 0;
  std::vector<double> w_, u_, w1_, u1_, sw_, su_, spd_, fw_, fu_;
  double speed_ = 1.0;
  double gradient_ = 0.0;
};

/// Exact damping factor exp(-mu int_a^b (1+s)^{-lambda} ds).
inline double damping_factor(const DampingParams& d, double a, double b) {
  if (d.mu == 0.0) return 1.0;
  return std::exp(-d.mu * d.kernel_integral(a, b));
}

/// Shared time loop: Strang-split damping around the hyperbolic update,
/// optional moving window, blow-up detection and observer cadence.
template <typename Scheme>
LifespanRecord drive(Scheme& scheme, const DampingParams& damping, const RunSettings& set, double epsilon,
                     const Observer& observer) {
  DenormalGuard guard;
  LifespanRecord rec;
  rec.epsilon = epsilon;
  rec.dr = set.dr;
  rec.cfl = set.cfl;

  const Eigen::Index last = scheme.nodes() - 1;
  const double h = scheme.dr();
  auto place_window = [&](double t) {
    if (set.window <= 0.0) {
      scheme.set_window(0, last);
      return;
    }
    const double front = scheme.front(t);
    const auto lo = static_cast<Eigen::Index>(std::floor((front - set.window) / h));
    const auto hi = static_cast<Eigen::Index>(std::ceil(front / h)) + 24;
    scheme.set_window(std::clamp<Eigen::Index>(lo, 0, last), std::clamp<Eigen::Index>(hi, 0, last));
  };

  double t = 0.0;
  place_window(t);
  if (!scheme.refresh()) throw std::invalid_argument("initial density is not positive");
  const double g0 = scheme.gradient();
  const bool track_min = set.blowup.reference == GrowthReference::running_min;
  double level = set.blowup.level(g0);
  rec.initial_gradient = g0;
  rec.min_gradient = g0;
  rec.peak_gradient = g0;
  double observed_at = 0.0;
  if (observer) observer(scheme.snapshot(t), g0);

  const double dt_min = set.dt_min_factor * h;
  long out_index = 1;
  double next_out = set.dt_out > 0.0 ? set.dt_out : std::numeric_limits<double>::infinity();
  bool stop = false;

  while (!stop) {
    if (t >= set.horizon) {
      rec.reason = Termination::horizon_reached;
      break;
    }
    const double dt_cfl = set.cfl * h / scheme.step_speed();
    if (!(dt_cfl >= dt_min)) {
      rec.reason = Termination::dt_collapse;
      break;
    }
    double t_next = t + dt_cfl;
    bool lands_on_output = false;
    if (t_next >= next_out - 1e-9 * dt_cfl) {
      t_next = next_out;
      lands_on_output = true;
    }
    if (t_next >= set.horizon - 1e-9 * dt_cfl) t_next = set.horizon;
    const double dt = t_next - t;
    const double t_mid = t + 0.5 * dt;

    scheme.damp(damping_factor(damping, t, t_mid));
    scheme.advance(dt);
    scheme.damp(damping_factor(damping, t_mid, t_next));
    t = t_next;
    ++rec.steps;

    place_window(t);
    if (!scheme.refresh()) {
      rec.reason = Termination::density_floor;
      stop = true;
    } else {
      const double g = scheme.gradient();
      rec.peak_gradient = std::max(rec.peak_gradient, g);
      if (g < rec.min_gradient) {
        rec.min_gradient = g;
        if (track_min) level = set.blowup.level(g);
      }
      if (g > level) {
        rec.reason = Termination::gradient_threshold;
        stop = true;
      }
    }
    if (lands_on_output) {
      if (!stop && observer) {
        observer(scheme.snapshot(t), scheme.gradient());
        observed_at = t;
      }
      ++out_index;
      next_out = static_cast<double>(out_index) * set.dt_out;
    }
  }
  rec.T_blow = t;
  rec.final_gradient = scheme.gradient();
  if (observer && rec.reason != Termination::density_floor && t != observed_at) observer(scheme.snapshot(t), rec.final_gradient);
  return rec;
}

}  // namespace lifespan::solver::detail
