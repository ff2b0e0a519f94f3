#include "lifespan/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lifespan::orlicz {

namespace {

// Solve f(p) = y for p >= 0 with f increasing, f(0) = 0. `guess` seeds Newton.
template <typename F, typename DF>
double invert_increasing(F&& f, DF&& df, double y, double guess) {
  if (y < 0.0 || std::isnan(y)) throw std::invalid_argument("inverse: argument must be non-negative");
  if (y == 0.0) return 0.0;
  if (std::isinf(y)) return std::numeric_limits<double>::infinity();

  double lo = 0.0;
  double hi = std::max(guess, 1e-300) * 2.0;
  while (f(hi) < y) {
    lo = hi;
    hi *= 2.0;
  }
  double p = std::clamp(guess, lo, hi);
  for (int it = 0; it < 400; ++it) {
    const double r = f(p) - y;
    if (r == 0.0) return p;
    if (r > 0.0) hi = p; else lo = p;
    const double slope = df(p);
    double next = (slope > 0.0) ? p - r / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - p);
    p = next;
    if (step <= 1e-15 * p || (hi - lo) <= 1e-15 * hi) break;
  }
  return p;
}

double small_large_guess(double y, double g) {
  // Upsilon ~ (g-1)p^2/2 near zero and ~ p^g/g at infinity.
  return y < 1.0 ? std::sqrt(2.0 * y / (g - 1.0)) : std::pow(g * y, 1.0 / g);
}

double apply(Which which, double p, const NFunctionFamily& fam) {
  return which == Which::upsilon ? upsilon(p, fam) : upsilon_star(p, fam);
}

}  // namespace

double upsilon_inv(double y, const NFunctionFamily& fam) {
  const double g = fam.gamma;
  return invert_increasing([&](double p) { return detail::power_excess(p, g); },
                           [&](double p) { return detail::power_excess_prime(p, g); }, y,
                           small_large_guess(y, g));
}

double upsilon_star_inv(double y, const NFunctionFamily& fam) {
  return upsilon_inv(y, fam.complement());
}

double xi_inv(double y, const NFunctionFamily& fam) {
  if (y < 0.0 || std::isnan(y)) throw std::invalid_argument("xi_inv: argument must be non-negative");
  if (y == 0.0) return 0.0;
  // Xi(p) = y  <=>  Upsilon(1/p) = 1/y.
  return 1.0 / upsilon_inv(1.0 / y, fam);
}

double legendre_argmax(double q, const NFunctionFamily& fam) {
  return std::pow(1.0 + std::abs(q), 1.0 / (fam.gamma - 1.0)) - 1.0;
}

double legendre_transform_oracle(double q, const NFunctionFamily& fam, double p_max, int steps) {
  if (!(p_max > 0.0)) throw std::invalid_argument("legendre_transform_oracle: p_max must be positive");
  if (steps < 2) throw std::invalid_argument("legendre_transform_oracle: steps must be >= 2");
  const double aq = std::abs(q);
  auto objective = [&](double p) { return p * aq - upsilon(p, fam); };

  double lo = 0.0;
  double hi = p_max;
  double best = objective(0.0);
  for (int round = 0; round < 200; ++round) {
    const double h = (hi - lo) / steps;
    int arg = 0;
    double val = objective(lo);
    for (int i = 1; i <= steps; ++i) {
      const double v = objective(lo + i * h);
      if (v > val) {
        val = v;
        arg = i;
      }
    }
    best = std::max(best, val);
    const double centre = lo + arg * h;
    const double new_lo = std::max(lo, centre - h);
    const double new_hi = std::min(hi, centre + h);
    if (new_hi - new_lo <= 1e-14 * std::max(1.0, centre)) break;
    lo = new_lo;
    hi = new_hi;
  }
  return best;
}

double inverse_product_ratio(double p, const NFunctionFamily& fam) {
  if (!(p > 0.0)) throw std::invalid_argument("inverse_product_ratio: p must be positive");
  return upsilon_inv(p, fam) * upsilon_star_inv(p, fam) / p;
}

double modular(const RadialGridFunction& u, const NFunctionFamily& fam, Which which, double k) {
  const Eigen::ArrayXd w = u.trapezoid_weights();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (w[i] == 0.0 || u[i] == 0.0) continue;
    sum += w[i] * apply(which, u[i] / k, fam);
  }
  return sum;
}

double luxemburg_norm(const RadialGridFunction& u, const NFunctionFamily& fam, Which which) {
  if (u.size() < 2) throw std::invalid_argument("luxemburg_norm: grid needs at least 2 nodes");
  if (!u.values().allFinite()) throw std::invalid_argument("luxemburg_norm: non-finite values");
  const double amax = u.values().abs().maxCoeff();
  if (amax == 0.0) return 0.0;

  auto level = [&](double k) { return modular(u, fam, which, k); };
  double hi = amax;
  while (level(hi) > 1.0) hi *= 2.0;
  double lo = hi * 0.5;
  while (level(lo) <= 1.0) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-300) return hi;  // only nodes with zero weight carry mass
  }
  while ((hi - lo) > 1e-12 * hi) {
    const double mid = std::sqrt(lo * hi);
    if (level(mid) > 1.0) lo = mid; else hi = mid;
  }
  return hi;
}

double check_holder(const RadialGridFunction& u, const RadialGridFunction& v, const NFunctionFamily& fam) {
  if (!u.same_layout(v)) throw std::invalid_argument("check_holder: mismatched grids");
  const double pairing = std::abs(integrate_product(u, v.values()));
  if (pairing == 0.0) return 0.0;
  const double nu = luxemburg_norm(u, fam, Which::upsilon);
  const double nv = luxemburg_norm(v, fam, Which::upsilon_star);
  return pairing / (4.0 * nu * nv);
}

double multiplicativity_ratio(double p, double q, const NFunctionFamily& fam) {
  if (p == 0.0 || q == 0.0) throw std::invalid_argument("multiplicativity_ratio: arguments must be nonzero");
  return upsilon(p * q, fam) / (upsilon(p, fam) * upsilon(q, fam));
}

namespace {

std::vector<double> log_grid(double lo_exp, double hi_exp, int per_decade) {
  const int count = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade)) + 1;
  std::vector<double> pts(count);
  for (int i = 0; i < count; ++i) pts[i] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (count - 1));
  return pts;
}

}  // namespace

RatioRange multiplicativity_scan(const NFunctionFamily& fam, double lo_exp, double hi_exp, int per_decade) {
  const auto pts = log_grid(lo_exp, hi_exp, per_decade);
  RatioRange out{std::numeric_limits<double>::infinity(), 0.0};
  for (double p : pts) {
    for (double q : pts) {
      const double r = multiplicativity_ratio(p, q, fam);
      out.min = std::min(out.min, r);
      out.max = std::max(out.max, r);
    }
  }
  return out;
}

double estimate_d_gamma(const NFunctionFamily& fam) {
  const auto pts = log_grid(-4.0, 4.0, 20);  // 161 points
  double d = 0.0;
  for (double p : pts) {
    const double up = upsilon(p, fam);
    for (double q : pts) {
      const double denom = fam.gamma <= 2.0 ? up * xi(q, fam) : up * upsilon(q, fam);
      d = std::max(d, upsilon(p * q, fam) / denom);
    }
  }
  return d;
}

LuxEstimate check_luxest(const RadialGridFunction& u, double k, double kappa0, const NFunctionFamily& fam) {
  if (!(k > 0.0) || !(kappa0 > 0.0)) throw std::invalid_argument("check_luxest: k and kappa0 must be positive");
  LuxEstimate est;
  est.modular = modular(u, fam, Which::upsilon, k);
  if (est.modular > kappa0 * (1.0 + 1e-12))
    throw std::domain_error("check_luxest: modular of u/k exceeds kappa0");
  est.d_gamma = estimate_d_gamma(fam);
  const double level = 1.0 / (est.d_gamma * kappa0);
  est.constant = fam.gamma <= 2.0 ? 1.0 / xi_inv(level, fam) : 1.0 / upsilon_inv(level, fam);
  est.bound = est.constant * k;
  return est;
}

Sandwich measure_sandwich(const NFunctionFamily& fam, double lo_exp, double hi_exp, int per_decade) {
  Sandwich s{std::numeric_limits<double>::infinity(), 0.0};
  for (double p : log_grid(lo_exp, hi_exp, per_decade)) {
    const double ref = p <= 1.0 ? p * p : std::pow(p, fam.gamma);
    const double r = upsilon(p, fam) / ref;
    s.c1 = std::min(s.c1, r);
    s.c2 = std::max(s.c2, r);
  }
  return s;
}

}  // namespace lifespan::orlicz
