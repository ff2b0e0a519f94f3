#include "lifespan/testfn.hpp"

#include "lifespan/radial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lifespan::testfn {

double bessel_i_series(int order, double x) {
  if (order != 0 && order != 1) throw std::invalid_argument("bessel_i_series: order must be 0 or 1");
  // I_v(x) = sum_k (x/2)^{2k+v} / (k! (k+v)!), all terms positive.
  const double half = 0.5 * x;
  const double q = half * half;
  double term = order == 0 ? 1.0 : half;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + order));
    sum += term;
    if (term <= 1e-17 * sum) break;
  }
  return sum;
}

double bessel_i_asymptotic_scaled(int order, double x, int terms) {
  if (order != 0 && order != 1) throw std::invalid_argument("bessel_i_asymptotic_scaled: order must be 0 or 1");
  // e^{-x} I_v(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(v) / x^k,
  // a_k = a_{k-1} (4v^2 - (2k-1)^2) / (8k).
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < terms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    sum += term;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

double bessel_i_scaled(int order, double x) {
  x = std::abs(x);
  if (x <= bessel_switch) return bessel_i_series(order, x) * std::exp(-x);
  return bessel_i_asymptotic_scaled(order, x);
}

double bessel_i(int order, double x) {
  if (std::abs(x) <= bessel_switch) return bessel_i_series(order, std::abs(x));
  return bessel_i_asymptotic_scaled(order, std::abs(x)) * std::exp(std::abs(x));
}

namespace {

void require_radius(double r) {
  if (r < 0.0 || std::isnan(r)) throw std::invalid_argument("test function: radius must be non-negative");
}

}  // namespace

double phi(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  switch (ctx.dim) {
    case 1: return std::cosh(r);
    case 2: return bessel_i(0, r);
    default:
      if (r < 1e-4) return 1.0 + r * r / 6.0 + r * r * r * r / 120.0;
      return std::sinh(r) / r;
  }
}

double phi_prime(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  switch (ctx.dim) {
    case 1: return std::sinh(r);
    case 2: return bessel_i(1, r);
    default:
      if (r < 0.1) {
        // sum_k 2k r^{2k-1} / (2k+1)!, avoiding the cancellation in the closed form.
        double term = r / 3.0;  // k = 1
        double sum = term;
        for (int k = 2; k < 12; ++k) {
          term *= r * r * k / ((k - 1.0) * (2.0 * k) * (2.0 * k + 1.0));
          sum += term;
        }
        return sum;
      }
      return (r * std::cosh(r) - std::sinh(r)) / (r * r);
  }
}

double phi_second(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  if (ctx.dim == 1) return std::cosh(r);
  if (r < 1e-3) {
    // Even series: phi = sum r^{2k} / (2^k k! n(n+2)...(n+2k-2)); second derivative at 0 is 1/n.
    const double n = ctx.dim;
    return 1.0 / n + 3.0 * r * r / (2.0 * n * (n + 2.0));
  }
  return phi(r, ctx) - (ctx.dim - 1) * phi_prime(r, ctx) / r;
}

double phi_scaled(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  switch (ctx.dim) {
    case 1: return 0.5 * (1.0 + std::exp(-2.0 * r));
    case 2: return bessel_i_scaled(0, r);
    default:
      if (r < 1e-4) return phi(r, ctx) * std::exp(-r);
      return -0.5 * std::expm1(-2.0 * r) / r;
  }
}

double phi_prime_scaled(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  switch (ctx.dim) {
    case 1: return -0.5 * std::expm1(-2.0 * r);
    case 2: return bessel_i_scaled(1, r);
    default: {
      if (r < 0.1) return phi_prime(r, ctx) * std::exp(-r);
      const double e2 = std::exp(-2.0 * r);
      return (0.5 * r * (1.0 + e2) + 0.5 * std::expm1(-2.0 * r)) / (r * r);
    }
  }
}

double phi_second_scaled(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  if (ctx.dim == 1) return phi_scaled(r, ctx);
  if (r < 1e-3) return phi_second(r, ctx) * std::exp(-r);
  return phi_scaled(r, ctx) - (ctx.dim - 1) * phi_prime_scaled(r, ctx) / r;
}

double log_phi(double r, const TestFunctionContext& ctx) { return r + std::log(phi_scaled(r, ctx)); }

double psi(double t, double r, const TestFunctionContext& ctx) {
  return std::exp(r - t) * phi_scaled(r, ctx);
}

double phi_sphere_average(double r, const TestFunctionContext& ctx, int panels) {
  require_radius(r);
  if (ctx.dim == 1) return 0.5 * (std::exp(r) + std::exp(-r));
  if (ctx.dim == 2) {
    // (1/2pi) int_0^{2pi} exp(r cos a) da; periodic trapezoid converges geometrically.
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) sum += std::exp(r * std::cos(2.0 * std::numbers::pi * k / panels));
    return sum / panels;
  }
  // (1/4pi) int_{S^2} exp(r cos a) = (1/2) int_0^pi exp(r cos a) sin a da, Simpson.
  const int m = panels + (panels % 2);
  const double h = std::numbers::pi / m;
  double sum = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double a = k * h;
    const double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::exp(r * std::cos(a)) * std::sin(a);
  }
  return 0.5 * sum * h / 3.0;
}

double check_laplacian_identity(const TestFunctionContext& ctx, double r_max, double dr) {
  if (!(dr > 0.0) || !(r_max > 0.0) || r_max / dr < 100.0)
    throw std::invalid_argument("check_laplacian_identity: need r_max/dr >= 100");
  const auto nodes = static_cast<long>(std::floor(r_max / dr + 1e-9));
  double worst = 0.0;
  for (long i = 1; i <= nodes; ++i) {
    const double r = i * dr;
    const double fm = phi(r - dr, ctx);
    const double f0 = phi(r, ctx);
    const double fp = phi(r + dr, ctx);
    const double d2 = (fp - 2.0 * f0 + fm) / (dr * dr);
    const double d1 = (fp - fm) / (2.0 * dr);
    const double lap = d2 + (ctx.dim - 1) * d1 / r;
    worst = std::max(worst, std::abs(lap - f0) / f0);
  }
  return worst;
}

double psi_power_integral(double t, double b, const TestFunctionContext& ctx, double dr) {
  if (!(b >= 0.0 && b <= 2.0)) throw std::invalid_argument("psi_power_integral: b must lie in [0, 2]");
  if (t < 0.0) throw std::invalid_argument("psi_power_integral: t must be non-negative");
  if (!(dr > 0.0)) throw std::invalid_argument("psi_power_integral: dr must be positive");
  const double radius = 1.0 + t;
  const auto cells = std::max<long>(2, static_cast<long>(std::ceil(radius / dr)));
  const double h = radius / cells;
  const int n = ctx.dim;
  double sum = 0.0;
  for (long i = 0; i <= cells; ++i) {
    const double r = i * h;
    const double w = (i == 0 || i == cells) ? 0.5 : 1.0;
    const double log_psi = r - t + std::log(phi_scaled(r, ctx));
    const double radial = n == 1 ? 1.0 : std::pow(r, n - 1);
    sum += w * std::exp(b * log_psi) * radial;
  }
  return sphere_area(n) * h * sum;
}

double psi_power_ratio(double t, double b, const TestFunctionContext& ctx, double dr) {
  const double expo = 0.5 * (ctx.dim - 1) * (2.0 - b);
  return psi_power_integral(t, b, ctx, dr) / std::pow(japanese(t), expo);
}

double check_psi_sup(double t, const TestFunctionContext& ctx, int samples) {
  if (t < 0.0) throw std::invalid_argument("check_psi_sup: t must be non-negative");
  const double radius = 1.0 + t;
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double r = radius * i / (samples - 1);
    best = std::max(best, psi(t, r, ctx));
  }
  return best * std::pow(japanese(t), 0.5 * (ctx.dim - 1));
}

double testpro_ratio(double r, const TestFunctionContext& ctx) {
  require_radius(r);
  return std::exp(std::log(phi_scaled(r, ctx)) + 0.5 * (ctx.dim - 1) * std::log(japanese(r)));
}

}  // namespace lifespan::testfn
