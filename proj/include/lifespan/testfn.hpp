#pragma once

#include <stdexcept>

namespace lifespan::testfn {

/// Modified Bessel functions of the first kind of order 0 and 1.
///
/// The power series has only positive terms, so it stays accurate well past the
/// usual switch points; it is used up to `bessel_switch`, and the large-argument
/// expansion (with the exp(x) factor removed) beyond it.
inline constexpr double bessel_switch = 25.0;

double bessel_i_series(int order, double x);
/// exp(-x) * I_order(x) from the large-argument expansion, `terms` terms.
double bessel_i_asymptotic_scaled(int order, double x, int terms = 20);
/// exp(-x) * I_order(x), branch selected by `bessel_switch`.
double bessel_i_scaled(int order, double x);
double bessel_i(int order, double x);

/// Spatial dimension carrier for the radial test function.
struct TestFunctionContext {
  int dim = 1;

  TestFunctionContext() = default;
  explicit TestFunctionContext(int n) : dim(n) {
    if (n < 1 || n > 3) throw std::invalid_argument("TestFunctionContext: dim must be 1, 2 or 3");
  }
};

/// Radial positive solution of Laplace(phi) = phi with phi(0) = 1:
/// cosh r (n = 1), I_0(r) (n = 2), sinh(r)/r (n = 3).
double phi(double r, const TestFunctionContext& ctx);
/// d phi / dr.
double phi_prime(double r, const TestFunctionContext& ctx);
/// d^2 phi / dr^2 = phi - (n-1) phi' / r (the radial Hessian eigenvalue).
double phi_second(double r, const TestFunctionContext& ctx);
/// phi(r) * exp(-r); finite for every r >= 0.
double phi_scaled(double r, const TestFunctionContext& ctx);
/// phi'(r) * exp(-r) and phi''(r) * exp(-r).
double phi_prime_scaled(double r, const TestFunctionContext& ctx);
double phi_second_scaled(double r, const TestFunctionContext& ctx);
/// log phi(r).
double log_phi(double r, const TestFunctionContext& ctx);

/// psi(t, r) = exp(-t) phi(r), evaluated through phi_scaled to avoid overflow.
double psi(double t, double r, const TestFunctionContext& ctx);

/// Spherical-average definition of phi evaluated by direct quadrature over the
/// sphere (periodic trapezoid for n = 2, composite Simpson in the polar angle
/// for n = 3; n = 1 sums the two points of S^0).
double phi_sphere_average(double r, const TestFunctionContext& ctx, int panels = 4000);

/// max over [dr, r_max] of |Laplace(phi) - phi| / phi with the radial Laplacian
/// phi'' + (n-1) phi'/r taken by central differences of phi itself.
double check_laplacian_identity(const TestFunctionContext& ctx, double r_max, double dr);

/// int_{|x| <= 1+t} psi^b dx by radial trapezoid with spacing dr.
double psi_power_integral(double t, double b, const TestFunctionContext& ctx, double dr);

/// psi_power_integral(t, b) / <t>^{(n-1)(2-b)/2}.
double psi_power_ratio(double t, double b, const TestFunctionContext& ctx, double dr);

/// max_{r <= 1+t} psi(t, r) * <t>^{(n-1)/2}, scanning a grid of `samples` radii.
double check_psi_sup(double t, const TestFunctionContext& ctx, int samples = 2001);

/// phi(r) <r>^{(n-1)/2} exp(-r), computed in log space.
double testpro_ratio(double r, const TestFunctionContext& ctx);

}  // namespace lifespan::testfn
