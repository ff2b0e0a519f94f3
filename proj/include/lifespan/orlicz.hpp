#pragma once

#include "lifespan/radial_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace lifespan::orlicz {

/// The N-function family indexed by the adiabatic index gamma > 1.
struct NFunctionFamily {
  double gamma = 2.0;

  NFunctionFamily() = default;
  explicit NFunctionFamily(double g) : gamma(g) {
    if (!(g > 1.0) || !std::isfinite(g)) throw std::invalid_argument("NFunctionFamily: gamma must exceed 1");
  }

  /// Hoelder-conjugate exponent gamma' = gamma / (gamma - 1).
  double conjugate() const { return gamma / (gamma - 1.0); }

  /// The complementary family, obtained by swapping gamma and gamma'.
  NFunctionFamily complement() const { return NFunctionFamily(conjugate()); }
};

enum class Which { upsilon, upsilon_star };

namespace detail {

/// ((1+p)^g - 1)/g - p for p >= 0. Below |p| = 0.1 the binomial series is
/// summed instead, which avoids the cancellation of the closed form.
template <typename Scalar>
Scalar power_excess(Scalar p, double g) {
  using std::expm1;
  using std::log1p;
  using std::abs;
  if (p < Scalar(0.1)) {
    Scalar coeff = Scalar(g);  // binom(g, k) for the current k
    Scalar pk = p;
    Scalar sum = 0;
    for (int k = 2; k < 64; ++k) {
      coeff *= Scalar(g - k + 1) / Scalar(k);
      pk *= p;
      const Scalar term = coeff * pk / Scalar(g);
      sum += term;
      if (abs(term) <= Scalar(1e-18) * abs(sum)) break;
    }
    return sum;
  }
  return expm1(Scalar(g) * log1p(p)) / Scalar(g) - p;
}

/// Derivative of power_excess: (1+p)^(g-1) - 1.
template <typename Scalar>
Scalar power_excess_prime(Scalar p, double g) {
  using std::expm1;
  using std::log1p;
  return expm1(Scalar(g - 1.0) * log1p(p));
}

}  // namespace detail

/// Upsilon(p) = ((|p|+1)^gamma - 1)/gamma - |p|.
template <typename Scalar = double>
Scalar upsilon(Scalar p, const NFunctionFamily& fam) {
  using std::abs;
  return detail::power_excess(Scalar(abs(p)), fam.gamma);
}

/// Complementary function: same form with gamma replaced by gamma'.
template <typename Scalar = double>
Scalar upsilon_star(Scalar q, const NFunctionFamily& fam) {
  using std::abs;
  return detail::power_excess(Scalar(abs(q)), fam.conjugate());
}

/// Xi(p) = 1 / Upsilon(1/p), Xi(0) = 0.
template <typename Scalar = double>
Scalar xi(Scalar p, const NFunctionFamily& fam) {
  if (p == Scalar(0)) return Scalar(0);
  return Scalar(1) / upsilon(Scalar(1) / p, fam);
}

template <typename Scalar = double>
Scalar upsilon_prime(Scalar p, const NFunctionFamily& fam) {
  using std::abs;
  using std::copysign;
  return copysign(detail::power_excess_prime(Scalar(abs(p)), fam.gamma), p);
}

/// Inverses on [0, inf). Bracketed bisection with Newton polish, relative
/// tolerance 1e-12. Reject y < 0.
double upsilon_inv(double y, const NFunctionFamily& fam);
double upsilon_star_inv(double y, const NFunctionFamily& fam);
double xi_inv(double y, const NFunctionFamily& fam);

/// Brute-force Legendre transform sup_{p in [0, p_max]} (p|q| - Upsilon(p)) on a
/// uniform grid with repeated local refinement around the discrete argmax.
/// Uses only upsilon(); serves as the independent check of upsilon_star().
double legendre_transform_oracle(double q, const NFunctionFamily& fam, double p_max, int steps);

/// Maximizer of p|q| - Upsilon(p), useful to size p_max for the oracle.
double legendre_argmax(double q, const NFunctionFamily& fam);

/// Upsilon^{-1}(p) (Upsilon*)^{-1}(p) / p. Lies in [1, 2] for every p > 0.
double inverse_product_ratio(double p, const NFunctionFamily& fam);

/// Modular integral of Phi(u/k) over R^n, Phi = Upsilon or Upsilon*.
double modular(const RadialGridFunction& u, const NFunctionFamily& fam, Which which, double k);

/// Luxemburg norm inf{k > 0 : modular(u/k) <= 1}, bisection in log k to
/// relative tolerance 1e-12. Zero for the zero function.
double luxemburg_norm(const RadialGridFunction& u, const NFunctionFamily& fam, Which which = Which::upsilon);

/// |int u v| / (4 ||u||_Upsilon ||v||_Upsilon*). Bounded by 1.
double check_holder(const RadialGridFunction& u, const RadialGridFunction& v, const NFunctionFamily& fam);

/// Upsilon(pq) / (Upsilon(p) Upsilon(q)).
double multiplicativity_ratio(double p, double q, const NFunctionFamily& fam);

struct RatioRange {
  double min = 0.0;
  double max = 0.0;
};

/// Min/max of multiplicativity_ratio over the log grid p, q in 10^[lo, hi]
/// with `per_decade` points per decade.
RatioRange multiplicativity_scan(const NFunctionFamily& fam, double lo_exp, double hi_exp, int per_decade);

/// Empirical constant d_gamma of the Luxemburg bound, taken over the fixed log grid
/// p, q in 10^[-4, 4] with 161 points per axis. For gamma <= 2 it is the max of
/// Upsilon(pq) / (Upsilon(p) Xi(q)); for gamma > 2 the max of
/// Upsilon(pq) / (Upsilon(p) Upsilon(q)).
double estimate_d_gamma(const NFunctionFamily& fam);

struct LuxEstimate {
  double bound = 0.0;     ///< c_{gamma,kappa0} * k
  double constant = 0.0;  ///< c_{gamma,kappa0}
  double d_gamma = 0.0;
  double modular = 0.0;   ///< int Upsilon(u/k), checked against kappa0
};

/// Luxemburg bound from a modular estimate int Upsilon(u/k) <= kappa0. Throws
/// std::domain_error when the precondition fails.
LuxEstimate check_luxest(const RadialGridFunction& u, double k, double kappa0, const NFunctionFamily& fam);

/// Measured sandwich constants c1 <= Upsilon(p)/p^2 (|p| <= 1) and
/// Upsilon(p)/|p|^gamma (|p| > 1) <= c2 on a log grid 10^[lo, hi].
struct Sandwich {
  double c1 = 0.0;
  double c2 = 0.0;
};
Sandwich measure_sandwich(const NFunctionFamily& fam, double lo_exp, double hi_exp, int per_decade);

}  // namespace lifespan::orlicz
