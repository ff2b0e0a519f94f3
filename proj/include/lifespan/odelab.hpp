#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lifespan::odelab {

/// N(p) = c_low p^{1+alpha} on [0,1] and c_high p^{1+beta} above 1; zero for p <= 0.
struct PiecewisePowerN {
  double alpha = 1.0;
  double beta = 1.0;
  double c_low = 1.0;
  double c_high = 1.0;

  PiecewisePowerN() = default;
  PiecewisePowerN(double a, double b, double cl = 1.0, double ch = 1.0);

  double operator()(double p) const;
  double derivative(double p) const;

  /// M: same shape with exponents alpha/2 and beta/2, unit constants.
  PiecewisePowerN halved() const { return PiecewisePowerN(alpha / 2, beta / 2); }
};

struct OdeRunConfig {
  double lambda = 0.0;
  double epsilon = 0.01;
  double c0 = 1.0;
  double I1 = 0.0;
  double cap = 1e8;
  double rtol = 1e-10;
  double atol = 1e-14;
  long max_steps = 10'000'000;
  double t_max = 1e15;  ///< give up (censored) beyond this time

  void validate() const;
};

struct OdeLifespan {
  double T = 0.0;         ///< first time I reaches cap
  double T_cap10 = 0.0;   ///< first time I reaches 10 cap
  bool censored = false;  ///< no blow-up within the step or time budget
  long steps = 0;

  /// |T(cap) - T(10 cap)| / T; NaN when censored.
  double cap_sensitivity() const;
  bool cap_insensitive(double tol = 0.01) const { return !censored && cap_sensitivity() <= tol; }
};

/// Integrates I'' + I' = c0 (1+t)^{-lambda} N(I), I(0) = eps, I'(0) = I1, with
/// an adaptive Rosenbrock 4(3) pair until I exceeds 10 cap.
OdeLifespan integrate_blowup_ode(const OdeRunConfig& cfg, const PiecewisePowerN& N);

/// Closed-form solution of J' = eta M(J), J(0) = J0, with M = N.halved().
class AuxiliaryJ {
 public:
  AuxiliaryJ(double J0, double eta, const PiecewisePowerN& N);

  /// Mcal(p) = int_p^inf dq / M(q).
  double Mcal(double p) const;
  double Mcal_inverse(double y) const;

  double blowup_time() const { return Mcal(J0_) / eta_; }
  double operator()(double t) const { return Mcal_inverse(Mcal(J0_) - eta_ * t); }

 private:
  double J0_;
  double eta_;
  double a_;  ///< alpha/2
  double b_;  ///< beta/2
};

AuxiliaryJ solve_auxiliary_J(double J0, double eta, const PiecewisePowerN& N);

struct PropertyReport {
  int instances = 0;
  int passed = 0;
  double pass_fraction() const { return instances ? double(passed) / instances : 0.0; }
};

/// Samples positive coefficient families a(t), b(t), nonlinearities and
/// ordered data; integrates k with the full right side and h with 0.9 of it,
/// and checks k' > h' at every accepted step with t > 0.
PropertyReport check_comparison_lemma(int sample_count, std::uint64_t seed);

/// Samples a(t) > 0, c > 0, N and h(0) > 0 with h'(0) = 0; checks h'' > 0
/// at every accepted step including t = 0.
PropertyReport check_convexity_lemma(int sample_count, std::uint64_t seed);

/// min over a log grid (p, q) in [10^-decades, 10^decades]^2 of N(pq) / (N(p) N(q)).
double multiplicativity_min(const PiecewisePowerN& N, double decades, int points_per_decade);

enum class FitMode { power, exponential };

struct ScalingRecord {
  double epsilon = 0.0;
  double T = 0.0;
  bool censored = false;
};

struct ScalingFit {
  FitMode mode = FitMode::power;
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

struct FitOptions {
  FitMode mode = FitMode::power;
  double alpha = 1.0;      ///< exponential mode regresses log T on eps^{-alpha}
  int min_points = 4;
  double min_span = 10.0;  ///< required eps_max / eps_min
};

/// Least squares of log T on log eps (power) or on eps^{-alpha} (exponential).
/// Censored records are dropped; throws std::invalid_argument when fewer than
/// min_points remain or their eps range is too narrow.
ScalingFit fit_scaling(const std::vector<ScalingRecord>& records, const FitOptions& opt = {});

std::string to_string(FitMode m);
FitMode fit_mode_from_string(const std::string& s);

}  // namespace lifespan::odelab
