#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lifespan::odelab {

struct StepAdjustmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linearly implicit Rosenbrock 4(3) pair (Shampine's coefficients, as used by
/// Hairer-Wanner and odeint) with an error-controlled step and cubic dense
/// output. The system is f(x, t) -> dx/dt; the Jacobian callback fills
/// J = df/dx and dfdt = df/dt.
template <int N>
class Rosenbrock4 {
 public:
  using State = Eigen::Matrix<double, N, 1>;
  using Matrix = Eigen::Matrix<double, N, N>;

  Rosenbrock4(double atol, double rtol) : atol_(atol), rtol_(rtol) {}

  void initialize(const State& x, double t, double dt) {
    x_ = x;
    x_old_ = x;
    t_ = t;
    t_old_ = t;
    dt_ = dt;
    first_ = true;
    last_rejected_ = false;
  }

  /// Advances by one accepted step.
  template <typename F, typename J>
  void do_step(F&& f, J&& jac) {
    for (int tries = 0; tries < kMaxRejections; ++tries) {
      if (try_step(f, jac)) return;
    }
    throw StepAdjustmentError("Rosenbrock4: step size control failed");
  }

  /// Dense output on [previous_time, current_time].
  State calc_state(double t) const {
    const double s = (t - t_old_) / (t_ - t_old_), s1 = 1 - s;
    return x_old_ * s1 + s * (x_ + s1 * (cont3_ + s * cont4_));
  }

  const State& current_state() const { return x_; }
  double current_time() const { return t_; }
  double previous_time() const { return t_old_; }
  double next_step() const { return dt_; }

 private:
  static constexpr int kMaxRejections = 500;

  template <typename F, typename J>
  bool try_step(F& f, J& jac) {
    const double dt = dt_;
    State xnew, xerr;
    stages(f, jac, dt, xnew, xerr);

    double err = 0;
    for (int i = 0; i < x_.size(); ++i) {
      const double sk = atol_ + rtol_ * std::max(std::abs(x_[i]), std::abs(xnew[i]));
      err += xerr[i] * xerr[i] / (sk * sk);
    }
    err = std::sqrt(err / double(x_.size()));
    if (!std::isfinite(err)) err = 1e10;

    constexpr double safe = 0.9, fac1 = 5.0, fac2 = 1.0 / 6.0;
    double fac = std::clamp(std::pow(err, 0.25) / safe, fac2, fac1);
    double dt_new = dt / fac;
    if (err > 1) {
      dt_ = dt_new;
      last_rejected_ = true;
      return false;
    }
    // Gustafsson's predictive controller.
    if (!first_) {
      const double pred = std::clamp((dt_old_ / dt) * std::pow(err * err / err_old_, 0.25) / safe, fac2, fac1);
      fac = std::max(fac, pred);
      dt_new = dt / fac;
    }
    first_ = false;
    dt_old_ = dt;
    err_old_ = std::max(0.01, err);
    if (last_rejected_) dt_new = std::min(dt_new, dt);
    last_rejected_ = false;

    cont3_ = d21 * g_[0] + d22 * g_[1] + d23 * g_[2] + d24 * g_[3] + d25 * g_[4];
    cont4_ = d31 * g_[0] + d32 * g_[1] + d33 * g_[2] + d34 * g_[3] + d35 * g_[4];
    x_old_ = x_;
    t_old_ = t_;
    x_ = xnew;
    t_ += dt;
    dt_ = dt_new;
    return true;
  }

  template <typename F, typename J>
  void stages(F& f, J& jac, double dt, State& xout, State& xerr) {
    const State& x = x_;
    const double t = t_;
    Matrix A;
    State dfdt;
    if constexpr (N == Eigen::Dynamic) {
      A.resize(x.size(), x.size());
      dfdt.resize(x.size());
    }
    jac(x, t, A, dfdt);
    A = -A;
    A.diagonal().array() += 1.0 / (gamma * dt);
    const Eigen::PartialPivLU<Matrix> lu(A);

    const State fx = f(x, t);
    g_[0] = lu.solve(State(fx + dt * d1 * dfdt));
    g_[1] = lu.solve(State(f(State(x + a21 * g_[0]), t + c2 * dt) + dt * d2 * dfdt + c21 * g_[0] / dt));
    g_[2] = lu.solve(State(f(State(x + a31 * g_[0] + a32 * g_[1]), t + c3 * dt) + dt * d3 * dfdt +
                           (c31 * g_[0] + c32 * g_[1]) / dt));
    g_[3] = lu.solve(State(f(State(x + a41 * g_[0] + a42 * g_[1] + a43 * g_[2]), t + c4 * dt) + dt * d4 * dfdt +
                           (c41 * g_[0] + c42 * g_[1] + c43 * g_[2]) / dt));
    const State x5 = x + a51 * g_[0] + a52 * g_[1] + a53 * g_[2] + a54 * g_[3];
    g_[4] = lu.solve(State(f(x5, t + dt) + (c51 * g_[0] + c52 * g_[1] + c53 * g_[2] + c54 * g_[3]) / dt));
    const State x6 = x5 + g_[4];
    xerr = lu.solve(State(f(x6, t + dt) + (c61 * g_[0] + c62 * g_[1] + c63 * g_[2] + c64 * g_[3] + c65 * g_[4]) / dt));
    xout = x6 + xerr;
  }

  static constexpr double gamma = 0.25;
  // d4 is negative as in Hairer-Wanner's table; the positive value found in
  // some ports drops the order on non-autonomous systems.
  static constexpr double d1 = 0.25, d2 = -0.1043, d3 = 0.1035, d4 = -0.3620000000000023e-01;
  static constexpr double c2 = 0.386, c3 = 0.21, c4 = 0.63;
  static constexpr double c21 = -0.5668800000000000e+01, a21 = 0.1544000000000000e+01;
  static constexpr double c31 = -0.2430093356833875e+01, c32 = -0.2063599157091915e+00;
  static constexpr double a31 = 0.9466785280815826e+00, a32 = 0.2557011698983284e+00;
  static constexpr double c41 = -0.1073529058151375e+00, c42 = -0.9594562251023355e+01,
                          c43 = -0.2047028614809616e+02;
  static constexpr double a41 = 0.3314825187068521e+01, a42 = 0.2896124015972201e+01,
                          a43 = 0.9986419139977817e+00;
  static constexpr double c51 = 0.7496443313967647e+01, c52 = -0.1024680431464352e+02,
                          c53 = -0.3399990352819905e+02, c54 = 0.1170890893206160e+02;
  static constexpr double a51 = 0.1221224509226641e+01, a52 = 0.6019134481288629e+01,
                          a53 = 0.1253708332932087e+02, a54 = -0.6878860361058950e+00;
  static constexpr double c61 = 0.8083246795921522e+01, c62 = -0.7981132988064893e+01,
                          c63 = -0.3152159432874371e+02, c64 = 0.1631930543123136e+02,
                          c65 = -0.6058818238834054e+01;
  static constexpr double d21 = 0.1012623508344586e+02, d22 = -0.7487995877610167e+01,
                          d23 = -0.3480091861555747e+02, d24 = -0.7992771707568823e+01,
                          d25 = 0.1025137723295662e+01;
  static constexpr double d31 = -0.6762803392801253e+00, d32 = 0.6087714651680015e+01,
                          d33 = 0.1643084320892478e+02, d34 = 0.2476722511418386e+02,
                          d35 = -0.6594389125716872e+01;

  double atol_, rtol_;
  State x_, x_old_, cont3_, cont4_;
  State g_[5];
  double t_ = 0, t_old_ = 0, dt_ = 0, dt_old_ = 0, err_old_ = 0;
  bool first_ = true, last_rejected_ = false;
};

}  // namespace lifespan::odelab
