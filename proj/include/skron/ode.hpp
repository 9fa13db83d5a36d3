#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta integrator with FSAL and PI step
// control.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "skron/error.hpp"

namespace skron {

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double initial_step = 0.0;  // 0: pick automatically
  double max_step = std::numeric_limits<double>::infinity();
  /// Divergence guard on the first `guard_size` components (all when <= 0).
  double divergence_bound = 1e6;
  Eigen::Index guard_size = 0;
  long max_steps = 10'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

class DormandPrince {
 public:
  DormandPrince(OdeRhs rhs, OdeOptions opts = {}) : rhs_(std::move(rhs)), opts_(opts) {}

  const OdeStats& stats() const { return stats_; }

  /// Advance y from t0 to t1 (t1 > t0), landing exactly on t1. The step size
  /// is carried across calls so segmenting a run at sample instants costs
  /// little.
  Eigen::VectorXd integrate(double t0, Eigen::VectorXd y, double t1) {
    if (!(t1 > t0)) {
      if (t1 == t0) return y;
      throw DimensionError("DormandPrince: t1 must not precede t0");
    }
    double t = t0;
    Eigen::VectorXd k1 = eval(t, y);
    double h = h_ > 0 ? h_ : initial_step(t, y, k1, t1 - t0);
    double err_prev = 1e-4;

    while (t < t1) {
      if (stats_.accepted + stats_.rejected > opts_.max_steps)
        throw NumericalError("DormandPrince: step budget exhausted");
      bool last = false;
      double hs = std::min(h, opts_.max_step);
      if (t + hs >= t1 || (t1 - (t + hs)) < 1e-12 * std::abs(t1)) {
        hs = t1 - t;
        last = true;
      }
      if (hs <= 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        std::ostringstream os;
        os << "DormandPrince: step size collapsed to " << hs << " at t = " << t;
        throw NumericalError(os.str());
      }

      const Eigen::VectorXd k2 = eval(t + c2 * hs, y + hs * (a21 * k1));
      const Eigen::VectorXd k3 = eval(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      const Eigen::VectorXd k4 = eval(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::VectorXd k5 =
          eval(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::VectorXd k6 =
          eval(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      Eigen::VectorXd y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Eigen::VectorXd k7 = eval(t + hs, y5);
      const Eigen::VectorXd errv =
          hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc =
            opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y(i)), std::abs(y5(i)));
        err = std::max(err, std::abs(errv(i)) / sc);
      }
      if (!std::isfinite(err)) err = 1e10;

      if (err <= 1.0) {
        ++stats_.accepted;
        t = last ? t1 : t + hs;
        y = std::move(y5);
        k1 = k7;
        check_divergence(t, y);
        // PI controller (Hairer-Wanner, beta = 0.04)
        double fac = 0.9 * std::pow(err, -0.7 / 5.0) * std::pow(err_prev, 0.04);
        if (err == 0.0) fac = 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        err_prev = std::max(err, 1e-4);
        if (!last || hs >= h) h = hs * fac;
      } else {
        ++stats_.rejected;
        h = hs * std::max(0.2, 0.9 * std::pow(err, -0.2));
      }
    }
    h_ = h;
    return y;
  }

 private:
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& y) {
    ++stats_.evaluations;
    return rhs_(t, y);
  }

  void check_divergence(double t, const Eigen::VectorXd& y) const {
    const Eigen::Index g = opts_.guard_size > 0 ? std::min(opts_.guard_size, y.size()) : y.size();
    const double nrm = y.head(g).norm();
    if (!std::isfinite(nrm) || nrm > opts_.divergence_bound) {
      std::ostringstream os;
      os << "DormandPrince: state norm " << nrm << " exceeded divergence bound "
         << opts_.divergence_bound << " at t = " << t;
      throw NumericalError(os.str());
    }
  }

  double initial_step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                      double span) {
    if (opts_.initial_step > 0) return opts_.initial_step;
    const auto scaled_norm = [&](const Eigen::VectorXd& v) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y(i));
        s = std::max(s, std::abs(v(i)) / sc);
      }
      return s;
    };
    const double d0 = scaled_norm(y);
    const double d1 = scaled_norm(f0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Eigen::VectorXd f1 = eval(t + h0, y + h0 * f0);
    const double d2 = scaled_norm(f1 - f0) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100 * h0, h1, span});
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeRhs rhs_;
  OdeOptions opts_;
  OdeStats stats_;
  double h_ = 0.0;
};

}  // namespace skron
