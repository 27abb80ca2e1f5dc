#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "regm/error.hpp"

namespace regm::detail {

struct NewtonState {
  Eigen::VectorXd theta;
  long iterations = 0;
  double z_norm = 0.0;
};

/// Damped Newton on any system exposing objective(), value() and jacobian().
template <class System>
NewtonState damped_newton(const System& sys, const Eigen::VectorXd& start, double tol, long max_iter) {
  NewtonState out;
  out.theta = start;
  Eigen::VectorXd z = sys.value(out.theta);
  out.z_norm = z.norm();
  for (long it = 0; it < max_iter && out.z_norm > tol; ++it) {
    const Eigen::MatrixXd H = sys.jacobian(out.theta);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    double shift = 0.0;
    while (llt.info() != Eigen::Success) {
      shift = shift == 0.0 ? 1e-8 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 10.0 * shift;
      if (shift > 1e12) throw Error("Newton solver: cannot regularise the Jacobian");
      Eigen::MatrixXd Hs = H;
      Hs.diagonal().array() += shift;
      llt.compute(Hs);
    }
    const Eigen::VectorXd step = -llt.solve(z);

    const double f0 = sys.objective(out.theta);
    const double slope = z.dot(step);
    Eigen::VectorXd trial = out.theta + step;
    Eigen::VectorXd z_trial = sys.value(trial);
    // Armijo on the objective. Near the root objective differences sink below
    // rounding, so there a drop in ||Z|| is accepted instead.
    const double f_trial = sys.objective(trial);
    const bool armijo = f_trial <= f0 + 1e-4 * slope;
    const bool rounding = f_trial - f0 <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
    if (!armijo && !(rounding && z_trial.norm() < out.z_norm)) {
      double t = 1.0;
      while (t > 1e-12) {
        t *= 0.5;
        trial = out.theta + t * step;
        if (sys.objective(trial) <= f0 + 1e-4 * t * slope) break;
      }
      z_trial = sys.value(trial);
    }
    out.theta = std::move(trial);
    z = std::move(z_trial);
    out.z_norm = z.norm();
    out.iterations = it + 1;
  }
  return out;
}

}  // namespace regm::detail
