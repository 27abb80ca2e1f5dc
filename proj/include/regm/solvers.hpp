#pragma once

#include <vector>

#include <Eigen/Dense>

#include "regm/model.hpp"
#include "regm/penalty.hpp"
#include "regm/scores.hpp"

namespace regm {

struct SolverOptions {
  double tol = 1e-8;
  long max_sweeps = 100000;
};

struct FitResult {
  Eigen::VectorXd theta_hat;
  /// (1/n)||Y - X theta_hat||^2 + J(theta_hat), recomputed from scratch.
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<Eigen::Index> active_set;
  /// Objective after every sweep; non-increasing for coordinate descent.
  std::vector<double> objective_trace;
  /// Condition number of X^T X / n (infinite when singular).
  double gram_condition = 0.0;
  /// Set when the Gram matrix is numerically singular, e.g. duplicated columns.
  bool condition_warning = false;
};

/// argmin_b 1/2 (b - z)^2 + gamma |b| = sign(z) max(|z| - gamma, 0).
double soft_threshold(double z, double gamma);

/// (1/n)||Y - X theta||^2 + lambda * sum_j w_j |theta_j|.
double lasso_objective(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                       const Eigen::VectorXd& theta);

/// Cyclic coordinate descent for (1/n)||Y - X theta||^2 + lambda sum_j w_j |theta_j|.
/// Coordinates with infinite weight stay at zero. Coordinates are visited in
/// ascending order; a sweep whose largest update is <= tol ends the run.
FitResult weighted_lasso_cd(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                            const SolverOptions& opts = {}, const Eigen::VectorXd& warm_start = {});

/// Plain Lasso with the dataset's default weights (intercept unpenalized).
FitResult lasso_cd(const Dataset& data, double lambda, const SolverOptions& opts = {});

/// Naive elastic net (1/n)||Y - X theta||^2 + lambda1 ||theta||_1 + lambda2 ||theta||_2^2,
/// solved as a Lasso on augmented data.
FitResult elastic_net(const Dataset& data, double lambda1, double lambda2, const SolverOptions& opts = {});

struct AdaptiveFit {
  FitResult init;
  FitResult final;
  /// Stage-two weights 1/|init_j| (infinite where init_j == 0).
  Eigen::VectorXd weights;
};

/// Two-stage adaptive Lasso with exponent 1.
AdaptiveFit adaptive_lasso(const Dataset& data, double lambda, const SolverOptions& opts = {});

/// Closed form ((1/n) X^T X + lambda2 D)^{-1} (1/n) X^T Y with D the default weights.
Eigen::VectorXd ridge_init(const Dataset& data, double lambda2);

/// Largest violation of the Lasso optimality conditions at theta.
double kkt_max_violation(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& theta);

struct NewtonResult {
  Eigen::VectorXd theta;
  long iterations = 0;
  bool converged = false;
  double z_norm = 0.0;
};

/// Damped Newton on a smooth Z-system until ||Z_n|| <= tol. Backtracks on the
/// objective and shifts the Jacobian when it is not positive definite.
NewtonResult newton_solve(const ZSystem& zsys, const Eigen::VectorXd& start, double tol = 1e-10,
                          long max_iter = 500);
NewtonResult newton_solve(const RankingZSystem& zsys, const Eigen::VectorXd& start, double tol = 1e-10,
                          long max_iter = 500);

}  // namespace regm
