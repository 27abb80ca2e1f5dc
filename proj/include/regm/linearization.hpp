#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "regm/model.hpp"
#include "regm/penalty.hpp"
#include "regm/solvers.hpp"

namespace regm {

/// psi(x_i, y_i) = -A^{-1} (phi(x_i, y_i, theta_ref) + grad J(theta_ref)),
/// A = Jacobian of Z_n at theta_ref. Row i of `psi` is observation i.
struct ICSample {
  Eigen::MatrixXd psi;
  Eigen::MatrixXd jacobian_used;
  Eigen::VectorXd theta_ref;
  PenaltySpec penalty_ref;
  double condition_number = 0.0;
};

/// Jacobians with a condition number above this are treated as singular.
inline constexpr double kSingularCondition = 1e12;

/// 2-norm condition number of a square matrix.
double condition_number(const Eigen::MatrixXd& A);

ICSample influence_curve(const Dataset& data, const Eigen::VectorXd& theta_ref, const PenaltySpec& penalty);

/// Influence curve of the adaptive Lasso at one point (x0, y0).
///
/// Component j is zero when the first or second stage set coordinate j to
/// zero. The remaining components are the IC of the Lasso restricted to that
/// active set, with per-coordinate level lambda / |init_j| smoothed at index m
/// and evaluated at the final fit (or at `theta_ref` when given).
Eigen::VectorXd adaptive_lasso_ic(const Dataset& data, const AdaptiveFit& fits, const Eigen::VectorXd& x0,
                                  double y0, double lambda, int m,
                                  const std::optional<Eigen::VectorXd>& theta_ref = std::nullopt);

/// adaptive_lasso_ic evaluated at every observation of `data` (n x p).
Eigen::MatrixXd adaptive_lasso_ic_rows(const Dataset& data, const AdaptiveFit& fits, double lambda, int m,
                                       const std::optional<Eigen::VectorXd>& theta_ref = std::nullopt);

/// Coordinates kept by both adaptive stages.
std::vector<Eigen::Index> adaptive_active_set(const AdaptiveFit& fits);

/// theta_tilde - Z_n'(theta_tilde)^{-1} Z_n(theta_tilde).
Eigen::VectorXd one_step(const Eigen::VectorXd& theta_tilde, const Dataset& data, const PenaltySpec& penalty);

struct ICCheckReport {
  Eigen::VectorXd mean_psi;
  Eigen::VectorXd mean_psi_se;
  Eigen::VectorXd second_moment_diag;
  bool l2_norms_finite = false;
  /// (1/n) sum psi_i Lambda_i^T, only for the Gaussian unpenalized case.
  std::optional<Eigen::MatrixXd> cond_iii_matrix;

  bool cond_i = false;
  std::vector<bool> cond_ii_components;
  bool cond_ii = false;
  std::optional<bool> cond_iii;
};

inline constexpr double kCondIISeMultiplier = 3.0;
inline constexpr double kCondIIITolerance = 0.1;

/// Moment checks on an IC sample: finiteness, |mean| <= 3 SE per component,
/// and E[psi Lambda^T] = I with the closed-form Gaussian score
/// Lambda = x (y - x^T theta0) / sigma^2 when `spec` is given and the penalty
/// is identically zero.
ICCheckReport ic_moment_checks(const ICSample& ics, const Dataset& data, const LinearModelSpec* spec = nullptr);

}  // namespace regm
