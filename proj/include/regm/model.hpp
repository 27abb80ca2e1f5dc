#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "regm/penalty.hpp"

namespace regm {

/// Regression data (X, Y). When `intercept_included` is set the first column
/// of X is the constant one and carries penalty weight 0 by default.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd Y, bool intercept_included = false);

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& Y() const { return Y_; }
  bool intercept_included() const { return intercept_; }
  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index p() const { return X_.cols(); }

  /// Default per-coordinate penalty weights: ones, with 0 on the intercept.
  Eigen::VectorXd default_weights() const;

  /// Copy restricted to the given columns (in the given order).
  Dataset select_columns(const std::vector<Eigen::Index>& cols) const;

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd Y_;
  bool intercept_;
};

enum class NoiseKind { gaussian };

/// Linear model Y = X theta0 + eps with Gaussian design rows.
/// `design_covariance` covers the random regressors only, so its dimension is
/// p - 1 when an intercept is prepended and p otherwise.
struct LinearModelSpec {
  Eigen::VectorXd theta0;
  double sigma = 1.0;
  Eigen::MatrixXd design_covariance;
  bool intercept = false;
  NoiseKind noise = NoiseKind::gaussian;

  Eigen::Index p() const { return theta0.size(); }

  /// Throws regm::Error on dimension mismatch, sigma < 0 or a covariance
  /// that is not symmetric positive definite.
  void validate() const;

  /// E[x x^T] of one design row (p x p).
  Eigen::MatrixXd second_moment() const;

  static LinearModelSpec identity(Eigen::VectorXd theta0, double sigma, bool intercept = false);
  /// Toeplitz design Sigma_jk = rho^|j-k|.
  static LinearModelSpec toeplitz(Eigen::VectorXd theta0, double sigma, double rho,
                                  bool intercept = false);
};

/// Draws n observations. Pure function of (spec, n, seed).
Dataset generate_linear_data(const LinearModelSpec& spec, Eigen::Index n, std::uint64_t seed);

/// l1-type box { theta : sum_{j covered} |theta_j| <= bound }. Coordinates
/// with zero penalty weight (the intercept) are not covered.
struct ParameterBox {
  double bound = 0.0;
  Eigen::Index dimension = 0;
  std::vector<bool> covered;

  double covered_l1(const Eigen::VectorXd& theta) const;
  bool contains(const Eigen::VectorXd& theta, double slack = 0.0) const;
  bool interior(const Eigen::VectorXd& theta) const;
};

/// Mean squared response, the empirical risk of theta = 0.
double empirical_risk_at_zero(const Dataset& data);

/// Box that contains every minimizer of empirical risk + penalty, derived from
/// J(theta_hat) <= R_emp(0). Throws when the penalty has no coercive part.
ParameterBox parameter_box(const Dataset& data, const PenaltySpec& penalty);

}  // namespace regm
