#pragma once

#include <Eigen/Dense>

#include "regm/model.hpp"
#include "regm/penalty.hpp"

namespace regm {

/// Gradient of (y - x^T theta)^2 with respect to theta: 2 x (x^T theta - y).
///
/// Scores follow the gradient convention, so Z_n is the gradient of the
/// penalized empirical risk. Influence curves are unaffected by the sign
/// choice because the Jacobian flips with it.
Eigen::VectorXd squared_loss_score(const Eigen::VectorXd& x, double y, const Eigen::VectorXd& theta);

/// Z_n(theta) = (1/n) sum_i phi(x_i, y_i, theta) + grad J(theta) for squared loss.
class ZSystem {
 public:
  ZSystem(const Dataset& data, PenaltySpec penalty);

  const Dataset& data() const { return *data_; }
  const PenaltySpec& penalty() const { return penalty_; }

  /// (1/n) ||Y - X theta||^2 + J(theta).
  double objective(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd value(const Eigen::VectorXd& theta) const;
  /// (2/n) X^T X + Hess J(theta), symmetric p x p.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta) const;
  /// Per-observation scores phi_i(theta), one per row (n x p).
  Eigen::MatrixXd scores(const Eigen::VectorXd& theta) const;

 private:
  const Dataset* data_;
  PenaltySpec penalty_;
  Eigen::MatrixXd gram_;  // (2/n) X^T X
};

Eigen::VectorXd empirical_z(const ZSystem& zsys, const Eigen::VectorXd& theta);
Eigen::MatrixXd z_jacobian(const ZSystem& zsys, const Eigen::VectorXd& theta);

/// Gradient of the pairwise surrogate ((y_i - y_j) - (x_i - x_j)^T theta)^2.
Eigen::VectorXd ranking_score(const Eigen::VectorXd& xi, double yi, const Eigen::VectorXd& xj, double yj,
                              const Eigen::VectorXd& theta);

/// U-statistic Z-function over ordered pairs i != j plus grad J.
class RankingZSystem {
 public:
  RankingZSystem(const Dataset& data, PenaltySpec penalty);

  const Dataset& data() const { return *data_; }
  const PenaltySpec& penalty() const { return penalty_; }

  /// (1/(n(n-1))) sum_{i != j} L^r_ij(theta) + J(theta).
  double objective(const Eigen::VectorXd& theta) const;
  /// O(np) evaluation via centred sums.
  Eigen::VectorXd value(const Eigen::VectorXd& theta) const;
  /// O(n^2 p) evaluation by the double sum.
  Eigen::VectorXd value_direct(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta) const;

 private:
  const Dataset* data_;
  PenaltySpec penalty_;
  Eigen::MatrixXd gram_;  // Jacobian of the loss part
};

Eigen::VectorXd ranking_z(const RankingZSystem& rzsys, const Eigen::VectorXd& theta);

}  // namespace regm
