#include "regm/scores.hpp"

#include "regm/error.hpp"

namespace regm {

Eigen::VectorXd squared_loss_score(const Eigen::VectorXd& x, double y, const Eigen::VectorXd& theta) {
  return 2.0 * (x.dot(theta) - y) * x;
}

ZSystem::ZSystem(const Dataset& data, PenaltySpec penalty) : data_(&data), penalty_(std::move(penalty)) {
  penalty_.validate(data.p());
  const double n = static_cast<double>(data.n());
  gram_ = (2.0 / n) * (data.X().transpose() * data.X());
}

double ZSystem::objective(const Eigen::VectorXd& theta) const {
  const double n = static_cast<double>(data_->n());
  return (data_->Y() - data_->X() * theta).squaredNorm() / n + penalty_.value(theta);
}

Eigen::VectorXd ZSystem::value(const Eigen::VectorXd& theta) const {
  const double n = static_cast<double>(data_->n());
  const Eigen::VectorXd residual = data_->X() * theta - data_->Y();
  Eigen::VectorXd z = (2.0 / n) * (data_->X().transpose() * residual);
  z += penalty_.gradient(theta);
  return z;
}

Eigen::MatrixXd ZSystem::jacobian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd J = gram_;
  J.diagonal() += penalty_.hessian_diagonal(theta);
  return J;
}

Eigen::MatrixXd ZSystem::scores(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd residual = data_->X() * theta - data_->Y();
  return 2.0 * (residual.asDiagonal() * data_->X());
}

Eigen::VectorXd empirical_z(const ZSystem& zsys, const Eigen::VectorXd& theta) { return zsys.value(theta); }

Eigen::MatrixXd z_jacobian(const ZSystem& zsys, const Eigen::VectorXd& theta) { return zsys.jacobian(theta); }

Eigen::VectorXd ranking_score(const Eigen::VectorXd& xi, double yi, const Eigen::VectorXd& xj, double yj,
                              const Eigen::VectorXd& theta) {
  const Eigen::VectorXd d = xi - xj;
  const double r = (yi - yj) - d.dot(theta);
  return -2.0 * r * d;
}

RankingZSystem::RankingZSystem(const Dataset& data, PenaltySpec penalty)
    : data_(&data), penalty_(std::move(penalty)) {
  if (data.n() < 2) throw Error("ranking Z-function needs at least two observations");
  penalty_.validate(data.p());
  // sum_{i != j} 2 d_ij d_ij^T = 4 (n X^T X - s s^T) with s = X^T 1.
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd s = data.X().colwise().sum().transpose();
  gram_ = (4.0 / (n * (n - 1.0))) * (n * (data.X().transpose() * data.X()) - s * s.transpose());
}

double RankingZSystem::objective(const Eigen::VectorXd& theta) const {
  // sum_{i != j} (e_i - e_j)^2 = 2 n sum e^2 - 2 (sum e)^2 with e = Y - X theta.
  const double n = static_cast<double>(data_->n());
  const Eigen::VectorXd e = data_->Y() - data_->X() * theta;
  const double se = e.sum();
  return (2.0 * n * e.squaredNorm() - 2.0 * se * se) / (n * (n - 1.0)) + penalty_.value(theta);
}

Eigen::VectorXd RankingZSystem::value(const Eigen::VectorXd& theta) const {
  // sum_{i != j} (x_i - x_j)(e_i - e_j) = 2 n X^T e - 2 (X^T 1)(1^T e).
  const double n = static_cast<double>(data_->n());
  const Eigen::VectorXd e = data_->Y() - data_->X() * theta;
  const Eigen::VectorXd s = data_->X().colwise().sum().transpose();
  Eigen::VectorXd z = (-4.0 / (n * (n - 1.0))) * (n * (data_->X().transpose() * e) - e.sum() * s);
  z += penalty_.gradient(theta);
  return z;
}

Eigen::VectorXd RankingZSystem::value_direct(const Eigen::VectorXd& theta) const {
  const Eigen::Index n = data_->n();
  const auto& X = data_->X();
  const auto& Y = data_->Y();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(data_->p());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      acc += ranking_score(xi, Y[i], X.row(j).transpose(), Y[j], theta);
    }
  }
  const double nd = static_cast<double>(n);
  return acc / (nd * (nd - 1.0)) + penalty_.gradient(theta);
}

Eigen::MatrixXd RankingZSystem::jacobian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd J = gram_;
  J.diagonal() += penalty_.hessian_diagonal(theta);
  return J;
}

Eigen::VectorXd ranking_z(const RankingZSystem& rzsys, const Eigen::VectorXd& theta) { return rzsys.value(theta); }

}  // namespace regm
