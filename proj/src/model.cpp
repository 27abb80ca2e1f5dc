#include "regm/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "regm/error.hpp"

namespace regm {

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd Y, bool intercept_included)
    : X_(std::move(X)), Y_(std::move(Y)), intercept_(intercept_included) {
  if (X_.rows() < 1 || X_.cols() < 1) throw Error("dataset needs n >= 1 and p >= 1");
  if (Y_.size() != X_.rows()) {
    throw Error("response length " + std::to_string(Y_.size()) + " does not match " +
                std::to_string(X_.rows()) + " rows of X");
  }
  if (!X_.allFinite()) throw Error("X contains non-finite entries");
  if (!Y_.allFinite()) throw Error("Y contains non-finite entries");
  if (intercept_ && !(X_.col(0).array() == 1.0).all()) {
    throw Error("intercept flagged but the first column of X is not all ones");
  }
}

Eigen::VectorXd Dataset::default_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(p());
  if (intercept_) w[0] = 0.0;
  return w;
}

Dataset Dataset::select_columns(const std::vector<Eigen::Index>& cols) const {
  Eigen::MatrixXd sub(n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X_.col(cols[k]);
  const bool keeps_intercept = intercept_ && !cols.empty() && cols.front() == 0;
  return Dataset(std::move(sub), Y_, keeps_intercept);
}

void LinearModelSpec::validate() const {
  const Eigen::Index q = p() - (intercept ? 1 : 0);
  if (p() < 1 || q < 0) throw Error("theta0 must have at least one coordinate");
  if (!theta0.allFinite()) throw Error("theta0 contains non-finite entries");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error("sigma must be finite and non-negative");
  if (design_covariance.rows() != q || design_covariance.cols() != q) {
    throw Error("design covariance must be " + std::to_string(q) + "x" + std::to_string(q));
  }
  if (q == 0) return;
  if (!design_covariance.isApprox(design_covariance.transpose(), 1e-12)) {
    throw Error("design covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(design_covariance);
  if (llt.info() != Eigen::Success) throw Error("design covariance is not positive definite");
}

Eigen::MatrixXd LinearModelSpec::second_moment() const {
  const Eigen::Index p_ = p();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p_, p_);
  if (intercept) {
    M(0, 0) = 1.0;
    M.bottomRightCorner(p_ - 1, p_ - 1) = design_covariance;
  } else {
    M = design_covariance;
  }
  return M;
}

LinearModelSpec LinearModelSpec::identity(Eigen::VectorXd theta0, double sigma, bool intercept) {
  return toeplitz(std::move(theta0), sigma, 0.0, intercept);
}

LinearModelSpec LinearModelSpec::toeplitz(Eigen::VectorXd theta0, double sigma, double rho, bool intercept) {
  LinearModelSpec spec;
  const Eigen::Index q = theta0.size() - (intercept ? 1 : 0);
  spec.theta0 = std::move(theta0);
  spec.sigma = sigma;
  spec.intercept = intercept;
  spec.design_covariance.resize(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      spec.design_covariance(i, j) = (i == j) ? 1.0 : std::pow(rho, static_cast<double>(std::abs(i - j)));
  return spec;
}

Dataset generate_linear_data(const LinearModelSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error("n must be >= 1");
  spec.validate();
  const Eigen::Index p = spec.p();
  const Eigen::Index offset = spec.intercept ? 1 : 0;
  const Eigen::Index q = p - offset;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd Z(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < q; ++j) Z(i, j) = normal(rng);

  Eigen::MatrixXd X(n, p);
  if (spec.intercept) X.col(0).setOnes();
  if (q > 0) {
    const Eigen::MatrixXd L = spec.design_covariance.llt().matrixL();
    X.rightCols(q) = Z * L.transpose();
  }

  Eigen::VectorXd Y = X * spec.theta0;
  if (spec.sigma > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) Y[i] += spec.sigma * normal(rng);
  }
  return Dataset(std::move(X), std::move(Y), spec.intercept);
}

double ParameterBox::covered_l1(const Eigen::VectorXd& theta) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (covered.empty() || covered[static_cast<std::size_t>(j)]) s += std::abs(theta[j]);
  return s;
}

bool ParameterBox::contains(const Eigen::VectorXd& theta, double slack) const {
  return covered_l1(theta) <= bound + slack;
}

bool ParameterBox::interior(const Eigen::VectorXd& theta) const { return covered_l1(theta) < bound; }

double empirical_risk_at_zero(const Dataset& data) {
  return data.Y().squaredNorm() / static_cast<double>(data.n());
}

ParameterBox parameter_box(const Dataset& data, const PenaltySpec& penalty) {
  const Eigen::Index p = data.p();
  Eigen::VectorXd w = penalty.weights.size() == 0 ? data.default_weights() : penalty.weights;
  penalty.validate(p);

  ParameterBox box;
  box.dimension = p;
  box.covered.assign(static_cast<std::size_t>(p), false);
  double w_min = std::numeric_limits<double>::infinity();
  double w_sum = 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (w[j] > 0.0 && std::isfinite(w[j])) {
      box.covered[static_cast<std::size_t>(j)] = true;
      w_min = std::min(w_min, w[j]);
      w_sum += w[j];
      ++k;
    }
  }

  const double risk0 = empirical_risk_at_zero(data);
  const double a = penalty.l1_coefficient();
  const double b = penalty.l2_coefficient();
  if (k == 0 || (a <= 0.0 && b <= 0.0)) throw Error("no coercive penalty; box undefined");

  if (a > 0.0) {
    // a * sum w_j |t_j| <= R(0), relaxed by the uniform gap |t| - t tanh(mt) <= 1/(e m).
    const double slack = penalty.smooth ? a * w_sum / (std::exp(1.0) * penalty.m) : 0.0;
    box.bound = (risk0 + slack) / (a * w_min);
  } else {
    // b * w_min * ||t||_2^2 <= R(0) and ||t||_1 <= sqrt(k) ||t||_2.
    box.bound = std::sqrt(static_cast<double>(k) * risk0 / (b * w_min));
  }
  return box;
}

}  // namespace regm
