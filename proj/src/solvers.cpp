#include "regm/solvers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "regm/detail/newton.hpp"
#include "regm/error.hpp"

namespace regm {

double soft_threshold(double z, double gamma) {
  if (gamma < 0.0) throw Error("soft-threshold level must be non-negative");
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

namespace {

double weighted_l1(double lambda, const Eigen::VectorXd& weights, const Eigen::VectorXd& theta) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (theta[j] == 0.0 || weights[j] == 0.0) continue;
    s += weights[j] * std::abs(theta[j]);
  }
  return lambda * s;
}

void fill_conditioning(const Dataset& data, FitResult& fit) {
  const Eigen::MatrixXd gram = data.X().transpose() * data.X() / static_cast<double>(data.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  fit.gram_condition = (lo > hi * 1e-15 && lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
  fit.condition_warning = !(fit.gram_condition < 1e12);
}

std::vector<Eigen::Index> support(const Eigen::VectorXd& theta) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (theta[j] != 0.0) out.push_back(j);
  return out;
}

}  // namespace

double lasso_objective(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                       const Eigen::VectorXd& theta) {
  const double n = static_cast<double>(data.n());
  return (data.Y() - data.X() * theta).squaredNorm() / n + weighted_l1(lambda, weights, theta);
}

FitResult weighted_lasso_cd(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                            const SolverOptions& opts, const Eigen::VectorXd& warm_start) {
  const Eigen::Index p = data.p();
  const double n = static_cast<double>(data.n());
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (weights.size() != p) throw Error("weight vector length must equal p");
  if (!(opts.tol > 0.0) || opts.max_sweeps < 1) throw Error("solver needs tol > 0 and max_sweeps >= 1");
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(weights[j] >= 0.0)) throw Error("penalty weights must be non-negative");

  const auto& X = data.X();
  Eigen::VectorXd theta = warm_start.size() == p ? warm_start : Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::isinf(weights[j])) theta[j] = 0.0;

  const Eigen::VectorXd col_scale = X.colwise().squaredNorm().transpose() / n;
  Eigen::VectorXd residual = data.Y() - X * theta;

  FitResult fit;
  fit.converged = false;
  for (long sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::isinf(weights[j])) continue;
      const double old = theta[j];
      double next = 0.0;
      if (col_scale[j] > 0.0) {
        const double rho = X.col(j).dot(residual) / n + col_scale[j] * old;
        next = soft_threshold(rho, 0.5 * lambda * weights[j]) / col_scale[j];
      }
      const double delta = next - old;
      if (delta != 0.0) {
        residual.noalias() -= delta * X.col(j);
        theta[j] = next;
        max_step = std::max(max_step, std::abs(delta));
      }
    }
    fit.iterations = sweep;
    fit.objective_trace.push_back(residual.squaredNorm() / n + weighted_l1(lambda, weights, theta));
    if (max_step <= opts.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.theta_hat = std::move(theta);
  fit.objective = lasso_objective(data, lambda, weights, fit.theta_hat);
  fit.active_set = support(fit.theta_hat);
  fill_conditioning(data, fit);
  return fit;
}

FitResult lasso_cd(const Dataset& data, double lambda, const SolverOptions& opts) {
  return weighted_lasso_cd(data, lambda, data.default_weights(), opts);
}

FitResult elastic_net(const Dataset& data, double lambda1, double lambda2, const SolverOptions& opts) {
  if (!(lambda2 >= 0.0)) throw Error("lambda2 must be non-negative");
  if (lambda2 == 0.0) return lasso_cd(data, lambda1, opts);

  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd w = data.default_weights();

  // X* = c [X ; sqrt(n lambda2 w) I], y* = [Y ; 0], gamma = lambda1 c, with
  // c = 1/sqrt(1 + lambda2). The factor n inside the root matches the 1/n loss
  // normalisation, and the extra sqrt((n+p)/n) keeps (1/(n+p))||.||^2 on the
  // stacked rows equal to (1/n)||.||^2. Then theta_EN = c b_lasso.
  const double c = 1.0 / std::sqrt(1.0 + lambda2);
  const double s = std::sqrt(static_cast<double>(n + p) / nd);
  Eigen::MatrixXd Xa = Eigen::MatrixXd::Zero(n + p, p);
  Eigen::VectorXd Ya = Eigen::VectorXd::Zero(n + p);
  Xa.topRows(n) = (c * s) * data.X();
  for (Eigen::Index j = 0; j < p; ++j) Xa(n + j, j) = c * s * std::sqrt(nd * lambda2 * w[j]);
  Ya.head(n) = s * data.Y();
  const Dataset augmented(std::move(Xa), std::move(Ya), false);

  FitResult inner = weighted_lasso_cd(augmented, lambda1 * c, w, opts);

  FitResult fit;
  fit.theta_hat = c * inner.theta_hat;
  fit.iterations = inner.iterations;
  fit.converged = inner.converged;
  const PenaltySpec pen = PenaltySpec::elastic_net(lambda1, lambda2, w);
  for (double v : inner.objective_trace) fit.objective_trace.push_back(v);
  fit.objective = (data.Y() - data.X() * fit.theta_hat).squaredNorm() / nd + pen.value(fit.theta_hat);
  fit.active_set = support(fit.theta_hat);
  fill_conditioning(data, fit);
  return fit;
}

AdaptiveFit adaptive_lasso(const Dataset& data, double lambda, const SolverOptions& opts) {
  AdaptiveFit out;
  out.init = lasso_cd(data, lambda, opts);
  out.weights = PenaltySpec::adaptive_l1(lambda, out.init.theta_hat, data.default_weights()).weights;
  out.final = weighted_lasso_cd(data, lambda, out.weights, opts);
  return out;
}

Eigen::VectorXd ridge_init(const Dataset& data, double lambda2) {
  if (!(lambda2 >= 0.0)) throw Error("lambda2 must be non-negative");
  const double n = static_cast<double>(data.n());
  Eigen::MatrixXd A = data.X().transpose() * data.X() / n;
  A.diagonal() += lambda2 * data.default_weights();
  const Eigen::VectorXd rhs = data.X().transpose() * data.Y() / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi))) {
    std::ostringstream msg;
    msg << "singular ridge system: smallest eigenvalue " << lo;
    throw Error(msg.str());
  }
  return A.llt().solve(rhs);
}

double kkt_max_violation(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& theta) {
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd grad = (2.0 / n) * (data.X().transpose() * (data.X() * theta - data.Y()));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (std::isinf(weights[j])) continue;
    const double level = lambda * weights[j];
    const double v = theta[j] != 0.0 ? std::abs(grad[j] + level * (theta[j] > 0.0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad[j]) - level);
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

template <class System>
NewtonResult run_newton(const System& sys, const Eigen::VectorXd& start, double tol, long max_iter) {
  auto state = detail::damped_newton(sys, start, tol, max_iter);
  NewtonResult out;
  out.theta = std::move(state.theta);
  out.iterations = state.iterations;
  out.z_norm = state.z_norm;
  out.converged = out.z_norm <= tol;
  return out;
}

}  // namespace

NewtonResult newton_solve(const ZSystem& zsys, const Eigen::VectorXd& start, double tol, long max_iter) {
  return run_newton(zsys, start, tol, max_iter);
}

NewtonResult newton_solve(const RankingZSystem& zsys, const Eigen::VectorXd& start, double tol, long max_iter) {
  return run_newton(zsys, start, tol, max_iter);
}

}  // namespace regm
