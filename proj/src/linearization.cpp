#include "regm/linearization.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "regm/error.hpp"
#include "regm/scores.hpp"

namespace regm {

double condition_number(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s[s.size() - 1];
  return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

namespace {

Eigen::PartialPivLU<Eigen::MatrixXd> factor_checked(const Eigen::MatrixXd& A, double& cond) {
  cond = condition_number(A);
  if (!(cond < kSingularCondition)) {
    std::ostringstream msg;
    msg << "singular Z-Jacobian (condition number " << cond << ")";
    throw Error(msg.str());
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(A);
}

void require_differentiable(const PenaltySpec& penalty, const Eigen::VectorXd& theta) {
  if (!penalty.differentiable_at(theta)) {
    throw Error("penalty is not differentiable at the reference point; use smooth approximation");
  }
}

}  // namespace

ICSample influence_curve(const Dataset& data, const Eigen::VectorXd& theta_ref, const PenaltySpec& penalty) {
  if (theta_ref.size() != data.p()) throw Error("reference point has the wrong dimension");
  require_differentiable(penalty, theta_ref);
  const ZSystem zsys(data, penalty);

  ICSample out;
  out.theta_ref = theta_ref;
  out.penalty_ref = penalty;
  out.jacobian_used = zsys.jacobian(theta_ref);
  const auto lu = factor_checked(out.jacobian_used, out.condition_number);

  Eigen::MatrixXd rhs = zsys.scores(theta_ref).transpose();  // p x n
  rhs.colwise() += penalty.gradient(theta_ref);
  out.psi = -lu.solve(rhs).transpose();
  return out;
}

std::vector<Eigen::Index> adaptive_active_set(const AdaptiveFit& fits) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index j = 0; j < fits.final.theta_hat.size(); ++j)
    if (fits.init.theta_hat[j] != 0.0 && fits.final.theta_hat[j] != 0.0) s.push_back(j);
  return s;
}

namespace {

struct ActiveBlock {
  std::vector<Eigen::Index> active;
  Dataset sub;
  PenaltySpec penalty;
  Eigen::VectorXd theta;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::VectorXd grad;
};

ActiveBlock make_block(const Dataset& data, const AdaptiveFit& fits, double lambda, int m,
                       const std::optional<Eigen::VectorXd>& theta_ref, std::vector<Eigen::Index> active) {
  Dataset sub = data.select_columns(active);
  Eigen::VectorXd base(static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd init(static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd theta(static_cast<Eigen::Index>(active.size()));
  const Eigen::VectorXd w0 = data.default_weights();
  const Eigen::VectorXd& ref = theta_ref ? *theta_ref : fits.final.theta_hat;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto j = active[k];
    const auto kk = static_cast<Eigen::Index>(k);
    base[kk] = w0[j];
    init[kk] = fits.init.theta_hat[j];
    theta[kk] = ref[j];
  }
  PenaltySpec pen = smooth_approx(PenaltySpec::adaptive_l1(lambda, init, base), m);
  const ZSystem zsys(sub, pen);
  double cond = 0.0;
  auto lu = factor_checked(zsys.jacobian(theta), cond);
  Eigen::VectorXd grad = pen.gradient(theta);
  return ActiveBlock{std::move(active), std::move(sub), std::move(pen), std::move(theta), std::move(lu),
                     std::move(grad)};
}

}  // namespace

Eigen::VectorXd adaptive_lasso_ic(const Dataset& data, const AdaptiveFit& fits, const Eigen::VectorXd& x0,
                                  double y0, double lambda, int m,
                                  const std::optional<Eigen::VectorXd>& theta_ref) {
  const Eigen::Index p = data.p();
  if (x0.size() != p) throw Error("evaluation point has the wrong dimension");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  auto active = adaptive_active_set(fits);
  if (active.empty()) return out;
  const ActiveBlock block = make_block(data, fits, lambda, m, theta_ref, std::move(active));

  Eigen::VectorXd x_sub(block.theta.size());
  for (std::size_t k = 0; k < block.active.size(); ++k) x_sub[static_cast<Eigen::Index>(k)] = x0[block.active[k]];
  const Eigen::VectorXd rhs = squared_loss_score(x_sub, y0, block.theta) + block.grad;
  const Eigen::VectorXd psi = -block.lu.solve(rhs);
  for (std::size_t k = 0; k < block.active.size(); ++k) out[block.active[k]] = psi[static_cast<Eigen::Index>(k)];
  return out;
}

Eigen::MatrixXd adaptive_lasso_ic_rows(const Dataset& data, const AdaptiveFit& fits, double lambda, int m,
                                       const std::optional<Eigen::VectorXd>& theta_ref) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(data.n(), data.p());
  auto active = adaptive_active_set(fits);
  if (active.empty()) return out;
  const ActiveBlock block = make_block(data, fits, lambda, m, theta_ref, std::move(active));
  const ZSystem zsys(block.sub, block.penalty);
  Eigen::MatrixXd rhs = zsys.scores(block.theta).transpose();
  rhs.colwise() += block.grad;
  const Eigen::MatrixXd psi = -block.lu.solve(rhs).transpose();
  for (std::size_t k = 0; k < block.active.size(); ++k)
    out.col(block.active[k]) = psi.col(static_cast<Eigen::Index>(k));
  return out;
}

Eigen::VectorXd one_step(const Eigen::VectorXd& theta_tilde, const Dataset& data, const PenaltySpec& penalty) {
  if (theta_tilde.size() != data.p()) throw Error("starting point has the wrong dimension");
  require_differentiable(penalty, theta_tilde);
  const ZSystem zsys(data, penalty);
  double cond = 0.0;
  const auto lu = factor_checked(zsys.jacobian(theta_tilde), cond);
  return theta_tilde - lu.solve(zsys.value(theta_tilde));
}

ICCheckReport ic_moment_checks(const ICSample& ics, const Dataset& data, const LinearModelSpec* spec) {
  const Eigen::MatrixXd& psi = ics.psi;
  const Eigen::Index n = psi.rows();
  const Eigen::Index p = psi.cols();
  const double nd = static_cast<double>(n);

  ICCheckReport r;
  r.l2_norms_finite = psi.allFinite();
  r.mean_psi = psi.colwise().mean().transpose();
  r.second_moment_diag = psi.colwise().squaredNorm().transpose() / nd;
  r.mean_psi_se = Eigen::VectorXd::Zero(p);
  if (n > 1) {
    const Eigen::MatrixXd centred = psi.rowwise() - r.mean_psi.transpose();
    r.mean_psi_se = (centred.colwise().squaredNorm().transpose() / (nd - 1.0)).cwiseSqrt() / std::sqrt(nd);
  }
  r.cond_i = r.l2_norms_finite && r.second_moment_diag.allFinite();

  r.cond_ii_components.resize(static_cast<std::size_t>(p));
  r.cond_ii = r.cond_i;
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool ok = std::abs(r.mean_psi[j]) <= kCondIISeMultiplier * r.mean_psi_se[j];
    r.cond_ii_components[static_cast<std::size_t>(j)] = ok;
    r.cond_ii = r.cond_ii && ok;
  }

  const bool unpenalized = ics.penalty_ref.l1_coefficient() == 0.0 && ics.penalty_ref.l2_coefficient() == 0.0;
  if (spec != nullptr && spec->noise == NoiseKind::gaussian && unpenalized && spec->sigma > 0.0 &&
      spec->p() == p && data.n() == n) {
    const Eigen::VectorXd resid = data.Y() - data.X() * spec->theta0;
    const Eigen::MatrixXd Lambda = resid.asDiagonal() * data.X() / (spec->sigma * spec->sigma);
    Eigen::MatrixXd M = psi.transpose() * Lambda / nd;
    r.cond_iii = ((M - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <= kCondIIITolerance);
    r.cond_iii_matrix = std::move(M);
  }
  return r;
}

}  // namespace regm
