#include "regm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "regm/csv.hpp"
#include "regm/detail/newton.hpp"
#include "regm/error.hpp"
#include "regm/linearization.hpp"
#include "regm/scores.hpp"

namespace regm {

double lambda_schedule(Eigen::Index n, Eigen::Index p, double c) {
  if (p < 2) throw Error("lambda schedule needs p >= 2");
  if (n < 2) throw Error("lambda schedule needs n >= 2");
  if (!(c > 0.0)) throw Error("lambda schedule constant must be positive");
  return c * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t n, std::uint64_t rep) {
  return splitmix64(master ^ splitmix64((n << 32) | (rep & 0xffffffffULL)));
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::exact: return "exact";
    case Estimator::ols: return "ols";
    case Estimator::ridge: return "ridge";
    case Estimator::lasso: return "lasso";
    case Estimator::elastic_net: return "en";
    case Estimator::adaptive: return "adaptive";
    case Estimator::smooth: return "smooth";
    case Estimator::onestep: return "onestep";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  for (auto e : {Estimator::exact, Estimator::ols, Estimator::ridge, Estimator::lasso, Estimator::elastic_net,
                 Estimator::adaptive, Estimator::smooth, Estimator::onestep}) {
    if (name == to_string(e)) return e;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(LambdaRule r) { return r == LambdaRule::fixed ? "fixed" : "schedule"; }
std::string_view to_string(MSchedule r) { return r == MSchedule::fixed ? "fixed" : "sqrt"; }
std::string_view to_string(PsiReference r) { return r == PsiReference::truth ? "truth" : "fitted"; }
std::string_view to_string(OneStepInit r) {
  switch (r) {
    case OneStepInit::ridge: return "ridge";
    case OneStepInit::truth: return "truth";
    case OneStepInit::full: return "full";
  }
  return "?";
}

double MCConfig::lambda_at(Eigen::Index n) const {
  return lambda_rule == LambdaRule::fixed ? lambda : lambda_schedule(n, spec.p(), lambda_c);
}

int MCConfig::m_at(Eigen::Index n) const {
  if (m_schedule == MSchedule::fixed) return m;
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
}

bool MCReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second; });
}

namespace {

Eigen::VectorXd spec_weights(const LinearModelSpec& spec) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(spec.p());
  if (spec.intercept) w[0] = 0.0;
  return w;
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(workers, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

// Population objective (theta - theta0)^T M (theta - theta0) + J(theta).
struct PopulationSystem {
  const Eigen::MatrixXd& M;
  const Eigen::VectorXd& theta0;
  const PenaltySpec& penalty;

  double objective(const Eigen::VectorXd& t) const {
    const Eigen::VectorXd d = t - theta0;
    return d.dot(M * d) + penalty.value(t);
  }
  Eigen::VectorXd value(const Eigen::VectorXd& t) const { return 2.0 * M * (t - theta0) + penalty.gradient(t); }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& t) const {
    Eigen::MatrixXd J = 2.0 * M;
    J.diagonal() += penalty.hessian_diagonal(t);
    return J;
  }
};

void validate_config(const MCConfig& c, bool needs_slope) {
  c.spec.validate();
  if (c.n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 2) throw ConfigError("n_grid entries must be >= 2");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("n_grid must be strictly ascending");
  }
  if (c.reps < 2) throw ConfigError("reps must be >= 2");
  if (needs_slope) {
    if (c.n_grid.size() < 4) throw ConfigError("slope experiments need at least 4 grid points");
    if (c.reps < 100) throw ConfigError("slope experiments need reps >= 100");
  }
  if (c.m < 1) throw ConfigError("m must be >= 1");
  if (!(c.lambda >= 0.0) || !(c.lambda2 >= 0.0)) throw ConfigError("lambda and lambda2 must be non-negative");
  if (c.lambda_rule == LambdaRule::schedule && c.spec.p() < 2) {
    throw ConfigError("lambda schedule needs p >= 2");
  }
}

}  // namespace

PenaltySpec linearization_penalty(const MCConfig& config, Eigen::Index n) {
  const Eigen::VectorXd w = spec_weights(config.spec);
  const double lam = config.lambda_at(n);
  const int m = config.m_at(n);
  switch (config.estimator) {
    case Estimator::exact:
    case Estimator::ols: return PenaltySpec::ridge(0.0, w);
    case Estimator::ridge: return PenaltySpec::ridge(config.lambda2, w);
    case Estimator::lasso:
    case Estimator::smooth: return smooth_approx(PenaltySpec::l1(lam, w), m);
    case Estimator::onestep:
      if (config.onestep_penalty == PenaltyKind::ridge) return PenaltySpec::ridge(config.lambda2, w);
      return smooth_approx(PenaltySpec::l1(lam, w), m);
    case Estimator::elastic_net: return smooth_approx(PenaltySpec::elastic_net(lam, config.lambda2, w), m);
    case Estimator::adaptive: break;
  }
  throw ConfigError("the adaptive estimator has a data-dependent penalty");
}

Sandwich population_sandwich(const LinearModelSpec& spec, const PenaltySpec& penalty) {
  spec.validate();
  const Eigen::MatrixXd M = spec.second_moment();
  const Eigen::Index p = spec.p();
  const PopulationSystem sys{M, spec.theta0, penalty};
  auto state = detail::damped_newton(sys, spec.theta0, 1e-13, 500);

  Sandwich out;
  out.target = state.theta;
  const Eigen::VectorXd delta = spec.theta0 - out.target;

  // K = E[x x^T (x^T delta)^2] for x = (1, z) or x = z with z ~ N(0, Sigma).
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p, p);
  const Eigen::MatrixXd& S = spec.design_covariance;
  if (spec.intercept) {
    const double a = delta[0];
    const Eigen::VectorXd dz = delta.tail(p - 1);
    const Eigen::VectorXd v = S * dz;
    const double s2 = dz.dot(v);
    K(0, 0) = a * a + s2;
    K.block(0, 1, 1, p - 1) = 2.0 * a * v.transpose();
    K.block(1, 0, p - 1, 1) = 2.0 * a * v;
    K.bottomRightCorner(p - 1, p - 1) = (a * a + s2) * S + 2.0 * v * v.transpose();
  } else {
    const Eigen::VectorXd v = S * delta;
    K = delta.dot(v) * S + 2.0 * v * v.transpose();
  }
  const Eigen::VectorXd Md = M * delta;
  out.C = 4.0 * (spec.sigma * spec.sigma * M + K - Md * Md.transpose());

  Eigen::MatrixXd J = 2.0 * M;
  J.diagonal() += penalty.hessian_diagonal(out.target);
  out.A = J.inverse();
  out.ACA = out.A * out.C * out.A.transpose();
  return out;
}

namespace {

// psi_i on coordinates S: -(2 M_SS + Hess J_S(theta0_S))^{-1} phi_S(x_i, y_i, theta0),
// centred at the true parameter so that E[psi] = 0.
Eigen::MatrixXd truth_psi(const Dataset& data, const LinearModelSpec& spec, const PenaltySpec& penalty,
                          const std::vector<Eigen::Index>& S) {
  const Eigen::Index p = data.p();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(data.n(), p);
  if (S.empty()) return psi;
  const auto k = static_cast<Eigen::Index>(S.size());
  const Eigen::MatrixXd M = spec.second_moment();
  const PenaltySpec pen = penalty.restrict(S);
  Eigen::MatrixXd A(k, k);
  Eigen::VectorXd t0(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    t0[a] = spec.theta0[S[static_cast<std::size_t>(a)]];
    for (Eigen::Index b = 0; b < k; ++b) A(a, b) = 2.0 * M(S[static_cast<std::size_t>(a)], S[static_cast<std::size_t>(b)]);
  }
  A.diagonal() += pen.hessian_diagonal(t0);

  const Eigen::VectorXd resid = data.X() * spec.theta0 - data.Y();
  Eigen::MatrixXd phi(k, data.n());
  for (Eigen::Index a = 0; a < k; ++a)
    phi.row(a) = 2.0 * (data.X().col(S[static_cast<std::size_t>(a)]).array() * resid.array()).matrix().transpose();
  const Eigen::MatrixXd sol = -A.partialPivLu().solve(phi);
  for (Eigen::Index a = 0; a < k; ++a) psi.col(S[static_cast<std::size_t>(a)]) = sol.row(a).transpose();
  return psi;
}

std::vector<Eigen::Index> all_coords(Eigen::Index p) {
  std::vector<Eigen::Index> s(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) s[static_cast<std::size_t>(j)] = j;
  return s;
}

struct RepOutcome {
  Eigen::VectorXd theta;
  Eigen::MatrixXd psi;
  bool converged = true;
};

RepOutcome estimate(const MCConfig& c, const Dataset& data, Eigen::Index n) {
  const double lam = c.lambda_at(n);
  const int m = c.m_at(n);
  const auto& theta0 = c.spec.theta0;
  const Eigen::Index p = data.p();
  RepOutcome out;

  if (c.estimator == Estimator::adaptive) {
    const AdaptiveFit fits = adaptive_lasso(data, lam, c.solver);
    out.theta = fits.final.theta_hat;
    out.converged = fits.init.converged && fits.final.converged;
    if (c.psi_at == PsiReference::fitted) {
      out.psi = adaptive_lasso_ic_rows(data, fits, lam, m);
    } else {
      const auto S = adaptive_active_set(fits);
      const PenaltySpec pen =
          smooth_approx(PenaltySpec::adaptive_l1(lam, fits.init.theta_hat, spec_weights(c.spec)), m);
      out.psi = truth_psi(data, c.spec, pen, S);
    }
    return out;
  }

  const PenaltySpec pen = linearization_penalty(c, n);
  const Eigen::MatrixXd psi_truth = truth_psi(data, c.spec, pen, all_coords(p));
  switch (c.estimator) {
    case Estimator::exact: out.theta = theta0 + psi_truth.colwise().mean().transpose(); break;
    case Estimator::ols: out.theta = ridge_init(data, 0.0); break;
    case Estimator::ridge: out.theta = ridge_init(data, c.lambda2); break;
    case Estimator::lasso: {
      auto fit = lasso_cd(data, lam, c.solver);
      out.theta = fit.theta_hat;
      out.converged = fit.converged;
      break;
    }
    case Estimator::elastic_net: {
      auto fit = elastic_net(data, lam, c.lambda2, c.solver);
      out.theta = fit.theta_hat;
      out.converged = fit.converged;
      break;
    }
    case Estimator::smooth: {
      const ZSystem zsys(data, pen);
      auto res = newton_solve(zsys, ridge_init(data, lam));
      out.theta = res.theta;
      out.converged = res.converged;
      break;
    }
    case Estimator::onestep: out.theta = one_step(ridge_init(data, lam), data, pen); break;
    case Estimator::adaptive: break;
  }
  out.psi = c.psi_at == PsiReference::fitted ? influence_curve(data, out.theta, pen).psi : psi_truth;
  return out;
}

RepRecord run_remainder_rep(const MCConfig& c, Eigen::Index n, long r) {
  RepRecord rec;
  rec.n = n;
  rec.rep = r;
  rec.seed = mix_seed(c.master_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
  rec.m = c.m_at(n);
  try {
    rec.lambda = c.lambda_at(n);
    const Dataset data = generate_linear_data(c.spec, n, rec.seed);
    const RepOutcome est = estimate(c, data, n);
    const Eigen::VectorXd err = est.theta - c.spec.theta0;
    const Eigen::VectorXd rem = err - est.psi.colwise().mean().transpose();
    rec.remainder_norm = rem.norm();
    rec.theta_err_norm = err.norm();
    rec.scaled_error = std::sqrt(static_cast<double>(n)) * err;
    rec.fit_converged = est.converged;
    rec.failed = !est.converged || !std::isfinite(rec.remainder_norm);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.remainder_norm = std::numeric_limits<double>::quiet_NaN();
    rec.theta_err_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

RepRecord run_onestep_rep(const MCConfig& c, Eigen::Index n, long r) {
  RepRecord rec;
  rec.n = n;
  rec.rep = r;
  rec.seed = mix_seed(c.master_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
  rec.m = c.m_at(n);
  try {
    rec.lambda = c.lambda_at(n);
    const Dataset data = generate_linear_data(c.spec, n, rec.seed);
    const PenaltySpec pen = linearization_penalty(c, n);
    const ZSystem zsys(data, pen);
    // sqrt(n)-consistent start: ridge at the scheduled level, whatever the penalty rule.
    const Eigen::VectorXd ridge_start = ridge_init(data, lambda_schedule(n, data.p(), c.lambda_c));
    const NewtonResult full = newton_solve(zsys, ridge_start, kExactGap);
    Eigen::VectorXd start;
    switch (c.onestep_init) {
      case OneStepInit::ridge: start = ridge_start; break;
      case OneStepInit::truth: start = c.spec.theta0; break;
      case OneStepInit::full: start = full.theta; break;
    }
    const Eigen::VectorXd os = one_step(start, data, pen);
    rec.remainder_norm = (os - full.theta).norm();
    rec.theta_err_norm = (os - c.spec.theta0).norm();
    rec.scaled_error = std::sqrt(static_cast<double>(n)) * (os - c.spec.theta0);
    rec.fit_converged = full.converged;
    rec.interior = parameter_box(data, pen).interior(os);
    rec.failed = !full.converged || !std::isfinite(rec.remainder_norm);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.remainder_norm = std::numeric_limits<double>::quiet_NaN();
    rec.theta_err_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

template <class RepFn>
std::vector<RepRecord> run_grid(const MCConfig& c, const std::vector<Eigen::Index>& grid, RepFn&& fn) {
  const auto reps = static_cast<std::size_t>(c.reps);
  std::vector<RepRecord> rows(grid.size() * reps);
  parallel_for(rows.size(), c.threads, [&](std::size_t idx) {
    rows[idx] = fn(c, grid[idx / reps], static_cast<long>(idx % reps));
  });
  return rows;
}

void enforce_failure_budget(const std::vector<RepRecord>& rows) {
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const RepRecord& r) { return r.failed; });
  if (static_cast<double>(failed) > kFailureBudget * static_cast<double>(rows.size())) {
    std::string first;
    for (const auto& r : rows)
      if (r.failed && !r.error.empty()) {
        first = "; first error: " + r.error;
        break;
      }
    throw Error("experiment failed: " + std::to_string(failed) + " of " + std::to_string(rows.size()) +
                " replications failed" + first);
  }
}

std::vector<SizeSummary> summarize(const std::vector<RepRecord>& rows) {
  std::vector<SizeSummary> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().n != r.n) out.push_back(SizeSummary{r.n, 0, 0, 0.0, 0.0});
    auto& s = out.back();
    if (r.failed) {
      ++s.failures;
    } else {
      ++s.ok;
      s.mean += r.remainder_norm;
    }
  }
  for (auto& s : out) {
    if (s.ok == 0) continue;
    s.mean /= static_cast<double>(s.ok);
    double ss = 0.0;
    for (const auto& r : rows)
      if (r.n == s.n && !r.failed) ss += (r.remainder_norm - s.mean) * (r.remainder_norm - s.mean);
    s.se = s.ok > 1 ? std::sqrt(ss / static_cast<double>(s.ok - 1) / static_cast<double>(s.ok)) : 0.0;
  }
  return out;
}

SlopeFit fit_slope(const std::vector<SizeSummary>& per_n, double zero_threshold) {
  SlopeFit fit;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> xs, ys;
  bool all_zero = true;
  for (const auto& s : per_n) {
    if (s.ok == 0) continue;
    if (s.mean > zero_threshold) all_zero = false;
    if (s.mean > 0.0) {
      xs.push_back(std::log(static_cast<double>(s.n)));
      ys.push_back(std::log(s.mean));
    }
  }
  fit.points = static_cast<int>(xs.size());
  if (all_zero) {
    fit.zero = true;
    fit.slope = fit.intercept = fit.se = fit.ci_half_width = nan;
    return fit;
  }
  if (xs.size() < 3) {
    fit.slope = fit.intercept = fit.se = fit.ci_half_width = nan;
    return fit;
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += e * e;
  }
  fit.se = std::sqrt(rss / (k - 2.0) / sxx);
  const boost::math::students_t t(k - 2.0);
  fit.ci_half_width = boost::math::quantile(t, 0.975) * fit.se;
  return fit;
}

CovarianceComparison compare_covariance(const MCConfig& c, const std::vector<RepRecord>& rows) {
  const Eigen::Index p = c.spec.p();
  std::vector<const RepRecord*> ok;
  for (const auto& r : rows)
    if (!r.failed) ok.push_back(&r);
  if (ok.size() < 2) throw Error("normality experiment: fewer than two successful replications");
  Eigen::MatrixXd E(static_cast<Eigen::Index>(ok.size()), p);
  for (std::size_t i = 0; i < ok.size(); ++i) E.row(static_cast<Eigen::Index>(i)) = ok[i]->scaled_error.transpose();
  const Eigen::MatrixXd centred = E.rowwise() - E.colwise().mean();

  CovarianceComparison cmp;
  cmp.empirical = centred.transpose() * centred / static_cast<double>(ok.size() - 1);
  const Sandwich sw = population_sandwich(c.spec, linearization_penalty(c, c.n_grid.back()));
  cmp.sandwich = sw.ACA;
  cmp.population_target = sw.target;
  const double denom = cmp.sandwich.norm();
  const double diff = (cmp.empirical - cmp.sandwich).norm();
  // A degenerate (zero) sandwich falls back to the absolute error.
  cmp.frobenius_rel_error = denom > 0.0 ? diff / denom : diff;
  return cmp;
}

void derive(MCReport& rep) {
  rep.per_n = summarize(rep.rows);
  rep.verdicts.clear();
  if (rep.experiment == "mc-linearity") {
    const double zero = kZeroRemainder * (1.0 + rep.config.spec.theta0.norm());
    rep.slope = fit_slope(rep.per_n, zero);
    rep.verdicts["linearity"] = rep.slope->zero || (rep.slope->slope + rep.slope->ci_half_width < kSlopeTarget);
  } else if (rep.experiment == "mc-normality") {
    rep.covariance = compare_covariance(rep.config, rep.rows);
    rep.verdicts["normality"] = rep.covariance->frobenius_rel_error <= rep.covariance->threshold;
  } else if (rep.experiment == "onestep") {
    rep.slope = fit_slope(rep.per_n, kExactGap);
    rep.verdicts["rate"] = rep.slope->zero || rep.slope->slope <= kSlopeTarget;
    rep.verdicts["interior"] =
        std::all_of(rep.rows.begin(), rep.rows.end(), [](const RepRecord& r) { return r.failed || r.interior; });
  }
}

}  // namespace

MCReport remainder_scaling_experiment(const MCConfig& config) {
  validate_config(config, true);
  MCReport rep;
  rep.experiment = "mc-linearity";
  rep.config = config;
  rep.rows = run_grid(config, config.n_grid, run_remainder_rep);
  enforce_failure_budget(rep.rows);
  derive(rep);
  return rep;
}

MCReport normality_experiment(const MCConfig& config) {
  validate_config(config, false);
  if (config.estimator == Estimator::adaptive) {
    throw ConfigError("normality experiment does not support the adaptive estimator");
  }
  MCReport rep;
  rep.experiment = "mc-normality";
  rep.config = config;
  rep.rows = run_grid(config, {config.n_grid.back()}, run_remainder_rep);
  enforce_failure_budget(rep.rows);
  derive(rep);
  return rep;
}

MCReport onestep_experiment(const MCConfig& config) {
  validate_config(config, true);
  if (config.estimator != Estimator::onestep) throw ConfigError("one-step experiment needs estimator = onestep");
  if (config.spec.p() < 2) throw ConfigError("one-step experiment needs p >= 2 for the scheduled ridge start");
  MCReport rep;
  rep.experiment = "onestep";
  rep.config = config;
  rep.rows = run_grid(config, config.n_grid, run_onestep_rep);
  enforce_failure_budget(rep.rows);
  derive(rep);
  return rep;
}

MCReport rederive(const MCReport& report) {
  MCReport out;
  out.experiment = report.experiment;
  out.config = report.config;
  out.rows = report.rows;
  derive(out);
  return out;
}

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool audit(const MCReport& report) {
  const MCReport again = rederive(report);
  if (again.verdicts != report.verdicts) return false;
  if (again.per_n.size() != report.per_n.size()) return false;
  for (std::size_t i = 0; i < again.per_n.size(); ++i) {
    const auto& a = again.per_n[i];
    const auto& b = report.per_n[i];
    if (a.n != b.n || a.ok != b.ok || a.failures != b.failures || !same(a.mean, b.mean) || !same(a.se, b.se))
      return false;
  }
  if (again.slope.has_value() != report.slope.has_value()) return false;
  if (again.slope) {
    const auto& a = *again.slope;
    const auto& b = *report.slope;
    if (!same(a.slope, b.slope) || !same(a.ci_half_width, b.ci_half_width) || a.zero != b.zero) return false;
  }
  if (again.covariance.has_value() != report.covariance.has_value()) return false;
  if (again.covariance) {
    if (!same(again.covariance->frobenius_rel_error, report.covariance->frobenius_rel_error)) return false;
  }
  return true;
}

ICConvergenceTable ic_convergence_experiment(const Dataset& data, double lambda, const std::vector<int>& m_grid) {
  if (m_grid.size() < 2) throw Error("m_grid needs at least two entries");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (m_grid[i] < 1) throw Error("m_grid entries must be >= 1");
    if (i > 0 && m_grid[i] < m_grid[i - 1]) throw Error("m_grid must be ascending");
  }
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");

  const Eigen::VectorXd w = data.default_weights();
  const Eigen::VectorXd start = lasso_cd(data, lambda).theta_hat;
  auto ic_at = [&](int m) {
    const PenaltySpec pen = smooth_approx(PenaltySpec::l1(lambda, w), m);
    const ZSystem zsys(data, pen);
    const NewtonResult sol = newton_solve(zsys, start);
    if (!sol.converged) throw Error("smoothed Z-equation did not converge at m = " + std::to_string(m));
    return influence_curve(data, sol.theta, pen).psi;
  };

  ICConvergenceTable table;
  table.lambda = lambda;
  const Eigen::MatrixXd reference = ic_at(m_grid.back());
  for (int m : m_grid) {
    ICConvergenceRow row;
    row.m = m;
    try {
      const Eigen::MatrixXd psi = ic_at(m);
      row.sup_diff = (psi - reference).rowwise().norm().maxCoeff();
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.sup_diff = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(row);
  }
  table.monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& row : table.rows) {
    if (row.failed) continue;
    if (row.sup_diff > prev + kMonotoneSlack) table.monotone = false;
    prev = row.sup_diff;
  }
  return table;
}

void write_runs_csv(const MCReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "n,rep,seed,estimator,lambda,m,remainder_norm,theta_err_norm,fit_converged\n";
  const std::string est(to_string(report.config.estimator));
  for (const auto& r : report.rows) {
    out << join_row({std::to_string(r.n), std::to_string(r.rep), std::to_string(r.seed), est, format_double(r.lambda),
                     std::to_string(r.m), format_double(r.remainder_norm), format_double(r.theta_err_norm),
                     r.fit_converged ? "true" : "false"})
        << '\n';
  }
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

nlohmann::json results_json(const MCReport& report) {
  nlohmann::json j;
  j["experiment"] = report.experiment;
  auto per_n = nlohmann::json::array();
  for (const auto& s : report.per_n) {
    per_n.push_back({{"n", s.n}, {"ok", s.ok}, {"failures", s.failures}, {"mean", s.mean}, {"se", s.se}});
  }
  j["per_n"] = per_n;
  if (report.slope) {
    const auto& s = *report.slope;
    j["slope"] = {{"slope", s.slope},   {"intercept", s.intercept}, {"se", s.se},
                  {"ci_half_width", s.ci_half_width}, {"points", s.points}, {"zero", s.zero},
                  {"target", kSlopeTarget}};
  } else {
    j["slope"] = nullptr;
  }
  if (report.covariance) {
    const auto& c = *report.covariance;
    j["covariance"] = {{"empirical", matrix_json(c.empirical)},
                       {"sandwich", matrix_json(c.sandwich)},
                       {"population_target", vector_json(c.population_target)},
                       {"frobenius_rel_error", c.frobenius_rel_error},
                       {"threshold", c.threshold}};
  } else {
    j["covariance"] = nullptr;
  }
  long failures = 0;
  for (const auto& r : report.rows) failures += r.failed ? 1 : 0;
  j["replications"] = report.rows.size();
  j["failures"] = failures;
  return j;
}

nlohmann::json results_json(const ICConvergenceTable& table) {
  nlohmann::json j;
  j["lambda"] = table.lambda;
  auto rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json row{{"m", r.m}, {"sup_diff", r.sup_diff}, {"failed", r.failed}};
    if (r.failed) row["error"] = r.error;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["monotone"] = table.monotone;
  return j;
}

}  // namespace regm
