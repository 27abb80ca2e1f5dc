// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "regm/cli.hpp"
#include "regm/harness.hpp"
#include "regm/linearization.hpp"
#include "regm/scores.hpp"
#include "regm/solvers.hpp"
#include "support.hpp"

using namespace regm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 2 : static_cast<int>(std::min(hc, 16u));
}

// 1
Verdict solver_oracles() {
  double lasso_err = 0.0;
  for (Eigen::Index p = 1; p <= 8; ++p) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const Eigen::Index n = 20 + 10 * p;
      const Dataset d = testing::orthonormal_dataset(n, p, 1000 * p + s);
      const Eigen::VectorXd c = d.X().transpose() * d.Y() / static_cast<double>(n);
      for (double lam : {0.05, 0.4, 1.5}) {
        const FitResult f = lasso_cd(d, lam);
        for (Eigen::Index j = 0; j < p; ++j)
          lasso_err = std::max(lasso_err, std::abs(f.theta_hat[j] - soft_threshold(c[j], lam / 2)));
      }
    }
  }
  double en_err = 0.0;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const Eigen::Index ns[] = {20, 100}, ps[] = {2, 5, 10};
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = ns[k % 2], p = ps[k % 3];
    const Dataset d = testing::random_dataset(n, p, 2000 + k);
    const double l1 = u(rng), l2 = u(rng);
    const Eigen::VectorXd oracle = testing::naive_en_oracle(d.X(), d.Y(), l1, l2);
    en_err = std::max(en_err, (elastic_net(d, l1, l2).theta_hat - oracle).cwiseAbs().maxCoeff());
  }
  return {lasso_err <= 1e-8 && en_err <= 1e-6,
          "lasso max-abs " + fmt("%.2e", lasso_err) + ", elastic net max-abs " + fmt("%.2e", en_err)};
}

// 2
Verdict gradient_fidelity() {
  double worst_z = 0.0, worst_j = 0.0;
  std::mt19937_64 rng(5);
  const std::vector<PenaltySpec> pens = {PenaltySpec::none(), PenaltySpec::ridge(0.3),
                                         smooth_approx(PenaltySpec::l1(0.2), 4),
                                         smooth_approx(PenaltySpec::elastic_net(0.2, 0.1), 2),
                                         smooth_approx(PenaltySpec::adaptive_l1(0.2, Eigen::Vector4d(1, -2, 0.5, 3)), 3)};
  for (int k = 0; k < 50; ++k) {
    const Dataset d = testing::random_dataset(60, 4, 3000 + k);
    const ZSystem z(d, pens[k % pens.size()]);
    const Eigen::VectorXd t = testing::random_vector(4, rng);
    const Eigen::VectorXd g = empirical_z(z, t);
    const Eigen::VectorXd fd = testing::fd_gradient([&](const Eigen::VectorXd& x) { return z.objective(x); }, t, 1e-5);
    worst_z = std::max(worst_z, (fd - g).norm() / std::max(1.0, g.norm()));
    const Eigen::MatrixXd J = z_jacobian(z, t);
    const Eigen::MatrixXd fdJ =
        testing::fd_jacobian([&](const Eigen::VectorXd& x) { return empirical_z(z, x); }, t, 1e-5);
    worst_j = std::max(worst_j, (fdJ - J).norm() / std::max(1.0, J.norm()));
  }
  return {worst_z <= 1e-5 && worst_j <= 1e-5,
          "worst relative error: Z " + fmt("%.2e", worst_z) + ", Jacobian " + fmt("%.2e", worst_j)};
}

// 3
Verdict sobolev() {
  const SobolevGrid grid{1.0, 1e-4};
  std::vector<SobolevReport> rows;
  for (int m = 4; m <= 256; m *= 2) rows.push_back(sobolev_distance(m, 1.0, grid, 0.01));
  bool decreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    decreasing = decreasing && rows[i].order0 < rows[i - 1].order0 && rows[i].order1 < rows[i - 1].order1;
  const double drop = rows.front().order1 / rows.back().order1;
  return {decreasing && drop >= 1e2,
          std::string(decreasing ? "strictly decreasing" : "NOT strictly decreasing") + ", order-1 drop " +
              fmt("%.3g", drop)};
}

// 4
Verdict ic_convergence() {
  auto spec = LinearModelSpec::identity(Eigen::Vector3d(3, -2, 1.5), 1.0);
  const Dataset d = generate_linear_data(spec, 200, 4);
  const double lam = 0.1;
  const auto fit = lasso_cd(d, lam);
  const double min_abs = fit.theta_hat.cwiseAbs().minCoeff();
  const auto table = ic_convergence_experiment(d, lam, {8, 16, 32, 64, 128, 256});
  const double d8 = table.rows[0].sup_diff, d128 = table.rows[4].sup_diff;
  const bool ok = min_abs > 0.5 && d8 > 0.0 && d8 >= 10.0 * d128 && table.monotone;
  return {ok, "min|theta| " + fmt("%.2f", min_abs) + ", sup diff m=8 " + fmt("%.3e", d8) + ", m=128 " +
                  fmt("%.3e", d128)};
}

MCConfig mc_base(Estimator e, Eigen::VectorXd theta0) {
  MCConfig c;
  c.spec = LinearModelSpec::toeplitz(std::move(theta0), 1.0, 0.3);
  c.estimator = e;
  c.master_seed = 20240501;
  c.threads = threads();
  return c;
}

// 5
Verdict linearity() {
  MCConfig c = mc_base(Estimator::ols, Eigen::Vector3d(3, 0, -2));
  c.n_grid = {100, 200, 400, 800, 1600, 3200, 6400};
  c.reps = 500;
  const MCReport ols = remainder_scaling_experiment(c);
  c.estimator = Estimator::ridge;
  c.lambda2 = 0.5;
  const MCReport ridge = remainder_scaling_experiment(c);
  const bool ok = ols.verdicts.at("linearity") && !ridge.verdicts.at("linearity") &&
                  std::abs(ridge.slope->slope) < 0.1 && audit(ols) && audit(ridge);
  return {ok, "OLS slope " + fmt("%.3f", ols.slope->slope) + " +/- " + fmt("%.3f", ols.slope->ci_half_width) +
                  ", ridge slope " + fmt("%.3f", ridge.slope->slope)};
}

// 6
Verdict normality() {
  MCConfig c = mc_base(Estimator::ols, Eigen::Vector3d(1, 0, -0.5));
  c.n_grid = {5000};
  c.reps = 1000;
  const MCReport ols = normality_experiment(c);
  const Eigen::MatrixXd target = c.spec.sigma * c.spec.sigma * c.spec.design_covariance.inverse();
  const double ols_err = (ols.covariance->empirical - target).norm() / target.norm();

  c.estimator = Estimator::ridge;
  c.lambda2 = 0.1;
  const MCReport ridge = normality_experiment(c);
  const Eigen::MatrixXd& S = c.spec.design_covariance;
  const Eigen::Index p = S.rows();
  const Eigen::MatrixXd Ainv = (S + c.lambda2 * Eigen::MatrixXd::Identity(p, p)).inverse();
  const Eigen::MatrixXd closed = Ainv * (c.spec.sigma * c.spec.sigma * S) * Ainv;
  const double ridge_err = (ridge.covariance->empirical - closed).norm() / closed.norm();
  const bool ok = ols_err <= 0.10 && ridge_err <= 0.15 && ridge.verdicts.at("normality");
  return {ok, "OLS rel. error " + fmt("%.4f", ols_err) + ", ridge rel. error " + fmt("%.4f", ridge_err) +
                  " (full sandwich " + fmt("%.4f", ridge.covariance->frobenius_rel_error) + ")"};
}

// 7
Verdict onestep() {
  MCConfig c = mc_base(Estimator::onestep, Eigen::Vector3d(3, 0, -2));
  c.spec = LinearModelSpec::identity(Eigen::Vector3d(3, 0, -2), 1.0);
  c.n_grid = {100, 200, 400, 800, 1600};
  c.reps = 300;
  c.onestep_penalty = PenaltyKind::ridge;
  c.lambda_rule = LambdaRule::schedule;
  c.lambda2 = 0.2;
  const MCReport ridge = onestep_experiment(c);
  double ridge_gap = 0.0;
  for (const auto& r : ridge.rows) ridge_gap = std::max(ridge_gap, r.remainder_norm);

  c.onestep_penalty = PenaltyKind::l1;
  c.m = 64;
  const MCReport l1 = onestep_experiment(c);
  const bool ok = ridge_gap <= 1e-10 && l1.verdicts.at("rate") && l1.verdicts.at("interior") &&
                  ridge.verdicts.at("interior") && audit(l1);
  return {ok, "ridge max gap " + fmt("%.2e", ridge_gap) + ", smooth-l1 gap slope " + fmt("%.3f", l1.slope->slope) +
                  ", interior " + (l1.verdicts.at("interior") ? "every rep" : "VIOLATED")};
}

// 8
Verdict adaptive_structure() {
  auto spec = LinearModelSpec::identity((Eigen::VectorXd(6) << 3, 0, 0, 1.5, 0, -0.4).finished(), 1.0);
  long zero_checks = 0, final_zero_cases = 0;
  bool zeros_ok = true;
  double worst = 0.0;
  const int m = 64;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Dataset d = generate_linear_data(spec, 60, 5000 + s);
    const double lam = lambda_schedule(60, 6, 1.0);
    const AdaptiveFit f = adaptive_lasso(d, lam);
    const Eigen::MatrixXd rows = adaptive_lasso_ic_rows(d, f, lam, m);

    std::vector<Eigen::Index> act;
    Eigen::VectorXd w(6);
    for (Eigen::Index j = 0; j < 6; ++j) {
      const bool init0 = f.init.theta_hat[j] == 0.0, final0 = f.final.theta_hat[j] == 0.0;
      if (init0 || final0) {
        ++zero_checks;
        if (!init0) ++final_zero_cases;
        zeros_ok = zeros_ok && (rows.col(j).array() == 0.0).all();
      } else {
        act.push_back(j);
      }
    }
    if (act.empty()) continue;
    // Independent route: explicit reweighted l1 on the selected columns.
    const auto k = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd Xs(d.n(), k);
    Eigen::VectorXd ws(k), ts(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      Xs.col(a) = d.X().col(act[static_cast<std::size_t>(a)]);
      ws[a] = 1.0 / std::abs(f.init.theta_hat[act[static_cast<std::size_t>(a)]]);
      ts[a] = f.final.theta_hat[act[static_cast<std::size_t>(a)]];
    }
    const ICSample ref = influence_curve(Dataset(Xs, d.Y()), ts, smooth_approx(PenaltySpec::l1(lam, ws), m));
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::VectorXd got = rows.col(act[static_cast<std::size_t>(a)]);
      const double scale = std::max(1.0, ref.psi.col(a).cwiseAbs().maxCoeff());
      worst = std::max(worst, (got - ref.psi.col(a)).cwiseAbs().maxCoeff() / scale);
    }
  }
  const bool ok = zeros_ok && worst <= 1e-10 && final_zero_cases > 0;
  return {ok, std::to_string(zero_checks) + " zero components (" + std::to_string(final_zero_cases) +
                  " final-only) exact, active-set max rel. diff " + fmt("%.2e", worst)};
}

// 9
Verdict moment_conditions() {
  auto spec = LinearModelSpec::toeplitz(Eigen::Vector3d(1, -1, 0.5), 1.0, 0.3);
  int ii_pass = 0;
  double worst_iii = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Dataset d = generate_linear_data(spec, 10000, mix_seed(99, 10000, s));
    const ICSample ics = influence_curve(d, spec.theta0, PenaltySpec::none());
    const ICCheckReport r = ic_moment_checks(ics, d, &spec);
    if (r.cond_ii) ++ii_pass;
    worst_iii = std::max(worst_iii, (*r.cond_iii_matrix - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff());
  }
  return {ii_pass >= 95 && worst_iii <= 0.1,
          "condition ii passed " + std::to_string(ii_pass) + "/100, worst condition iii entry " +
              fmt("%.4f", worst_iii)};
}

// 10
Verdict ranking() {
  double worst = 0.0;
  std::mt19937_64 rng(10);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index n = 2 + k % 29, p = 1 + k % 5;
    const Dataset d = testing::random_dataset(n, p, 7000 + k);
    const PenaltySpec pen = k % 2 ? smooth_approx(PenaltySpec::l1(0.3), 16) : PenaltySpec::none();
    const RankingZSystem rz(d, pen);
    const Eigen::VectorXd t = testing::random_vector(p, rng);
    worst = std::max(worst, (rz.value(t) - rz.value_direct(t)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "max-abs shortcut vs double sum " + fmt("%.2e", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "regm_acceptance_det";
  fs::remove_all(root);
  const std::string t = std::to_string(threads());
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"fit", "n = 120\nestimator = en\nlambda = 0.2\nlambda2 = 0.3\nseed = 3\n"},
      {"ic", "n = 150\nestimator = adaptive\nseed = 4\n"},
      {"onestep", "n = 200\nseed = 5\n"},
      {"onestep", "reps = 100\nn_grid = 100,200,400,800\nlambda_rule = schedule\nthreads = " + t + "\n"},
      {"mc-linearity", "estimator = lasso\nlambda = 0.1\nreps = 100\nn_grid = 100,200,400,800\nthreads = " + t + "\n"},
      {"mc-normality", "estimator = en\nlambda = 0.05\nlambda2 = 0.1\nreps = 200\nn_grid = 500\nthreads = " + t + "\n"},
      {"approx-check", "n = 100\nbound = 1\nexclude_radius = 0.01\n"},
      {"rank-fit", "n = 30\nseed = 6\n"},
  };
  int compared = 0;
  std::string bad;
  std::ostringstream sink;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const fs::path a = root / ("a" + std::to_string(k)), b = root / ("b" + std::to_string(k));
    const int sa = cli::run(cases[k].first, ExperimentConfig::parse(cases[k].second), a, sink);
    const int sb = cli::run(cases[k].first, ExperimentConfig::from_file(a / "config.echo"), b, sink);
    if (sa == cli::kExitUsage || sa != sb) bad += " " + cases[k].first + "(status)";
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(b / e.path().filename())) bad += " " + e.path().filename().string();
    }
  }
  fs::remove_all(root);
  return {bad.empty() && compared >= 10,
          std::to_string(compared) + " CSV files compared" + (bad.empty() ? ", all byte-identical" : "; differs:" + bad)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "solver-oracle equivalence", 10, solver_oracles},
      {2, "gradient fidelity", 5, gradient_fidelity},
      {3, "Sobolev approximation", 5, sobolev},
      {4, "IC convergence in m", 10, ic_convergence},
      {5, "asymptotic linearity detection", 300, linearity},
      {6, "asymptotic normality", 300, normality},
      {7, "one-step exactness and rates", 180, onestep},
      {8, "adaptive-Lasso IC structure", 30, adaptive_structure},
      {9, "IC moment conditions", 60, moment_conditions},
      {10, "ranking Z correctness", 10, ranking},
      {11, "determinism", 300, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %-32s %s  %s; %.2f s (limit %.0f s)%s\n", c.id, c.name, pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : " TIME EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
