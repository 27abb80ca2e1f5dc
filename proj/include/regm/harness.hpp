#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regm/model.hpp"
#include "regm/penalty.hpp"
#include "regm/solvers.hpp"

namespace regm {

/// c * sqrt(ln(p) / n).
double lambda_schedule(Eigen::Index n, Eigen::Index p, double c);

/// Seed of replication `rep` at sample size `n`. Injective in (n, rep) for
/// n, rep < 2^32 at a fixed master seed: the pair is packed into one word and
/// passed through bijective splitmix64 finalizers around an xor with the master.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t n, std::uint64_t rep);

enum class Estimator {
  exact,  // theta0 + mean psi; zero remainder by construction
  ols,
  ridge,
  lasso,
  elastic_net,
  adaptive,
  smooth,  // full Newton solve of the smoothed-l1 Z-equation
  onestep,
};
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

enum class LambdaRule { fixed, schedule };
enum class MSchedule { fixed, sqrt_n };
enum class PsiReference { truth, fitted };
enum class OneStepInit { ridge, truth, full };

std::string_view to_string(LambdaRule r);
std::string_view to_string(MSchedule r);
std::string_view to_string(PsiReference r);
std::string_view to_string(OneStepInit r);

struct MCConfig {
  LinearModelSpec spec;
  std::vector<Eigen::Index> n_grid;
  long reps = 100;
  Estimator estimator = Estimator::ols;
  LambdaRule lambda_rule = LambdaRule::fixed;
  double lambda = 0.0;    // l1 level under the fixed rule
  double lambda_c = 1.0;  // constant c of the schedule rule
  double lambda2 = 0.0;   // ridge / elastic-net l2 level, always fixed
  int m = 64;
  MSchedule m_schedule = MSchedule::fixed;
  PsiReference psi_at = PsiReference::truth;
  PenaltyKind onestep_penalty = PenaltyKind::l1;
  OneStepInit onestep_init = OneStepInit::ridge;
  std::uint64_t master_seed = 0;
  int threads = 1;
  SolverOptions solver;

  /// l1 level used at sample size n.
  double lambda_at(Eigen::Index n) const;
  int m_at(Eigen::Index n) const;
};

inline constexpr double kFailureBudget = 0.05;
inline constexpr double kSlopeTarget = -0.5;
inline constexpr double kNormalityThreshold = 0.15;
inline constexpr double kZeroRemainder = 1e-12;
inline constexpr double kExactGap = 1e-10;

/// One replication. For the one-step experiment `remainder_norm` holds the
/// gap between the one-step iterate and the full solve.
struct RepRecord {
  Eigen::Index n = 0;
  long rep = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int m = 0;
  double remainder_norm = 0.0;
  double theta_err_norm = 0.0;
  bool fit_converged = false;
  bool failed = false;
  bool interior = true;
  std::string error;
  Eigen::VectorXd scaled_error;  // sqrt(n) (theta_hat - theta0)
};

struct SizeSummary {
  Eigen::Index n = 0;
  long ok = 0;
  long failures = 0;
  double mean = 0.0;
  double se = 0.0;
};

/// OLS fit of log(mean) on log(n); the CI half-width uses a t quantile with
/// k - 2 degrees of freedom, which is crude for 4-7 grid points.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double ci_half_width = 0.0;
  int points = 0;
  bool zero = false;  // every mean below the zero threshold; slope undefined
};

struct CovarianceComparison {
  Eigen::MatrixXd empirical;
  Eigen::MatrixXd sandwich;
  Eigen::VectorXd population_target;  // zero of the population Z-function
  double frobenius_rel_error = 0.0;
  double threshold = kNormalityThreshold;
};

struct MCReport {
  std::string experiment;
  MCConfig config;
  std::vector<RepRecord> rows;
  std::vector<SizeSummary> per_n;
  std::optional<SlopeFit> slope;
  std::optional<CovarianceComparison> covariance;
  std::map<std::string, bool> verdicts;

  bool passed() const;
};

/// Population quantities of the linear model under a penalty evaluated at n.
struct Sandwich {
  Eigen::VectorXd target;
  Eigen::MatrixXd A;  // (d eta(target))^{-1}
  Eigen::MatrixXd C;  // Var of phi + J' at target
  Eigen::MatrixXd ACA;
};
Sandwich population_sandwich(const LinearModelSpec& spec, const PenaltySpec& penalty);

/// Penalty the estimator is linearised with at sample size n (smoothed where
/// the estimator's own penalty is not differentiable).
PenaltySpec linearization_penalty(const MCConfig& config, Eigen::Index n);

/// Asymptotic-linearity check: mean ||theta_hat - theta0 - mean psi|| against n.
MCReport remainder_scaling_experiment(const MCConfig& config);
/// Covariance of sqrt(n)(theta_hat - theta0) at the largest n against A C A^T.
MCReport normality_experiment(const MCConfig& config);
/// Gap between the one-step iterate and the full Newton solve against n.
MCReport onestep_experiment(const MCConfig& config);

/// Recomputes summaries, slope, covariance and verdicts from `rows` only.
MCReport rederive(const MCReport& report);
/// True when `rederive` reproduces every stored number and verdict exactly.
bool audit(const MCReport& report);

struct ICConvergenceRow {
  int m = 0;
  double sup_diff = 0.0;
  bool failed = false;
  std::string error;
};

struct ICConvergenceTable {
  double lambda = 0.0;
  std::vector<ICConvergenceRow> rows;
  bool monotone = false;  // non-increasing within kMonotoneSlack
};

inline constexpr double kMonotoneSlack = 1e-3;

/// For each m: theta_m solves the smoothed Z-equation, psi^(m) is its IC, and
/// the row reports max_i ||psi^(m)_i - psi^(m_max)_i||.
ICConvergenceTable ic_convergence_experiment(const Dataset& data, double lambda, const std::vector<int>& m_grid);

/// `n,rep,seed,estimator,lambda,m,remainder_norm,theta_err_norm,fit_converged`
void write_runs_csv(const MCReport& report, const std::filesystem::path& path);
nlohmann::json results_json(const MCReport& report);
nlohmann::json results_json(const ICConvergenceTable& table);

}  // namespace regm
