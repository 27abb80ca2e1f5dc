#include "regm/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "regm/csv.hpp"
#include "regm/error.hpp"
#include "regm/harness.hpp"
#include "regm/linearization.hpp"
#include "regm/model.hpp"
#include "regm/scores.hpp"
#include "regm/solvers.hpp"

namespace regm::cli {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"fit",          "ic",           "onestep", "mc-linearity",
                                             "mc-normality", "approx-check", "rank-fit"};
  return c;
}

namespace {

using nlohmann::json;

constexpr double kDefaultLambda = 0.1;
constexpr long kDefaultN = 200;
constexpr std::uint64_t kDefaultSeed = 1;

json vec_json(const Eigen::VectorXd& v) {
  auto a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Eigen::MatrixXd& M) {
  auto a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vec_json(M.row(i).transpose()));
  return a;
}

LinearModelSpec model_spec(const ExperimentConfig& cfg) {
  const bool intercept = cfg.get_bool("intercept", false);
  std::vector<double> theta;
  if (cfg.has("theta0")) {
    theta = cfg.get_doubles("theta0", {});
    if (cfg.has("p") && cfg.get_int("p", 0) != static_cast<long>(theta.size())) {
      throw ConfigError("key 'p' disagrees with the length of 'theta0'");
    }
  } else {
    static constexpr double pattern[] = {3.0, 0.0, -2.0, 1.5};
    const long p = cfg.get_int("p", 3);
    for (long j = 0; j < p; ++j) theta.push_back(pattern[j % 4]);
  }
  Eigen::VectorXd t0 = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  if (intercept && t0.size() < 2) throw ConfigError("key 'intercept' needs theta0 with at least two entries");
  auto spec = LinearModelSpec::toeplitz(std::move(t0), cfg.get_double("sigma", 1.0), cfg.get_double("rho", 0.0),
                                        intercept);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return spec;
}

struct DataSource {
  Dataset data;
  std::optional<LinearModelSpec> spec;  // known only for generated data
};

DataSource obtain_data(const ExperimentConfig& cfg) {
  if (cfg.has("data")) {
    return {read_dataset_csv(cfg.get_string("data", ""), cfg.get_bool("intercept", false)), std::nullopt};
  }
  auto spec = model_spec(cfg);
  auto data = generate_linear_data(spec, cfg.get_int("n", kDefaultN), cfg.get_u64("seed", kDefaultSeed));
  return {std::move(data), std::move(spec)};
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.get_double("tol", o.tol);
  o.max_sweeps = cfg.get_int("max_sweeps", o.max_sweeps);
  return o;
}

double lambda_for(const ExperimentConfig& cfg, Eigen::Index n, Eigen::Index p) {
  if (cfg.get_string("lambda_rule", "fixed") == "schedule") return lambda_schedule(n, p, cfg.get_double("c", 1.0));
  return cfg.get_double("lambda", kDefaultLambda);
}

MCConfig mc_config(const ExperimentConfig& cfg, const std::string& default_estimator,
                   const std::string& default_rule = "fixed") {
  MCConfig c;
  c.spec = model_spec(cfg);
  for (long n : cfg.get_ints("n_grid", {100, 200, 400, 800, 1600})) c.n_grid.push_back(n);
  c.reps = cfg.get_int("reps", 200);
  c.estimator = parse_estimator(cfg.get_string("estimator", default_estimator));
  c.lambda_rule = cfg.get_string("lambda_rule", default_rule) == "schedule" ? LambdaRule::schedule : LambdaRule::fixed;
  c.lambda = cfg.get_double("lambda", kDefaultLambda);
  c.lambda_c = cfg.get_double("c", 1.0);
  c.lambda2 = cfg.get_double("lambda2", 0.0);
  c.m = static_cast<int>(cfg.get_int("m", 64));
  c.m_schedule = cfg.get_string("m_schedule", "fixed") == "sqrt" ? MSchedule::sqrt_n : MSchedule::fixed;
  c.psi_at = cfg.get_string("psi_at", "truth") == "fitted" ? PsiReference::fitted : PsiReference::truth;
  c.onestep_penalty = cfg.get_string("onestep_penalty", "l1") == "ridge" ? PenaltyKind::ridge : PenaltyKind::l1;
  const auto init = cfg.get_string("initializer", "ridge");
  c.onestep_init = init == "truth" ? OneStepInit::truth : init == "full" ? OneStepInit::full : OneStepInit::ridge;
  c.master_seed = cfg.get_u64("seed", kDefaultSeed);
  c.threads = static_cast<int>(cfg.get_int("threads", 1));
  c.solver = solver_options(cfg);
  if (cfg.has("data")) throw ConfigError("key 'data' is not used by Monte Carlo commands");
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_vectors_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<Eigen::VectorXd>& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> header{"j"};
  header.insert(header.end(), names.begin(), names.end());
  out << join_row(header) << '\n';
  for (Eigen::Index j = 0; j < columns.front().size(); ++j) {
    std::vector<std::string> row{std::to_string(j + 1)};
    for (const auto& c : columns) row.push_back(format_double(c[j]));
    out << join_row(row) << '\n';
  }
}

struct Outcome {
  json results = json::object();
  std::map<std::string, bool> verdicts;
};

json fit_json(const FitResult& f) {
  json j;
  j["theta_hat"] = vec_json(f.theta_hat);
  j["objective"] = f.objective;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  auto active = json::array();
  for (auto a : f.active_set) active.push_back(a + 1);
  j["active_set"] = active;
  j["gram_condition"] = f.gram_condition;
  j["condition_warning"] = f.condition_warning;
  return j;
}

struct FittedModel {
  Eigen::VectorXd theta;
  PenaltySpec ic_penalty;
  std::optional<AdaptiveFit> adaptive;
  double lambda = 0.0;
  int m = 64;
  json results;
  bool converged = true;
};

FittedModel fit_model(const ExperimentConfig& cfg, const Dataset& data, const std::string& estimator) {
  const SolverOptions opts = solver_options(cfg);
  FittedModel fm;
  fm.lambda = lambda_for(cfg, data.n(), data.p());
  fm.m = static_cast<int>(cfg.get_int("m", 64));
  const double lambda2 = cfg.get_double("lambda2", 0.0);
  const Eigen::VectorXd w = data.default_weights();
  fm.results["estimator"] = estimator;
  fm.results["lambda"] = fm.lambda;

  if (estimator == "lasso") {
    const FitResult f = lasso_cd(data, fm.lambda, opts);
    fm.theta = f.theta_hat;
    fm.converged = f.converged;
    fm.results["fit"] = fit_json(f);
    fm.results["kkt_max_violation"] = kkt_max_violation(data, fm.lambda, w, f.theta_hat);
    fm.results["parameter_box"] = parameter_box(data, PenaltySpec::l1(fm.lambda, w)).bound;
    fm.ic_penalty = smooth_approx(PenaltySpec::l1(fm.lambda, w), fm.m);
  } else if (estimator == "en") {
    const FitResult f = elastic_net(data, fm.lambda, lambda2, opts);
    fm.theta = f.theta_hat;
    fm.converged = f.converged;
    fm.results["fit"] = fit_json(f);
    fm.results["lambda2"] = lambda2;
    fm.results["parameter_box"] = parameter_box(data, PenaltySpec::elastic_net(fm.lambda, lambda2, w)).bound;
    fm.ic_penalty = smooth_approx(PenaltySpec::elastic_net(fm.lambda, lambda2, w), fm.m);
  } else if (estimator == "adaptive") {
    AdaptiveFit f = adaptive_lasso(data, fm.lambda, opts);
    fm.theta = f.final.theta_hat;
    fm.converged = f.init.converged && f.final.converged;
    fm.results["init"] = fit_json(f.init);
    fm.results["fit"] = fit_json(f.final);
    fm.adaptive = std::move(f);
  } else if (estimator == "ridge" || estimator == "ols") {
    const double l2 = estimator == "ridge" ? lambda2 : 0.0;
    fm.theta = ridge_init(data, l2);
    fm.results["lambda2"] = l2;
    fm.results["fit"] = {{"theta_hat", vec_json(fm.theta)}, {"converged", true}};
    fm.ic_penalty = PenaltySpec::ridge(l2, w);
  } else if (estimator == "smooth") {
    fm.ic_penalty = smooth_approx(PenaltySpec::l1(fm.lambda, w), fm.m);
    const ZSystem zsys(data, fm.ic_penalty);
    const NewtonResult r = newton_solve(zsys, ridge_init(data, fm.lambda));
    fm.theta = r.theta;
    fm.converged = r.converged;
    fm.results["fit"] = {{"theta_hat", vec_json(r.theta)}, {"converged", r.converged},
                         {"iterations", r.iterations},   {"z_norm", r.z_norm}};
  } else {
    throw ConfigError("estimator '" + estimator + "' is not available for this command");
  }
  return fm;
}

Outcome cmd_fit(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const DataSource src = obtain_data(cfg);
  write_dataset_csv(src.data, out / "data.csv");
  const FittedModel fm = fit_model(cfg, src.data, cfg.get_string("estimator", "lasso"));
  write_vectors_csv(out / "fit.csv", {"theta_hat"}, {fm.theta});
  Outcome o;
  o.results = fm.results;
  o.verdicts["converged"] = fm.converged;
  return o;
}

Outcome cmd_ic(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const DataSource src = obtain_data(cfg);
  write_dataset_csv(src.data, out / "data.csv");
  const FittedModel fm = fit_model(cfg, src.data, cfg.get_string("estimator", "lasso"));
  const bool at_truth = cfg.get_string("psi_at", "fitted") == "truth";
  if (at_truth && !src.spec) throw ConfigError("psi_at = truth needs generated data (no 'data' key)");
  const Eigen::VectorXd ref = at_truth ? src.spec->theta0 : fm.theta;

  ICSample ics;
  if (fm.adaptive) {
    ics.psi = adaptive_lasso_ic_rows(src.data, *fm.adaptive, fm.lambda, fm.m,
                                     at_truth ? std::optional<Eigen::VectorXd>(ref) : std::nullopt);
    ics.theta_ref = ref;
    ics.penalty_ref = smooth_approx(PenaltySpec::adaptive_l1(fm.lambda, fm.adaptive->init.theta_hat,
                                                             src.data.default_weights()),
                                    fm.m);
  } else {
    ics = influence_curve(src.data, ref, fm.ic_penalty);
  }
  write_matrix_rows_csv(ics.psi, "psi", out / "ic.csv");

  const auto checks = ic_moment_checks(ics, src.data, src.spec ? &*src.spec : nullptr);
  Outcome o;
  o.results = fm.results;
  o.results["psi_at"] = at_truth ? "truth" : "fitted";
  o.results["condition_number"] = ics.condition_number;
  o.results["mean_psi"] = vec_json(checks.mean_psi);
  o.results["mean_psi_se"] = vec_json(checks.mean_psi_se);
  o.results["second_moment_diag"] = vec_json(checks.second_moment_diag);
  o.results["cond_iii_matrix"] = checks.cond_iii_matrix ? mat_json(*checks.cond_iii_matrix) : json(nullptr);
  o.verdicts["converged"] = fm.converged;
  o.verdicts["cond_i"] = checks.cond_i;
  o.verdicts["cond_ii"] = checks.cond_ii;
  if (checks.cond_iii) o.verdicts["cond_iii"] = *checks.cond_iii;
  return o;
}

Outcome mc_outcome(const MCReport& rep, const std::filesystem::path& out) {
  write_runs_csv(rep, out / "runs.csv");
  Outcome o;
  o.results = results_json(rep);
  o.results["audit"] = audit(rep);
  o.verdicts = rep.verdicts;
  return o;
}

Outcome cmd_onestep(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  if (cfg.has("reps")) return mc_outcome(onestep_experiment(mc_config(cfg, "onestep", "schedule")), out);

  const DataSource src = obtain_data(cfg);
  write_dataset_csv(src.data, out / "data.csv");
  const Dataset& data = src.data;
  const double lam = lambda_for(cfg, data.n(), data.p());
  const Eigen::VectorXd w = data.default_weights();
  const PenaltySpec pen = cfg.get_string("onestep_penalty", "l1") == "ridge"
                              ? PenaltySpec::ridge(cfg.get_double("lambda2", 0.0), w)
                              : smooth_approx(PenaltySpec::l1(lam, w), static_cast<int>(cfg.get_int("m", 64)));
  const ZSystem zsys(data, pen);
  const double ridge_level = data.p() >= 2 ? lambda_schedule(data.n(), data.p(), cfg.get_double("c", 1.0)) : lam;
  const Eigen::VectorXd tilde = ridge_init(data, ridge_level);
  const Eigen::VectorXd os = one_step(tilde, data, pen);
  const NewtonResult full = newton_solve(zsys, tilde);
  write_vectors_csv(out / "onestep.csv", {"theta_tilde", "theta_onestep", "theta_full"}, {tilde, os, full.theta});

  const ParameterBox box = parameter_box(data, pen);
  Outcome o;
  o.results["lambda"] = lam;
  o.results["z_norm_initial"] = zsys.value(tilde).norm();
  o.results["z_norm_onestep"] = zsys.value(os).norm();
  o.results["gap_to_full"] = (os - full.theta).norm();
  o.results["parameter_box"] = box.bound;
  o.verdicts["interior"] = box.interior(os);
  o.verdicts["full_converged"] = full.converged;
  return o;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1]) && !(v[i] == 0.0 && v[i - 1] == 0.0)) return false;
  }
  return true;
}

Outcome cmd_approx(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const DataSource src = obtain_data(cfg);
  const double lam = lambda_for(cfg, src.data.n(), src.data.p());
  std::vector<int> m_grid;
  for (long m : cfg.get_ints("m_grid", {4, 8, 16, 32, 64, 128, 256})) m_grid.push_back(static_cast<int>(m));

  double bound = cfg.get_double("bound", 0.0);
  if (!cfg.has("bound")) {
    bound = lam > 0.0 ? parameter_box(src.data, PenaltySpec::l1(lam, src.data.default_weights())).bound : 1.0;
  }
  SobolevGrid grid = SobolevGrid::from_box(bound);
  grid.step = cfg.get_double("step", grid.step);
  const double exclude = cfg.get_double("exclude_radius", bound / 100.0);

  std::ofstream sob(out / "sobolev.csv", std::ios::binary);
  sob << sobolev_csv_header() << '\n';
  std::vector<double> o0, o1;
  auto rows = json::array();
  for (int m : m_grid) {
    const SobolevReport r = sobolev_distance(m, lam, grid, exclude);
    sob << sobolev_csv_row(r) << '\n';
    o0.push_back(r.order0);
    o1.push_back(r.order1);
    rows.push_back({{"m", m}, {"order0", r.order0}, {"order1", r.order1}, {"order2", r.order2}});
  }
  sob.close();

  const ICConvergenceTable table = ic_convergence_experiment(src.data, lam, m_grid);
  std::ofstream icc(out / "ic_convergence.csv", std::ios::binary);
  icc << "m,sup_diff,failed\n";
  for (const auto& r : table.rows) {
    icc << join_row({std::to_string(r.m), format_double(r.sup_diff), r.failed ? "true" : "false"}) << '\n';
  }

  Outcome o;
  o.results["lambda"] = lam;
  o.results["grid"] = {{"bound", grid.bound}, {"step", grid.step}, {"exclude_radius", exclude}};
  o.results["sobolev"] = rows;
  o.results["ic_convergence"] = results_json(table);
  o.verdicts["sobolev_order0_decreasing"] = strictly_decreasing(o0);
  o.verdicts["sobolev_order1_decreasing"] = strictly_decreasing(o1);
  o.verdicts["ic_monotone"] = table.monotone;
  return o;
}

Outcome cmd_rank(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const DataSource src = obtain_data(cfg);
  if (src.data.intercept_included()) throw ConfigError("the pairwise ranking loss does not identify an intercept");
  write_dataset_csv(src.data, out / "data.csv");
  const double lam = lambda_for(cfg, src.data.n(), src.data.p());
  const PenaltySpec pen = lam > 0.0 ? smooth_approx(PenaltySpec::l1(lam), static_cast<int>(cfg.get_int("m", 64)))
                                    : PenaltySpec::none();
  const RankingZSystem rz(src.data, pen);
  const NewtonResult r = newton_solve(rz, Eigen::VectorXd::Zero(src.data.p()));
  write_vectors_csv(out / "rank_fit.csv", {"theta_hat"}, {r.theta});

  Outcome o;
  o.results["lambda"] = lam;
  o.results["theta_hat"] = vec_json(r.theta);
  o.results["z_norm"] = r.z_norm;
  o.results["iterations"] = r.iterations;
  o.verdicts["converged"] = r.converged;
  if (src.data.n() <= 1000) {
    const Eigen::VectorXd direct = rz.value_direct(r.theta);
    const double diff = (direct - rz.value(r.theta)).cwiseAbs().maxCoeff();
    o.results["shortcut_vs_direct"] = diff;
    o.verdicts["shortcut_matches_direct"] = diff <= 1e-10 * (1.0 + direct.cwiseAbs().maxCoeff());
  }
  return o;
}

}  // namespace

int run(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir,
        std::ostream& err) {
  try {
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
      throw ConfigError("unknown command '" + command + "'");
    }
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "config.echo", "# regm " + command + "\n" + config.echo());

    Outcome o;
    if (command == "fit") o = cmd_fit(config, out_dir);
    else if (command == "ic") o = cmd_ic(config, out_dir);
    else if (command == "onestep") o = cmd_onestep(config, out_dir);
    else if (command == "mc-linearity") o = mc_outcome(remainder_scaling_experiment(mc_config(config, "ols")), out_dir);
    else if (command == "mc-normality") o = mc_outcome(normality_experiment(mc_config(config, "ols")), out_dir);
    else if (command == "approx-check") o = cmd_approx(config, out_dir);
    else o = cmd_rank(config, out_dir);

    json report;
    report["command"] = command;
    report["config"] = config.values();
    report["results"] = o.results;
    report["verdicts"] = o.verdicts;
    write_text(out_dir / "report.json", report.dump(2) + "\n");

    int status = kExitOk;
    for (const auto& [name, ok] : o.verdicts) {
      if (!ok) {
        err << "verdict failed: " << name << '\n';
        status = kExitVerdict;
      }
    }
    return status;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitVerdict;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Regularized M-estimation: fits, influence curves, one-step estimators and Monte Carlo checks"};
  std::string command;
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flag_values;

  app.add_option("command", command, "fit | ic | onestep | mc-linearity | mc-normality | approx-check | rank-fit")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--config", config_path, "Config file with key = value lines");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--seed", "seed"}, {"--n", "n"},         {"--p", "p"},         {"--lambda", "lambda"},
      {"--lambda2", "lambda2"}, {"--m", "m"},   {"--reps", "reps"},   {"--n-grid", "n_grid"},
      {"--estimator", "estimator"}, {"--threads", "threads"}};
  for (const auto& [flag, key] : flags) {
    app.add_option_function<std::string>(flag, [&flag_values, key = key](const std::string& v) { flag_values[key] = v; },
                                         "Overrides config key '" + key + "'");
  }
  app.add_option("--set", overrides, "Extra key=value override (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(config_path);
    for (const auto& [key, value] : flag_values) cfg.set(key, value);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return run(command, cfg, out_dir, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace regm::cli
