#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "regm/cli.hpp"
#include "regm/error.hpp"
#include "regm/harness.hpp"
#include "regm/linearization.hpp"
#include "regm/scores.hpp"
#include "regm/solvers.hpp"

namespace py = pybind11;
using namespace regm;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

MCConfig make_config(const LinearModelSpec& spec, std::vector<Eigen::Index> n_grid, long reps,
                     const std::string& estimator, double lambda, const std::string& lambda_rule, double c,
                     double lambda2, int m, const std::string& onestep_penalty, std::uint64_t seed, int threads) {
  MCConfig cfg;
  cfg.spec = spec;
  cfg.n_grid = std::move(n_grid);
  cfg.reps = reps;
  cfg.estimator = parse_estimator(estimator);
  cfg.lambda = lambda;
  cfg.lambda_rule = lambda_rule == "schedule" ? LambdaRule::schedule : LambdaRule::fixed;
  cfg.lambda_c = c;
  cfg.lambda2 = lambda2;
  cfg.m = m;
  cfg.onestep_penalty = parse_penalty_kind(onestep_penalty);
  cfg.master_seed = seed;
  cfg.threads = threads;
  return cfg;
}

template <class Fn>
void def_experiment(py::module_& m, const char* name, Fn fn, const char* doc) {
  m.def(
      name,
      [fn](const LinearModelSpec& spec, std::vector<Eigen::Index> n_grid, long reps, const std::string& estimator,
           double lambda, const std::string& lambda_rule, double c, double lambda2, int mm,
           const std::string& onestep_penalty, std::uint64_t seed, int threads) {
        MCReport rep;
        {
          py::gil_scoped_release release;
          rep = fn(make_config(spec, std::move(n_grid), reps, estimator, lambda, lambda_rule, c, lambda2, mm,
                               onestep_penalty, seed, threads));
        }
        py::dict out = to_python(results_json(rep));
        out["verdicts"] = rep.verdicts;
        out["audit"] = audit(rep);
        return out;
      },
      py::arg("spec"), py::arg("n_grid"), py::arg("reps"), py::arg("estimator") = "ols", py::arg("lam") = 0.0,
      py::arg("lambda_rule") = "fixed", py::arg("c") = 1.0, py::arg("lambda2") = 0.0, py::arg("m") = 64,
      py::arg("onestep_penalty") = "l1", py::arg("seed") = 0, py::arg("threads") = 1, doc);
}

}  // namespace

PYBIND11_MODULE(_regm, m) {
  m.doc() = "Regularized M-estimation: solvers, influence curves and Monte Carlo checks";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, bool>(), py::arg("X"), py::arg("Y"),
           py::arg("intercept") = false)
      .def_property_readonly("X", &Dataset::X)
      .def_property_readonly("Y", &Dataset::Y)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def_property_readonly("intercept", &Dataset::intercept_included);

  py::class_<LinearModelSpec>(m, "LinearModelSpec")
      .def_static("identity", &LinearModelSpec::identity, py::arg("theta0"), py::arg("sigma"),
                  py::arg("intercept") = false)
      .def_static("toeplitz", &LinearModelSpec::toeplitz, py::arg("theta0"), py::arg("sigma"), py::arg("rho"),
                  py::arg("intercept") = false)
      .def_readwrite("theta0", &LinearModelSpec::theta0)
      .def_readwrite("sigma", &LinearModelSpec::sigma)
      .def_readwrite("design_covariance", &LinearModelSpec::design_covariance);

  m.def("generate_linear_data", &generate_linear_data, py::arg("spec"), py::arg("n"), py::arg("seed"));
  m.def(
      "parameter_box", [](const Dataset& d, const PenaltySpec& p) { return parameter_box(d, p).bound; },
      py::arg("data"), py::arg("penalty"));

  py::class_<PenaltySpec>(m, "PenaltySpec")
      .def_static("none", &PenaltySpec::none)
      .def_static("l1", &PenaltySpec::l1, py::arg("lam"), py::arg("weights") = Eigen::VectorXd())
      .def_static("ridge", &PenaltySpec::ridge, py::arg("lambda2"), py::arg("weights") = Eigen::VectorXd())
      .def_static("elastic_net", &PenaltySpec::elastic_net, py::arg("lambda1"), py::arg("lambda2"),
                  py::arg("weights") = Eigen::VectorXd())
      .def_static("adaptive_l1", &PenaltySpec::adaptive_l1, py::arg("lam"), py::arg("init"),
                  py::arg("base_weights") = Eigen::VectorXd())
      .def_property_readonly("kind", [](const PenaltySpec& p) { return std::string(to_string(p.kind)); })
      .def_readonly("smooth", &PenaltySpec::smooth)
      .def_readonly("m", &PenaltySpec::m)
      .def("value", &PenaltySpec::value)
      .def("gradient", &PenaltySpec::gradient)
      .def("hessian", &PenaltySpec::hessian);

  m.def("smooth_approx", &smooth_approx, py::arg("penalty"), py::arg("m"));
  m.def(
      "sobolev_distance",
      [](int mm, double lam, double bound, double step, double exclude) {
        const SobolevReport r = sobolev_distance(mm, lam, SobolevGrid{bound, step}, exclude);
        return py::make_tuple(r.order0, r.order1, r.order2);
      },
      py::arg("m"), py::arg("lam"), py::arg("bound") = 1.0, py::arg("step") = 1e-3, py::arg("exclude_radius") = 0.1,
      "(order0, order1, order2) squared distances between the smoothed and exact l1 penalty");

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("theta_hat", &FitResult::theta_hat)
      .def_readonly("objective", &FitResult::objective)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("active_set", &FitResult::active_set)
      .def_readonly("condition_warning", &FitResult::condition_warning);

  m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("gamma"));
  m.def(
      "lasso_cd",
      [](const Dataset& d, double lam, double tol, long max_sweeps) {
        return lasso_cd(d, lam, SolverOptions{tol, max_sweeps});
      },
      py::arg("data"), py::arg("lam"), py::arg("tol") = 1e-8, py::arg("max_sweeps") = 100000);
  m.def(
      "elastic_net",
      [](const Dataset& d, double l1, double l2, double tol, long max_sweeps) {
        return elastic_net(d, l1, l2, SolverOptions{tol, max_sweeps});
      },
      py::arg("data"), py::arg("lambda1"), py::arg("lambda2"), py::arg("tol") = 1e-8, py::arg("max_sweeps") = 100000);
  m.def(
      "adaptive_lasso",
      [](const Dataset& d, double lam) {
        const AdaptiveFit f = adaptive_lasso(d, lam);
        return py::make_tuple(f.init, f.final);
      },
      py::arg("data"), py::arg("lam"), "(init, final) fits of the two-stage estimator");
  m.def("ridge_init", &ridge_init, py::arg("data"), py::arg("lambda2"));

  m.def(
      "empirical_z", [](const Dataset& d, const PenaltySpec& p, const Eigen::VectorXd& t) { return ZSystem(d, p).value(t); },
      py::arg("data"), py::arg("penalty"), py::arg("theta"));
  m.def(
      "z_jacobian",
      [](const Dataset& d, const PenaltySpec& p, const Eigen::VectorXd& t) { return ZSystem(d, p).jacobian(t); },
      py::arg("data"), py::arg("penalty"), py::arg("theta"));
  m.def(
      "ranking_z",
      [](const Dataset& d, const PenaltySpec& p, const Eigen::VectorXd& t, bool direct) {
        const RankingZSystem rz(d, p);
        return direct ? rz.value_direct(t) : rz.value(t);
      },
      py::arg("data"), py::arg("penalty"), py::arg("theta"), py::arg("direct") = false);
  m.def(
      "solve_z",
      [](const Dataset& d, const PenaltySpec& p, const Eigen::VectorXd& start) {
        const NewtonResult r = newton_solve(ZSystem(d, p), start);
        return py::make_tuple(r.theta, r.converged);
      },
      py::arg("data"), py::arg("penalty"), py::arg("start"), "Damped Newton solve of Z_n(theta) = 0");

  m.def(
      "influence_curve",
      [](const Dataset& d, const Eigen::VectorXd& t, const PenaltySpec& p) { return influence_curve(d, t, p).psi; },
      py::arg("data"), py::arg("theta_ref"), py::arg("penalty"), "n x p matrix of influence-curve rows");
  m.def(
      "adaptive_lasso_ic",
      [](const Dataset& d, double lam, int mm) {
        AdaptiveFit f = adaptive_lasso(d, lam);
        return adaptive_lasso_ic_rows(d, f, lam, mm);
      },
      py::arg("data"), py::arg("lam"), py::arg("m") = 64);
  m.def("one_step", &one_step, py::arg("theta_tilde"), py::arg("data"), py::arg("penalty"));
  m.def(
      "ic_moment_checks",
      [](const Dataset& d, const Eigen::VectorXd& t, const PenaltySpec& p, const LinearModelSpec* spec) {
        const ICCheckReport r = ic_moment_checks(influence_curve(d, t, p), d, spec);
        py::dict out;
        out["mean_psi"] = r.mean_psi;
        out["mean_psi_se"] = r.mean_psi_se;
        out["cond_i"] = r.cond_i;
        out["cond_ii"] = r.cond_ii;
        out["cond_iii"] = r.cond_iii ? py::object(py::bool_(*r.cond_iii)) : py::object(py::none());
        out["cond_iii_matrix"] = r.cond_iii_matrix ? py::cast(*r.cond_iii_matrix) : py::object(py::none());
        return out;
      },
      py::arg("data"), py::arg("theta_ref"), py::arg("penalty"), py::arg("spec") = nullptr);

  m.def("lambda_schedule", &lambda_schedule, py::arg("n"), py::arg("p"), py::arg("c") = 1.0);
  m.def("mix_seed", &mix_seed, py::arg("master"), py::arg("n"), py::arg("rep"));
  def_experiment(m, "remainder_scaling_experiment", remainder_scaling_experiment,
                 "Mean ||theta_hat - theta0 - mean psi|| across n with its log-log slope");
  def_experiment(m, "normality_experiment", normality_experiment,
                 "Covariance of sqrt(n)(theta_hat - theta0) at the largest n against the sandwich");
  def_experiment(m, "onestep_experiment", onestep_experiment,
                 "Gap between the one-step iterate and the full solve across n");
  m.def(
      "ic_convergence",
      [](const Dataset& d, double lam, const std::vector<int>& m_grid) {
        return to_python(results_json(ic_convergence_experiment(d, lam, m_grid)));
      },
      py::arg("data"), py::arg("lam"), py::arg("m_grid"));

  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& values, const std::string& out) {
        ExperimentConfig cfg;
        for (const auto& [k, v] : values) cfg.set(k, v);
        std::ostringstream err;
        int status = 0;
        {
          py::gil_scoped_release release;
          status = cli::run(command, cfg, out, err);
        }
        return py::make_tuple(status, err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("out"),
      "Run a CLI command; returns (exit status, messages)");
}
