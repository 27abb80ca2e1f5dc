#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "regm/csv.hpp"
#include "regm/error.hpp"
#include "regm/model.hpp"
#include "regm/penalty.hpp"
#include "regm/solvers.hpp"
#include "support.hpp"

using namespace regm;

TEST_CASE("dataset rejects bad input") {
  CHECK_THROWS_AS(Dataset(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), Error);
  CHECK_THROWS_AS(Dataset(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(2)), Error);
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
  X(0, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset(X, Eigen::VectorXd::Ones(3)), Error);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(Dataset(Z, Eigen::VectorXd::Ones(3), true), Error);
}

TEST_CASE("zero noise gives Y = X theta0") {
  auto spec = LinearModelSpec::identity(Eigen::Vector3d(1, -2, 0.5), 0.0);
  const Dataset d = generate_linear_data(spec, 50, 11);
  CHECK((d.Y() - d.X() * spec.theta0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generation is a pure function of (spec, n, seed)") {
  auto spec = LinearModelSpec::toeplitz(Eigen::Vector3d(1, 0, 2), 1.0, 0.5);
  const Dataset a = generate_linear_data(spec, 40, 7);
  const Dataset b = generate_linear_data(spec, 40, 7);
  const Dataset c = generate_linear_data(spec, 40, 8);
  CHECK(a.X() == b.X());
  CHECK(a.Y() == b.Y());
  CHECK(a.X() != c.X());
}

TEST_CASE("sample covariance of a large identity design") {
  auto spec = LinearModelSpec::identity(Eigen::Vector2d(1, 2), 1.0);
  const Dataset d = generate_linear_data(spec, 10000, 3);
  const Eigen::MatrixXd S = d.X().transpose() * d.X() / 10000.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK((S - I).norm() / I.norm() < 0.05);
}

TEST_CASE("intercept column is prepended") {
  auto spec = LinearModelSpec::identity(Eigen::Vector3d(0.5, 1, -1), 1.0, true);
  const Dataset d = generate_linear_data(spec, 20, 1);
  CHECK(d.p() == 3);
  CHECK(d.X().col(0).isOnes());
  CHECK(d.default_weights()[0] == 0.0);
  CHECK(d.default_weights()[1] == 1.0);
}

TEST_CASE("non positive definite covariance is rejected") {
  LinearModelSpec spec = LinearModelSpec::identity(Eigen::Vector2d(1, 1), 1.0);
  spec.design_covariance << 1, 2, 2, 1;
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK_THROWS_AS(generate_linear_data(spec, 10, 1), Error);
}

TEST_CASE("parameter box") {
  SUBCASE("zero response") {
    Dataset d(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
    CHECK(parameter_box(d, PenaltySpec::l1(1.0)).bound == 0.0);
    CHECK(lasso_cd(d, 1.0).theta_hat.isZero());
  }
  SUBCASE("plug-in arithmetic") {
    // (1/n)||Y||^2 = 4
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 0, 1, 1, 1, 1, -1;
    Dataset d(X, Eigen::Vector4d(2, -2, 2, -2));
    const ParameterBox box = parameter_box(d, PenaltySpec::l1(2.0));
    CHECK(box.bound == doctest::Approx(2.0));
    const auto fit = lasso_cd(d, 2.0);
    CHECK(fit.theta_hat.lpNorm<1>() <= 2.0);
    CHECK(parameter_box(d, PenaltySpec::l1(4.0)).bound == doctest::Approx(1.0));
  }
  SUBCASE("no coercive part") {
    Dataset d = testing::random_dataset(10, 2, 1);
    CHECK_THROWS_WITH_AS(parameter_box(d, PenaltySpec::l1(0.0)), "no coercive penalty; box undefined", Error);
    CHECK_THROWS_AS(parameter_box(d, PenaltySpec::none()), Error);
  }
  SUBCASE("elastic net uses the l1 part") {
    Dataset d = testing::random_dataset(30, 3, 2);
    CHECK(parameter_box(d, PenaltySpec::elastic_net(0.5, 0.3)).bound ==
          doctest::Approx(parameter_box(d, PenaltySpec::l1(0.5)).bound));
  }
  SUBCASE("solver output lies in the box") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Dataset d = testing::random_dataset(25, 4, 100 + s);
      for (double lam : {0.05, 0.5, 3.0}) {
        const auto fit = lasso_cd(d, lam);
        CHECK(parameter_box(d, PenaltySpec::l1(lam)).contains(fit.theta_hat));
      }
    }
  }
}

TEST_CASE("dataset csv round trip is exact") {
  Dataset d = testing::random_dataset(15, 3, 9);
  const auto path = std::filesystem::temp_directory_path() / "regm_roundtrip.csv";
  write_dataset_csv(d, path);
  const Dataset e = read_dataset_csv(path);
  CHECK(d.X() == e.X());
  CHECK(d.Y() == e.Y());
  std::filesystem::remove(path);
}

TEST_CASE("shortest round-trip formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}
