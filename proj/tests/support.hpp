#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "regm/model.hpp"

namespace regm::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = z(rng);
  return M;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return scale * random_matrix(n, 1, rng).col(0);
}

inline Dataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd theta = random_vector(p, rng, 2.0);
  Eigen::VectorXd Y = X * theta + random_vector(n, rng);
  return Dataset(std::move(X), std::move(Y));
}

/// X with X^T X = n I: orthonormal columns from a QR factorisation, scaled by sqrt(n).
inline Dataset orthonormal_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, p, rng));
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  Eigen::MatrixXd X = std::sqrt(static_cast<double>(n)) * Q;
  Eigen::VectorXd Y = X * random_vector(p, rng, 2.0) + random_vector(n, rng);
  return Dataset(std::move(X), std::move(Y));
}

/// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

/// Central differences of a vector function; column j is d f / d x_j.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::MatrixXd J(x.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    J.col(j) = (f(a) - f(b)) / (2 * h);
  }
  return J;
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Cyclic coordinate descent written directly on
/// (1/n)||Y - X b||^2 + l1 ||b||_1 + l2 ||b||^2, without augmentation.
inline Eigen::VectorXd naive_en_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double l1, double l2) {
  const double n = static_cast<double>(X.rows());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd r = Y;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double delta = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double a = X.col(j).squaredNorm() / n;
      const double z = X.col(j).dot(r) / n + a * b[j];
      const double s = z > l1 / 2 ? z - l1 / 2 : z < -l1 / 2 ? z + l1 / 2 : 0.0;
      const double nb = s / (a + l2);
      r -= X.col(j) * (nb - b[j]);
      delta = std::max(delta, std::abs(nb - b[j]));
      b[j] = nb;
    }
    if (delta < 1e-14) break;
  }
  return b;
}

}  // namespace regm::testing
