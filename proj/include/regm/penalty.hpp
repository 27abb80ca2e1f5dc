#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace regm {

enum class PenaltyKind { l1, ridge, elastic_net, adaptive_l1 };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(std::string_view name);

/// Separable convex penalty
///
///   J(theta) = lambda1 * sum_j w_j a(theta_j) + lambda2 * sum_j w_j theta_j^2
///
/// where a(t) = |t| for the exact penalty and a(t) = t tanh(m t) once smoothed.
/// `lambda1` is ignored for ridge, `lambda2` is ignored for l1/adaptive_l1.
/// An empty weight vector means all ones.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::l1;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Eigen::VectorXd weights;
  bool smooth = false;
  int m = 1;

  static PenaltySpec none();
  static PenaltySpec l1(double lambda, Eigen::VectorXd weights = {});
  static PenaltySpec ridge(double lambda2, Eigen::VectorXd weights = {});
  static PenaltySpec elastic_net(double lambda1, double lambda2, Eigen::VectorXd weights = {});
  /// Weights 1/|init_j| scaled by `base_weights` (ones if empty); coordinates
  /// with init_j == 0 get an infinite weight and are held at zero by solvers.
  static PenaltySpec adaptive_l1(double lambda, const Eigen::VectorXd& init,
                                 const Eigen::VectorXd& base_weights = {});

  double weight(Eigen::Index j) const { return weights.size() == 0 ? 1.0 : weights[j]; }
  /// Coefficient on a(theta_j), zero for ridge.
  double l1_coefficient() const;
  /// Coefficient on theta_j^2, zero for l1 and adaptive_l1.
  double l2_coefficient() const;
  /// True when gradient and Hessian exist at theta.
  bool differentiable_at(const Eigen::VectorXd& theta) const;

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  /// Diagonal of the Hessian (the penalty is separable).
  Eigen::VectorXd hessian_diagonal(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

  /// Restriction to a subset of coordinates (weights follow the coordinates).
  PenaltySpec restrict(const std::vector<Eigen::Index>& coords) const;

  void validate(Eigen::Index p) const;
};

using PenaltyValue = std::variant<double, Eigen::VectorXd, Eigen::MatrixXd>;

/// order 0 -> value, 1 -> gradient, 2 -> Hessian.
PenaltyValue evaluate_penalty(const PenaltySpec& penalty, const Eigen::VectorXd& theta, int order);

/// Smooth surrogate of |t|: t tanh(m t), and its first two derivatives.
double smooth_abs(double t, int m);
double smooth_abs_d1(double t, int m);
double smooth_abs_d2(double t, int m);

/// Replaces |.| by t tanh(m t) in the l1 part. Accepts l1, adaptive_l1 and
/// elastic_net; ridge has nothing to smooth and is rejected.
PenaltySpec smooth_approx(const PenaltySpec& penalty, int m);

struct SobolevGrid {
  double bound = 1.0;  // symmetric interval [-bound, bound]
  double step = 1e-3;

  /// Defaults tied to a parameter-box bound: step B/1000.
  static SobolevGrid from_box(double bound) { return {bound, bound / 1000.0}; }
};

/// Per-order squared L2 distances between lambda * t tanh(m t) and lambda |t|
/// on the grid, with |t| < exclude_radius removed from every order.
struct SobolevReport {
  int m = 1;
  double lambda = 0.0;
  double order0 = 0.0;
  double order1 = 0.0;
  double order2 = 0.0;
  SobolevGrid grid;
  double exclude_radius = 0.0;
};

SobolevReport sobolev_distance(int m, double lambda, const SobolevGrid& grid, double exclude_radius);

/// `m,lambda,order0,order1,order2,exclude_radius`
std::string sobolev_csv_header();
std::string sobolev_csv_row(const SobolevReport& report);

}  // namespace regm
