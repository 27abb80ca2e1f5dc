#include "regm/penalty.hpp"

#include <cmath>
#include <limits>

#include "regm/csv.hpp"
#include "regm/error.hpp"

namespace regm {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::ridge: return "ridge";
    case PenaltyKind::elastic_net: return "elastic_net";
    case PenaltyKind::adaptive_l1: return "adaptive_l1";
  }
  return "?";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "l1") return PenaltyKind::l1;
  if (name == "ridge") return PenaltyKind::ridge;
  if (name == "elastic_net" || name == "en") return PenaltyKind::elastic_net;
  if (name == "adaptive_l1") return PenaltyKind::adaptive_l1;
  throw ConfigError("unknown penalty kind '" + std::string(name) + "'");
}

PenaltySpec PenaltySpec::none() { return ridge(0.0); }

PenaltySpec PenaltySpec::l1(double lambda, Eigen::VectorXd weights) {
  PenaltySpec p;
  p.kind = PenaltyKind::l1;
  p.lambda1 = lambda;
  p.weights = std::move(weights);
  return p;
}

PenaltySpec PenaltySpec::ridge(double lambda2, Eigen::VectorXd weights) {
  PenaltySpec p;
  p.kind = PenaltyKind::ridge;
  p.lambda2 = lambda2;
  p.weights = std::move(weights);
  return p;
}

PenaltySpec PenaltySpec::elastic_net(double lambda1, double lambda2, Eigen::VectorXd weights) {
  PenaltySpec p;
  p.kind = PenaltyKind::elastic_net;
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.weights = std::move(weights);
  return p;
}

PenaltySpec PenaltySpec::adaptive_l1(double lambda, const Eigen::VectorXd& init,
                                     const Eigen::VectorXd& base_weights) {
  PenaltySpec p;
  p.kind = PenaltyKind::adaptive_l1;
  p.lambda1 = lambda;
  p.weights.resize(init.size());
  for (Eigen::Index j = 0; j < init.size(); ++j) {
    const double base = base_weights.size() == 0 ? 1.0 : base_weights[j];
    if (base == 0.0) {
      p.weights[j] = 0.0;
    } else if (init[j] == 0.0) {
      p.weights[j] = std::numeric_limits<double>::infinity();
    } else {
      p.weights[j] = base / std::abs(init[j]);
    }
  }
  return p;
}

double PenaltySpec::l1_coefficient() const {
  return kind == PenaltyKind::ridge ? 0.0 : lambda1;
}

double PenaltySpec::l2_coefficient() const {
  return (kind == PenaltyKind::ridge || kind == PenaltyKind::elastic_net) ? lambda2 : 0.0;
}

void PenaltySpec::validate(Eigen::Index p) const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw Error("penalty parameters must be finite and non-negative");
  }
  if (weights.size() != 0 && weights.size() != p) {
    throw Error("penalty weight vector has length " + std::to_string(weights.size()) +
                ", expected " + std::to_string(p));
  }
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (!(weights[j] >= 0.0)) throw Error("penalty weights must be non-negative");
  }
  if (smooth && m < 1) throw Error("smoothing index m must be >= 1");
}

double smooth_abs(double t, int m) { return t * std::tanh(m * t); }

double smooth_abs_d1(double t, int m) {
  const double c = std::cosh(m * t);
  return std::tanh(m * t) + m * t / (c * c);
}

double smooth_abs_d2(double t, int m) {
  const double c = std::cosh(m * t);
  const double sech2 = 1.0 / (c * c);
  return 2.0 * m * sech2 * (1.0 - m * t * std::tanh(m * t));
}

namespace {

bool frozen(double w) { return std::isinf(w); }

}  // namespace

bool PenaltySpec::differentiable_at(const Eigen::VectorXd& theta) const {
  const double a = l1_coefficient();
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double w = weight(j);
    if (frozen(w)) return false;
    if (!smooth && a > 0.0 && w > 0.0 && theta[j] == 0.0) return false;
  }
  return true;
}

double PenaltySpec::value(const Eigen::VectorXd& theta) const {
  const double a = l1_coefficient();
  const double b = l2_coefficient();
  double total = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double w = weight(j);
    const double t = theta[j];
    if (frozen(w)) {
      if (t != 0.0 && a > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    if (w == 0.0) continue;
    if (a > 0.0) total += a * w * (smooth ? smooth_abs(t, m) : std::abs(t));
    if (b > 0.0) total += b * w * t * t;
  }
  return total;
}

Eigen::VectorXd PenaltySpec::gradient(const Eigen::VectorXd& theta) const {
  const double a = l1_coefficient();
  const double b = l2_coefficient();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double w = weight(j);
    const double t = theta[j];
    if (frozen(w)) throw Error("coordinate " + std::to_string(j) + " is frozen at zero; restrict to the active set");
    if (w == 0.0) continue;
    if (a > 0.0) {
      if (smooth) {
        g[j] += a * w * smooth_abs_d1(t, m);
      } else {
        if (t == 0.0) throw Error("subgradient ambiguity; use smooth approximation");
        g[j] += a * w * (t > 0.0 ? 1.0 : -1.0);
      }
    }
    if (b > 0.0) g[j] += 2.0 * b * w * t;
  }
  return g;
}

Eigen::VectorXd PenaltySpec::hessian_diagonal(const Eigen::VectorXd& theta) const {
  const double a = l1_coefficient();
  const double b = l2_coefficient();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double w = weight(j);
    const double t = theta[j];
    if (frozen(w)) throw Error("coordinate " + std::to_string(j) + " is frozen at zero; restrict to the active set");
    if (w == 0.0) continue;
    if (a > 0.0) {
      if (smooth) {
        h[j] += a * w * smooth_abs_d2(t, m);
      } else if (t == 0.0) {
        throw Error("subgradient ambiguity; use smooth approximation");
      }
    }
    if (b > 0.0) h[j] += 2.0 * b * w;
  }
  return h;
}

Eigen::MatrixXd PenaltySpec::hessian(const Eigen::VectorXd& theta) const {
  return hessian_diagonal(theta).asDiagonal();
}

PenaltySpec PenaltySpec::restrict(const std::vector<Eigen::Index>& coords) const {
  PenaltySpec out = *this;
  if (weights.size() != 0) {
    out.weights.resize(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t k = 0; k < coords.size(); ++k) out.weights[static_cast<Eigen::Index>(k)] = weights[coords[k]];
  }
  return out;
}

PenaltyValue evaluate_penalty(const PenaltySpec& penalty, const Eigen::VectorXd& theta, int order) {
  penalty.validate(theta.size());
  switch (order) {
    case 0: return penalty.value(theta);
    case 1: return penalty.gradient(theta);
    case 2: return penalty.hessian(theta);
    default: throw Error("penalty order must be 0, 1 or 2");
  }
}

PenaltySpec smooth_approx(const PenaltySpec& penalty, int m) {
  if (m < 1) throw Error("smoothing index m must be >= 1");
  if (penalty.kind == PenaltyKind::ridge) throw Error("ridge penalty is already smooth");
  PenaltySpec out = penalty;
  out.smooth = true;
  out.m = m;
  return out;
}

namespace {

// Trapezoid rule on [lo, hi] with a step no larger than `step`.
template <class F>
double trapezoid(F&& f, double lo, double hi, double step) {
  if (hi <= lo) return 0.0;
  const auto steps = static_cast<long>(std::ceil((hi - lo) / step - 1e-9));
  const long k = std::max(1L, steps);
  const double h = (hi - lo) / static_cast<double>(k);
  double sum = 0.5 * (f(lo) + f(hi));
  for (long i = 1; i < k; ++i) sum += f(lo + h * static_cast<double>(i));
  return sum * h;
}

}  // namespace

SobolevReport sobolev_distance(int m, double lambda, const SobolevGrid& grid, double exclude_radius) {
  if (m < 1) throw Error("smoothing index m must be >= 1");
  if (!(grid.bound > 0.0) || !(grid.step > 0.0)) throw Error("grid bound and step must be positive");
  if (!(exclude_radius >= 0.0)) throw Error("exclude radius must be non-negative");
  if (exclude_radius >= grid.bound) throw Error("exclude radius must be smaller than the grid bound");
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");

  // Integrands are even in t; integrate over [r, B] and double. On the
  // positive side |t| = t and its derivative is 1.
  const double lo = exclude_radius;
  const double hi = grid.bound;
  auto d0 = [&](double t) {
    const double d = lambda * (smooth_abs(t, m) - t);
    return d * d;
  };
  auto d1 = [&](double t) {
    const double d = lambda * (smooth_abs_d1(t, m) - 1.0);
    return d * d;
  };
  auto d2 = [&](double t) {
    const double d = lambda * smooth_abs_d2(t, m);
    return d * d;
  };

  SobolevReport r;
  r.m = m;
  r.lambda = lambda;
  r.grid = grid;
  r.exclude_radius = exclude_radius;
  r.order0 = 2.0 * trapezoid(d0, lo, hi, grid.step);
  r.order1 = 2.0 * trapezoid(d1, lo, hi, grid.step);
  r.order2 = 2.0 * trapezoid(d2, lo, hi, grid.step);
  return r;
}

std::string sobolev_csv_header() { return "m,lambda,order0,order1,order2,exclude_radius"; }

std::string sobolev_csv_row(const SobolevReport& r) {
  return join_row({std::to_string(r.m), format_double(r.lambda), format_double(r.order0),
                   format_double(r.order1), format_double(r.order2), format_double(r.exclude_radius)});
}

}  // namespace regm
