#pragma once

#include <memory>

#include "isobench/operator.hpp"

namespace isobench {

enum class Mode { Penalized, Constrained };

/// Least-squares problem with l1 penalty (F = ||Kx - y||^2 + 2 lambda ||x||_1)
/// or l1-ball constraint ||x||_1 <= rho.
///
/// Solvers read `lambda` in penalized mode and `rho` in constrained mode. The
/// unused field may still carry the matched value of the other formulation;
/// diagnostics (functional value, residual) always use `lambda`.
struct Problem {
  std::shared_ptr<const Operator> op;
  Vector y;
  double lambda = 0.0;
  double rho = 0.0;
  Mode mode = Mode::Penalized;

  static Problem penalized(std::shared_ptr<const Operator> op, Vector y, double lambda);
  static Problem constrained(std::shared_ptr<const Operator> op, Vector y, double rho,
                             double matched_lambda = 0.0);

  const Operator& K() const { return *op; }
  /// Throws std::invalid_argument if dimensions, finiteness or signs are off.
  void validate() const;
};

/// Componentwise S_lam(u). Throws std::invalid_argument for lam < 0.
Vector soft_threshold(const Eigen::Ref<const Vector>& u, double lam);
double soft_threshold(double u, double lam);

/// max_i |(K^T y)_i|.
double lambda_max(const Operator& k, const Eigen::Ref<const Vector>& y, CostCounter& cost);

struct L1Projection {
  Vector point;
  double threshold = 0.0;
};

/// Euclidean projection onto {z : ||z||_1 <= rho}, computed as S_theta(x) with
/// the exact threshold from a sorted scan. Throws std::invalid_argument for rho < 0.
L1Projection project_l1_with_threshold(const Eigen::Ref<const Vector>& x, double rho);
Vector project_l1(const Eigen::Ref<const Vector>& x, double rho);

/// Guard against 0/0 when the minimizer is exactly zero.
inline constexpr double kResidualFloor = 1e-300;

/// ||x - S_lam[x + K^T(y - Kx)]|| / max(||x||, floor). Two units.
double fixed_point_residual(const Problem& prob, const Eigen::Ref<const Vector>& x,
                            CostCounter& cost);

/// F_lambda(x). One unit.
double functional_value(const Problem& prob, const Eigen::Ref<const Vector>& x,
                        CostCounter& cost);

/// max_i |(K^T(y - K x))_i|: the penalty matching a constrained minimizer. Two units.
double lambda_of_rho(const Problem& prob, const Eigen::Ref<const Vector>& x_tilde,
                     CostCounter& cost);

}  // namespace isobench
