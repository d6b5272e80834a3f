#include "isobench/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace isobench {

Problem Problem::penalized(std::shared_ptr<const Operator> op, Vector y, double lambda) {
  Problem p{std::move(op), std::move(y), lambda, 0.0, Mode::Penalized};
  p.validate();
  return p;
}

Problem Problem::constrained(std::shared_ptr<const Operator> op, Vector y, double rho,
                             double matched_lambda) {
  Problem p{std::move(op), std::move(y), matched_lambda, rho, Mode::Constrained};
  p.validate();
  return p;
}

void Problem::validate() const {
  if (!op) throw std::invalid_argument("problem: missing operator");
  if (y.size() != op->rows()) throw std::invalid_argument("problem: data length must equal operator rows");
  if (!y.allFinite()) throw std::invalid_argument("problem: data must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("problem: lambda must be >= 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("problem: rho must be >= 0");
}

double soft_threshold(double u, double lam) {
  if (!(lam >= 0.0)) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
  if (u > lam) return u - lam;
  if (u < -lam) return u + lam;
  if (std::isnan(u)) return u;
  return 0.0;
}

Vector soft_threshold(const Eigen::Ref<const Vector>& u, double lam) {
  if (!(lam >= 0.0)) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = soft_threshold(u[i], lam);
  return out;
}

double lambda_max(const Operator& k, const Eigen::Ref<const Vector>& y, CostCounter& cost) {
  const Vector c = apply(k, y, Apply::Adjoint, cost);
  return c.size() == 0 ? 0.0 : c.cwiseAbs().maxCoeff();
}

L1Projection project_l1_with_threshold(const Eigen::Ref<const Vector>& x, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("project_l1: radius must be >= 0");
  if (x.lpNorm<1>() <= rho) return {Vector(x), 0.0};
  if (rho == 0.0) return {Vector::Zero(x.size()), x.cwiseAbs().maxCoeff()};

  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());

  // Largest k with mags[k-1] > (sum of top k - rho) / k fixes the threshold.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double candidate = (cumsum - rho) / static_cast<double>(k + 1);
    if (mags[k] > candidate) {
      theta = candidate;
    } else {
      break;
    }
  }
  theta = std::max(theta, 0.0);
  return {soft_threshold(x, theta), theta};
}

Vector project_l1(const Eigen::Ref<const Vector>& x, double rho) {
  return project_l1_with_threshold(x, rho).point;
}

double fixed_point_residual(const Problem& prob, const Eigen::Ref<const Vector>& x, CostCounter& cost) {
  const Vector residual = prob.y - apply(prob.K(), x, Apply::Forward, cost);
  const Vector step = x + apply(prob.K(), residual, Apply::Adjoint, cost);
  const Vector diff = x - soft_threshold(step, prob.lambda);
  return diff.norm() / std::max(x.norm(), kResidualFloor);
}

double functional_value(const Problem& prob, const Eigen::Ref<const Vector>& x, CostCounter& cost) {
  const Vector residual = apply(prob.K(), x, Apply::Forward, cost) - prob.y;
  return residual.squaredNorm() + 2.0 * prob.lambda * x.lpNorm<1>();
}

double lambda_of_rho(const Problem& prob, const Eigen::Ref<const Vector>& x_tilde, CostCounter& cost) {
  const Vector residual = prob.y - apply(prob.K(), x_tilde, Apply::Forward, cost);
  return apply(prob.K(), residual, Apply::Adjoint, cost).cwiseAbs().maxCoeff();
}

}  // namespace isobench
