#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isobench/homotopy.hpp"

namespace isobench {

enum class ScheduleKind { GeometricLambda, ArithmeticRho };

/// Precomputed continuation parameters, values[0..N].
///   geometric:  lambda_n = lambda_max alpha^n, alpha = (lambda_stop/lambda_max)^(1/N)
///   arithmetic: rho_n = n rho_stop / N
struct Schedule {
  ScheduleKind kind = ScheduleKind::GeometricLambda;
  std::size_t N = 0;
  double lambda_max = 0.0;
  double terminal = 0.0;
  std::vector<double> values;

  static Schedule geometric(double lambda_max, double lambda_stop, std::size_t N);
  static Schedule arithmetic(double rho_stop, std::size_t N, double lambda_max = 0.0);

  double ratio() const;
};

struct WarmSample {
  double parameter = 0.0;  // lambda_n or rho_n
  Vector x;
  double e = 0.0;          // NaN when no reference covers this point
  bool absolute_error = false;
  std::uint64_t cost = 0;
};

/// Fixed-point continuation: one thresholded Landweber step per schedule
/// point. Returns N + 1 samples (n = 0 is x = 0). `reference` may be null.
std::vector<WarmSample> fpc_run(const Problem& prob, const Schedule& schedule,
                                const HomotopyPath* reference);

/// Adaptive projected steepest descent: one exact-step descent plus projection
/// onto the growing l1 ball per schedule point. Errors are measured against
/// xtilde(rho_n) located on the reference path by bisection.
std::vector<WarmSample> apsd_run(const Problem& prob, const Schedule& schedule,
                                 const HomotopyPath* reference);

struct ParetoPoint {
  double l1_norm = 0.0;
  double residual_sq = 0.0;
};

/// (||x||_1, ||Kx - y||^2) per sample, no deduplication.
std::vector<ParetoPoint> pareto_points(const std::vector<WarmSample>& samples,
                                       const Problem& prob);
std::vector<ParetoPoint> pareto_points(const std::vector<Vector>& xs, const Problem& prob);

/// CSV: method,n,lambda_or_rho,e,l1_norm,residual_sq,cost
void write_warmstart_csv(const std::string& method, const std::vector<WarmSample>& samples,
                         const Problem& prob, std::ostream& out, bool header);

}  // namespace isobench
