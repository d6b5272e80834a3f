#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isobench/prox.hpp"

namespace isobench {

enum class PathEventType { Join, Leave };

struct PathEvent {
  PathEventType type;
  Eigen::Index index;
};

/// One support change of the exact solution path.
///
/// `x` is the minimizer at `lambda`; `support`/`signs` describe the active set
/// used on the segment that starts here (after the events were applied).
struct Breakpoint {
  double lambda = 0.0;
  Vector x;
  std::vector<Eigen::Index> support;
  std::vector<int> signs;
  std::vector<PathEvent> events;
  // Cumulative work up to and including this breakpoint.
  std::uint64_t cost_units = 0;
  double flops = 0.0;
  double wall_seconds = 0.0;
};

enum class PathStatus { Complete, Truncated, Degenerate };

/// Piecewise-linear path lambda -> xbar(lambda) from lambda_max down to
/// `lambda_stop`. The terminal point is stored separately from the event
/// breakpoints and closes the last segment.
struct HomotopyPath {
  double lambda_max = 0.0;
  std::vector<Breakpoint> breakpoints;
  double lambda_stop = 0.0;
  Vector x_stop;
  PathStatus status = PathStatus::Complete;
  std::string truncation_reason;

  /// Smallest lambda the path covers.
  double lambda_min_covered() const { return lambda_stop; }
  bool covers(double lam) const;
};

struct PathLimits {
  std::size_t max_breakpoints = 100000;
  std::size_t max_support = 100000;
  double min_lambda = 0.0;
  double kkt_tol = 1e-9;
};

/// Stopping rule: stop at a penalty or at an l1 radius, whichever is given.
struct PathStop {
  std::optional<double> lambda_stop;
  std::optional<double> rho_stop;

  static PathStop at_lambda(double lam) { return {lam, std::nullopt}; }
  static PathStop at_rho(double rho) { return {std::nullopt, rho}; }
};

/// Thrown when the active-set Gram matrix cannot be factored even with jitter.
/// Carries the path computed up to the failing breakpoint.
class DegenerateSupport : public std::runtime_error {
 public:
  explicit DegenerateSupport(HomotopyPath partial)
      : std::runtime_error("degenerate support"), partial_(std::move(partial)) {}
  const HomotopyPath& partial() const { return partial_; }

 private:
  HomotopyPath partial_;
};

/// Homotopy/LARS (lasso variant) exact path. Uses `prob.K()` and `prob.y` only.
HomotopyPath homotopy_solve(const Problem& prob, const PathStop& stop,
                            const PathLimits& limits = {});

/// Linear interpolation between bracketing breakpoints. Throws std::out_of_range
/// outside [lambda_stop, lambda_max].
Vector eval_path(const HomotopyPath& path, double lam);

/// Sorted support of xbar(lambda) read from the event log: the active set of
/// the segment containing lambda, or at a breakpoint the coordinates active on
/// both sides of it.
std::vector<Eigen::Index> path_support(const HomotopyPath& path, double lam);

/// ||xbar(lambda)||_1 along the path (non-increasing in lambda).
double path_l1_norm(const HomotopyPath& path, double lam);

/// Penalty whose minimizer has l1 norm `rho`, by bisection on the path to
/// `tol`. Throws std::out_of_range if rho exceeds the path's coverage.
double path_lambda_for_rho(const HomotopyPath& path, double rho, double tol);

struct ComplexityRow {
  std::size_t support_size = 0;
  std::size_t breakpoint_count = 0;
  std::uint64_t cost_units = 0;
  double flops = 0.0;
  double wall_seconds = 0.0;
};

/// One row per event breakpoint with cumulative work.
std::vector<ComplexityRow> complexity_table(const HomotopyPath& path);
std::vector<ComplexityRow> complexity_table(const Problem& prob, const PathStop& stop,
                                            const PathLimits& limits = {});

/// Least-squares slope of log(flops) against log(support) over rows whose
/// support lies in [s_lo, s_hi]. NaN if fewer than two distinct sizes qualify.
double complexity_slope(const std::vector<ComplexityRow>& rows, std::size_t s_lo,
                        std::size_t s_hi);

/// CSV: j,lambda_j,l1_norm,support_size,event_type,event_index
void write_path_csv(const HomotopyPath& path, std::ostream& out);

const char* to_string(PathEventType type);

}  // namespace isobench
