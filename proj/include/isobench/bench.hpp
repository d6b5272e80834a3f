#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "isobench/homotopy.hpp"
#include "isobench/solvers.hpp"

namespace isobench {

/// Penalties lambda_k = lambda_max / 2^k with the oracle's support sizes.
struct LambdaGrid {
  std::vector<double> exponents;
  std::vector<double> lambdas;
  std::vector<std::size_t> support_sizes;

  /// Exponents lo, lo + step, ..., <= hi.
  static std::vector<double> range(double lo, double hi, double step);
};

/// Exact minimizers for every grid point, from a single homotopy solve.
struct Reference {
  HomotopyPath path;
  LambdaGrid grid;
  std::vector<Vector> xbar;       // empty vector where unavailable
  std::vector<bool> available;
  std::vector<double> residuals;  // fixed-point residual of each reference
};

/// Residual gate every reference must pass before a benchmark runs.
inline constexpr double kReferenceResidualGate = 1e-8;

/// Solves the path to the smallest grid lambda (or as far as `limits` allow),
/// evaluates it per grid point, and checks the residual gate. Grid points the
/// path does not reach are marked unavailable. Throws std::runtime_error when an
/// available reference fails the gate.
Reference build_reference(const Problem& prob, const std::vector<double>& exponents,
                          const PathLimits& limits = {});

enum class CellStatus { Ok, Failed, Unavailable };

struct IsochroneCell {
  CellStatus status = CellStatus::Ok;
  Trace trace;
};

struct IsochroneGrid {
  Algorithm algo = Algorithm::Ist;
  LambdaGrid grid;
  std::vector<std::uint64_t> budgets;
  std::vector<IsochroneCell> cells;  // one per grid point

  /// e[k][b]; NaN for missing entries.
  double error(std::size_t k, std::size_t b) const;
  double final_error(std::size_t k) const { return error(k, budgets.size() - 1); }
};

/// `count` budgets spaced evenly in log10 between lo and hi, rounded to whole
/// units and made strictly increasing.
std::vector<std::uint64_t> log_budget_ladder(std::uint64_t lo, std::uint64_t hi,
                                             std::size_t count = 10);

struct BenchOptions {
  unsigned workers = 1;
};

/// Problem posed to `algo` at grid point k: penalized at lambda_k, or
/// constrained at rho = ||xbar(lambda_k)||_1.
Problem cell_problem(const Problem& base, const Reference& ref, std::size_t k, Algorithm algo);

/// Fresh run from x = 0 per grid point with snapshots at every budget. Cells
/// run concurrently on `workers` threads; results do not depend on it.
IsochroneGrid isochrone(const Problem& prob, Algorithm algo, const Reference& ref,
                        const std::vector<std::uint64_t>& budgets, BenchOptions opts = {});

struct SummaryRow {
  Algorithm algo;
  double k = 0.0;
  double e_final = 0.0;
};

struct CompareResult {
  std::vector<IsochroneGrid> grids;
  std::vector<SummaryRow> summary;
};

CompareResult compare_suite(const Problem& prob, const std::vector<Algorithm>& algos,
                            const Reference& ref, const std::vector<std::uint64_t>& budgets,
                            BenchOptions opts = {});

/// CSV: algo,k_log2,lambda,support_size,budget,cost,e,F,wall_seconds. With
/// `wall_clock` false the wall column is written as 0 so output is reproducible.
void write_isochrone_csv(const IsochroneGrid& grid, std::ostream& out, bool header,
                         bool wall_clock = true);

/// {"<algo>": [{"k": ..., "e_final": ...}, ...], ...}
std::string summary_json(const CompareResult& result);

}  // namespace isobench
