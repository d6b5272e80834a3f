#include "isobench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "format.hpp"

namespace isobench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index writes only
// its own slot, so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> LambdaGrid::range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo >= 0.0) || hi < lo) throw std::invalid_argument("grid: need 0 <= lo <= hi and step > 0");
  std::vector<double> ks;
  for (std::size_t i = 0;; ++i) {
    const double k = lo + static_cast<double>(i) * step;
    if (k > hi + 1e-12) break;
    ks.push_back(k);
  }
  return ks;
}

Reference build_reference(const Problem& prob, const std::vector<double>& exponents, const PathLimits& limits) {
  if (exponents.empty()) throw std::invalid_argument("build_reference: empty grid");
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (!(exponents[i] >= 0.0)) throw std::invalid_argument("build_reference: exponents must be >= 0");
    if (i > 0 && exponents[i] <= exponents[i - 1]) throw std::invalid_argument("build_reference: exponents must increase");
  }
  CostCounter scratch;
  const double lam_max = lambda_max(prob.K(), prob.y, scratch);

  Reference ref;
  ref.grid.exponents = exponents;
  for (const double k : exponents) ref.grid.lambdas.push_back(lam_max * std::exp2(-k));

  try {
    ref.path = homotopy_solve(prob, PathStop::at_lambda(ref.grid.lambdas.back()), limits);
  } catch (const DegenerateSupport& e) {
    ref.path = e.partial();
  }

  for (std::size_t i = 0; i < exponents.size(); ++i) {
    const double lam = ref.grid.lambdas[i];
    if (!ref.path.covers(lam)) {
      ref.xbar.emplace_back();
      ref.available.push_back(false);
      ref.residuals.push_back(kNaN);
      ref.grid.support_sizes.push_back(0);
      continue;
    }
    Vector xbar = eval_path(ref.path, lam);
    Problem at = prob;
    at.lambda = lam;
    at.mode = Mode::Penalized;
    const double res = fixed_point_residual(at, xbar, scratch);
    if (!(res <= kReferenceResidualGate)) {
      throw std::runtime_error("build_reference: reference at k=" + detail::fmt_double(exponents[i]) +
                               " fails the residual gate (" + detail::fmt_double(res) + ")");
    }
    ref.grid.support_sizes.push_back(path_support(ref.path, lam).size());
    ref.xbar.push_back(std::move(xbar));
    ref.available.push_back(true);
    ref.residuals.push_back(res);
  }
  return ref;
}

double IsochroneGrid::error(std::size_t k, std::size_t b) const {
  if (k >= cells.size()) return kNaN;
  const auto& snaps = cells[k].trace.snapshots;
  if (cells[k].status == CellStatus::Unavailable || b >= snaps.size()) return kNaN;
  return snaps[b].e;
}

std::vector<std::uint64_t> log_budget_ladder(std::uint64_t lo, std::uint64_t hi, std::size_t count) {
  if (count == 0) throw std::invalid_argument("budget ladder: count must be positive");
  if (lo < 1 || hi < lo) throw std::invalid_argument("budget ladder: need 1 <= lo <= hi");
  std::vector<std::uint64_t> out;
  if (count == 1) return {hi};
  const double llo = std::log10(static_cast<double>(lo));
  const double lhi = std::log10(static_cast<double>(hi));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(count - 1);
    auto b = static_cast<std::uint64_t>(std::llround(std::pow(10.0, llo + f * (lhi - llo))));
    if (i == 0) b = lo;
    if (i + 1 == count) b = hi;
    if (!out.empty() && b <= out.back()) b = out.back() + 1;
    out.push_back(b);
  }
  return out;
}

Problem cell_problem(const Problem& base, const Reference& ref, std::size_t k, Algorithm algo) {
  const double lam = ref.grid.lambdas.at(k);
  if (is_constrained(algo)) {
    return Problem::constrained(base.op, base.y, ref.xbar.at(k).lpNorm<1>(), lam);
  }
  return Problem::penalized(base.op, base.y, lam);
}

IsochroneGrid isochrone(const Problem& prob, Algorithm algo, const Reference& ref,
                        const std::vector<std::uint64_t>& budgets, BenchOptions opts) {
  IsochroneGrid grid;
  grid.algo = algo;
  grid.grid = ref.grid;
  grid.budgets = budgets;
  grid.cells.resize(ref.grid.exponents.size());

  parallel_for(grid.cells.size(), opts.workers, [&](std::size_t k) {
    IsochroneCell& cell = grid.cells[k];
    cell.trace.algo = algo;
    if (!ref.available[k]) {
      cell.status = CellStatus::Unavailable;
      return;
    }
    try {
      auto solver = make_solver(algo, cell_problem(prob, ref, k, algo));
      cell.trace = run_budgeted(*solver, budgets, ref.xbar[k]);
      cell.status = cell.trace.failed ? CellStatus::Failed : CellStatus::Ok;
    } catch (const std::exception& e) {
      cell.status = CellStatus::Failed;
      cell.trace.failed = true;
      cell.trace.error = e.what();
    }
  });
  return grid;
}

CompareResult compare_suite(const Problem& prob, const std::vector<Algorithm>& algos, const Reference& ref,
                            const std::vector<std::uint64_t>& budgets, BenchOptions opts) {
  CompareResult result;
  for (const auto algo : algos) {
    result.grids.push_back(isochrone(prob, algo, ref, budgets, opts));
    const auto& g = result.grids.back();
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
      result.summary.push_back({algo, g.grid.exponents[k], g.final_error(k)});
    }
  }
  return result;
}

void write_isochrone_csv(const IsochroneGrid& grid, std::ostream& out, bool header, bool wall_clock) {
  using detail::fmt_double;
  if (header) out << "algo,k_log2,lambda,support_size,budget,cost,e,F,wall_seconds\n";
  for (std::size_t k = 0; k < grid.cells.size(); ++k) {
    const auto& cell = grid.cells[k];
    const std::string head = std::string(to_string(grid.algo)) + "," + fmt_double(grid.grid.exponents[k]) + "," +
                             fmt_double(grid.grid.lambdas[k]) + "," + std::to_string(grid.grid.support_sizes[k]) + ",";
    for (std::size_t b = 0; b < grid.budgets.size(); ++b) {
      out << head << grid.budgets[b] << ',';
      if (b < cell.trace.snapshots.size()) {
        const auto& s = cell.trace.snapshots[b];
        out << s.cost << ',' << fmt_double(s.e) << ',' << fmt_double(s.F) << ','
            << fmt_double(wall_clock ? s.wall_seconds : 0.0) << '\n';
      } else {
        out << "nan,nan,nan," << (wall_clock ? "nan" : "0") << '\n';
      }
    }
  }
}

std::string summary_json(const CompareResult& result) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& row : result.summary) {
    auto& arr = doc[std::string(to_string(row.algo))];
    nlohmann::ordered_json entry;
    entry["k"] = row.k;
    if (std::isfinite(row.e_final)) {
      entry["e_final"] = row.e_final;
    } else {
      entry["e_final"] = nullptr;
    }
    arr.push_back(std::move(entry));
  }
  return doc.dump();
}

}  // namespace isobench
