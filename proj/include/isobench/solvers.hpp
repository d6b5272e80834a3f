#pragma once

#include <chrono>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isobench/prox.hpp"

namespace isobench {

enum class Algorithm { Ist, IstWide, Psd, Gpsr, L1ls, Fista };

std::string_view to_string(Algorithm algo);
/// Accepts the names produced by to_string. Throws std::invalid_argument.
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();
/// True for algorithms that work on the l1-ball constrained form.
bool is_constrained(Algorithm algo);

/// Numerical failure inside a step (stalled line search, barrier violation).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One iterative scheme's full state. Every iterate starts at x = 0; each
/// step() advances one iteration and charges every operator application it
/// makes to cost().
class Solver {
 public:
  virtual ~Solver() = default;

  void step();

  Algorithm algorithm() const { return algo_; }
  const Problem& problem() const { return prob_; }
  const Vector& x() const { return x_; }
  std::uint64_t cost() const { return cost_.units(); }
  std::size_t iterations() const { return iterations_; }
  /// Set when a step found the iterate stationary; further steps still charge cost.
  bool converged() const { return converged_; }

 protected:
  Solver(Algorithm algo, Problem prob);

  virtual void do_step() = 0;

  Vector forward(const Eigen::Ref<const Vector>& v) { return apply(prob_.K(), v, Apply::Forward, cost_); }
  Vector adjoint(const Eigen::Ref<const Vector>& v) { return apply(prob_.K(), v, Apply::Adjoint, cost_); }

  Algorithm algo_;
  Problem prob_;
  Vector x_;
  CostCounter cost_;
  std::size_t iterations_ = 0;
  bool converged_ = false;
};

/// x <- S[lam w](x + w K^T(y - Kx)). w = 1 is plain IST; the widened variant
/// uses w = 2, which is IST on the operator rescaled to 0.999 sqrt(2) with data
/// and penalty rescaled so the minimizer is unchanged.
class IstSolver final : public Solver {
 public:
  explicit IstSolver(Problem prob, bool wide = false);

 private:
  void do_step() override;
  double step_scale_;
};

/// x <- P_rho(x + beta r), r = K^T(y - Kx), beta = ||r||^2/||Kr||^2.
class PsdSolver final : public Solver {
 public:
  explicit PsdSolver(Problem prob);
  double last_beta() const { return beta_; }

 private:
  void do_step() override;
  double beta_ = 0.0;
};

/// GPSR-Basic on q(u, v) = ||K(u - v) - y||^2 + 2 lambda 1^T(u + v), u, v >= 0:
/// projected gradient step with Armijo backtracking along the projection arc.
class GpsrSolver final : public Solver {
 public:
  struct Params {
    double armijo = 0.1;
    double shrink = 0.5;
    int max_trials = 50;
    double alpha_min = 1e-30;
    double alpha_max = 1e30;
  };
  explicit GpsrSolver(Problem prob) : GpsrSolver(std::move(prob), Params{}) {}
  GpsrSolver(Problem prob, Params params);

  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }
  /// q at the current (u, v); uses the cached Kx, no operator cost.
  double objective() const;

 private:
  void do_step() override;
  Params params_;
  Vector u_, v_;
  Vector kx_;    // K(u - v)
  Vector grad_;  // K^T(Kx - y)
  bool grad_valid_ = false;
};

/// Truncated-Newton interior point method for
///   minimize ||Kx - y||^2 + 2 lambda sum(u)  s.t.  -u <= x <= u
/// with log barrier weight 1/t, directions from diagonally preconditioned CG.
class L1lsSolver final : public Solver {
 public:
  struct Params {
    double mu = 2.0;           // barrier increase factor
    double cg_tol_cap = 0.1;
    double cg_tol_gap = 0.3;
    int cg_max_iter = 200;
    double armijo = 0.01;
    double shrink = 0.5;
    int max_backtracks = 100;
    double gap_floor = 1e-15;  // relative duality gap treated as converged
  };
  explicit L1lsSolver(Problem prob) : L1lsSolver(std::move(prob), Params{}) {}
  L1lsSolver(Problem prob, Params params);

  const Vector& u() const { return u_; }
  double barrier_t() const { return t_; }
  /// Duality gap at the current iterate as computed in the last step.
  double duality_gap() const { return gap_; }
  bool last_cg_capped() const { return cg_capped_; }

 private:
  void do_step() override;
  Params params_;
  Vector u_;
  double t_;
  double gap_;
  bool cg_capped_ = false;
  double last_step_ = 0.0;
  Vector colnorm2_;
  Vector dx_warm_;
};

/// Accelerated IST with t(n+1) = (1 + sqrt(1 + 4 t(n)^2)) / 2, t(1) = 1.
class FistaSolver final : public Solver {
 public:
  explicit FistaSolver(Problem prob);
  double t() const { return t_; }

 private:
  void do_step() override;
  Vector x_prev_;
  double t_ = 1.0;
};

/// Factory. For constrained algorithms `prob.mode` must be Constrained.
std::unique_ptr<Solver> make_solver(Algorithm algo, Problem prob);

struct Snapshot {
  std::uint64_t budget = 0;
  std::uint64_t cost = 0;
  std::size_t n = 0;
  double e = 0.0;  // error vs reference (absolute if the reference is zero)
  bool absolute_error = false;
  double F = 0.0;
  double fp_residual = 0.0;
  double wall_seconds = 0.0;
  Vector x;  // kept only when requested
};

struct Trace {
  Algorithm algo = Algorithm::Ist;
  std::vector<Snapshot> snapshots;
  bool failed = false;
  std::string error;
};

struct RunOptions {
  bool keep_iterates = false;
};

/// ||x - ref|| / ||ref||, or ||x|| when ref is zero (second member true).
std::pair<double, bool> relative_error(const Eigen::Ref<const Vector>& x,
                                       const Eigen::Ref<const Vector>& ref);

/// Steps `solver` and snapshots the first state whose cost reaches each budget.
/// Budgets must be strictly increasing. A step error ends the run with a
/// partial trace (failed = true). Diagnostics do not charge the solver.
Trace run_budgeted(Solver& solver, const std::vector<std::uint64_t>& budgets,
                   const std::optional<Vector>& reference, RunOptions opts = {});

/// CSV: algo,lambda_over_lambda_max_log2,cost,n,e,F,fp_residual,wall_seconds
void write_trace_csv(const Trace& trace, double k_log2, std::ostream& out, bool header,
                     bool wall_clock = true);

}  // namespace isobench
