#include "isobench/solvers.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "format.hpp"

namespace isobench {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 6> kNames{{
    {Algorithm::Ist, "ist"},
    {Algorithm::IstWide, "ist_wide"},
    {Algorithm::Psd, "psd"},
    {Algorithm::Gpsr, "gpsr"},
    {Algorithm::L1ls, "l1ls"},
    {Algorithm::Fista, "fista"},
}};

}  // namespace

std::string_view to_string(Algorithm algo) {
  for (const auto& [a, name] : kNames) {
    if (a == algo) return name;
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (const auto& [a, n] : kNames) {
    if (n == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algos{Algorithm::Ist,  Algorithm::IstWide, Algorithm::Psd,
                                            Algorithm::Gpsr, Algorithm::L1ls,    Algorithm::Fista};
  return algos;
}

bool is_constrained(Algorithm algo) { return algo == Algorithm::Psd; }

Solver::Solver(Algorithm algo, Problem prob) : algo_(algo), prob_(std::move(prob)) {
  prob_.validate();
  x_ = Vector::Zero(prob_.K().cols());
}

void Solver::step() {
  const auto before = cost_.units();
  do_step();
  ++iterations_;
  if (cost_.units() <= before) throw SolverError(std::string(to_string(algo_)) + ": step made no operator applications");
  if (!x_.allFinite()) throw SolverError(std::string(to_string(algo_)) + ": non-finite iterate");
}

// ---------------------------------------------------------------------------
// Iterative soft-thresholding

IstSolver::IstSolver(Problem prob, bool wide)
    : Solver(wide ? Algorithm::IstWide : Algorithm::Ist, std::move(prob)), step_scale_(1.0) {
  if (prob_.mode != Mode::Penalized) throw std::invalid_argument("ist: needs a penalized problem");
  if (wide) {
    const double top = prob_.K().singular_values()[0];
    step_scale_ = (kWideNormTarget / top) * (kWideNormTarget / top);
  }
}

void IstSolver::do_step() {
  const Vector residual = prob_.y - forward(x_);
  const Vector grad = adjoint(residual);
  Vector next = soft_threshold(x_ + step_scale_ * grad, step_scale_ * prob_.lambda);
  converged_ = next == x_;
  x_ = std::move(next);
}

// ---------------------------------------------------------------------------
// Projected steepest descent

PsdSolver::PsdSolver(Problem prob) : Solver(Algorithm::Psd, std::move(prob)) {
  if (prob_.mode != Mode::Constrained) throw std::invalid_argument("psd: needs a constrained problem");
}

void PsdSolver::do_step() {
  const Vector r = adjoint(prob_.y - forward(x_));
  const double rr = r.squaredNorm();
  if (rr == 0.0) {
    converged_ = true;
    return;
  }
  const Vector kr = forward(r);
  const double krkr = kr.squaredNorm();
  if (krkr == 0.0) {
    converged_ = true;
    return;
  }
  beta_ = rr / krkr;
  Vector next = project_l1(x_ + beta_ * r, prob_.rho);
  converged_ = next == x_;
  x_ = std::move(next);
}

// ---------------------------------------------------------------------------
// GPSR-Basic

GpsrSolver::GpsrSolver(Problem prob, Params params)
    : Solver(Algorithm::Gpsr, std::move(prob)), params_(params) {
  if (prob_.mode != Mode::Penalized) throw std::invalid_argument("gpsr: needs a penalized problem");
  const Eigen::Index p = prob_.K().cols();
  u_ = Vector::Zero(p);
  v_ = Vector::Zero(p);
  kx_ = Vector::Zero(prob_.K().rows());
}

double GpsrSolver::objective() const {
  return (kx_ - prob_.y).squaredNorm() + 2.0 * prob_.lambda * (u_.sum() + v_.sum());
}

void GpsrSolver::do_step() {
  const double lam = prob_.lambda;
  if (!grad_valid_) {
    grad_ = adjoint(kx_ - prob_.y);
    grad_valid_ = true;
  }
  const Eigen::Index p = u_.size();
  // dq/du = 2(g + lam), dq/dv = 2(-g + lam)
  const Vector gu = 2.0 * (grad_.array() + lam).matrix();
  const Vector gv = 2.0 * (lam - grad_.array()).matrix();

  // Gradient restricted to components that can move.
  Vector hu(p), hv(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    hu[i] = (u_[i] > 0.0 || gu[i] < 0.0) ? gu[i] : 0.0;
    hv[i] = (v_[i] > 0.0 || gv[i] < 0.0) ? gv[i] : 0.0;
  }
  const double hh = hu.squaredNorm() + hv.squaredNorm();
  if (hh == 0.0) {
    // Stationary: refresh the gradient from scratch to confirm.
    kx_ = forward(x_);
    grad_ = adjoint(kx_ - prob_.y);
    converged_ = true;
    return;
  }
  const Vector kh = forward(hu - hv);
  const double curv = 2.0 * kh.squaredNorm();
  double alpha = curv > 0.0 ? hh / curv : params_.alpha_max;
  alpha = std::clamp(alpha, params_.alpha_min, params_.alpha_max);

  for (int trial = 0; trial < params_.max_trials; ++trial) {
    const Vector u_new = (u_ - alpha * gu).cwiseMax(0.0);
    const Vector v_new = (v_ - alpha * gv).cwiseMax(0.0);
    const Vector x_new = u_new - v_new;
    const Vector kx_new = forward(x_new);
    const Vector du = u_new - u_;
    const Vector dv = v_new - v_;
    // q is quadratic, so q(new) - q(old) = grad^T dz + ||K dx||^2 exactly.
    const Vector dkx = kx_new - kx_;
    const double predicted = gu.dot(du) + gv.dot(dv);
    const double dq = predicted + dkx.squaredNorm();
    if (dq <= params_.armijo * predicted) {
      converged_ = du.squaredNorm() + dv.squaredNorm() == 0.0;
      u_ = u_new;
      v_ = v_new;
      x_ = x_new;
      kx_ = kx_new;
      grad_ = adjoint(kx_ - prob_.y);
      return;
    }
    alpha *= params_.shrink;
  }
  throw SolverError("gpsr: stalled line search");
}

// ---------------------------------------------------------------------------
// l1-ls interior point

L1lsSolver::L1lsSolver(Problem prob, Params params)
    : Solver(Algorithm::L1ls, std::move(prob)), params_(params) {
  if (prob_.mode != Mode::Penalized) throw std::invalid_argument("l1ls: needs a penalized problem");
  const Eigen::Index p = prob_.K().cols();
  u_ = Vector::Ones(p);
  t_ = prob_.lambda > 0.0 ? 1.0 / prob_.lambda : 1.0;
  gap_ = std::numeric_limits<double>::infinity();
  // Diagonal of K^T K for the preconditioner: one pass over the operator.
  colnorm2_ = prob_.K().entries().colwise().squaredNorm().transpose();
  cost_.add();
}

void L1lsSolver::do_step() {
  const double lam = prob_.lambda;
  const Eigen::Index p = x_.size();
  const double pd = static_cast<double>(p);

  const Vector r = forward(x_) - prob_.y;  // Kx - y
  const Vector g = adjoint(r);             // K^T(Kx - y)

  // Duality gap with the scaled dual point nu = 2 s r, ||K^T nu||_inf <= 2 lam.
  const double primal = r.squaredNorm() + 2.0 * lam * x_.lpNorm<1>();
  const double ginf = g.cwiseAbs().maxCoeff();
  const double scale = (ginf > lam && ginf > 0.0) ? lam / ginf : 1.0;
  const Vector nu = 2.0 * scale * r;
  const double dual = -0.25 * nu.squaredNorm() - nu.dot(prob_.y);
  gap_ = primal - dual;
  const double rel_gap = gap_ / std::max(std::abs(dual), std::numeric_limits<double>::min());
  if (gap_ <= 0.0 || rel_gap <= params_.gap_floor) {
    converged_ = true;
    return;
  }

  if (iterations_ == 0 || last_step_ >= 0.5) {
    t_ = std::max(std::min(2.0 * pd * params_.mu / gap_, params_.mu * t_), t_);
  }

  const Vector q1 = (u_ + x_).cwiseInverse();
  const Vector q2 = (u_ - x_).cwiseInverse();
  const Vector q1s = q1.cwiseAbs2();
  const Vector q2s = q2.cwiseAbs2();
  const Vector d1 = q1s + q2s;
  const Vector d2 = q1s - q2s;
  const Vector d3 = (4.0 * q1s.cwiseProduct(q2s)).cwiseQuotient(d1);

  const Vector grad_x = 2.0 * t_ * g - q1 + q2;
  const Vector grad_u = Vector::Constant(p, 2.0 * t_ * lam) - q1 - q2;

  // Reduced Newton system (2t K^T K + D3) dx = -grad_x + D2 grad_u / D1.
  const Vector rhs = -grad_x + d2.cwiseProduct(grad_u).cwiseQuotient(d1);
  const Vector precond = (2.0 * t_ * colnorm2_ + d3).cwiseInverse();
  const double rhs_norm = rhs.norm();
  const double tol = std::min(params_.cg_tol_cap, params_.cg_tol_gap * rel_gap) * rhs_norm;

  auto hess = [&](const Vector& v) -> Vector { return 2.0 * t_ * adjoint(forward(v)) + d3.cwiseProduct(v); };

  const bool warm = dx_warm_.size() == p;
  Vector dx = warm ? dx_warm_ : Vector::Zero(p);
  Vector res = warm ? Vector(rhs - hess(dx)) : rhs;
  Vector z = precond.cwiseProduct(res);
  Vector dir = z;
  double rz = res.dot(z);
  cg_capped_ = true;
  for (int it = 0; it < params_.cg_max_iter; ++it) {
    if (res.norm() <= tol) {
      cg_capped_ = false;
      break;
    }
    const Vector hd = hess(dir);
    const double dhd = dir.dot(hd);
    if (!(dhd > 0.0)) break;
    const double step = rz / dhd;
    dx += step * dir;
    res -= step * hd;
    z = precond.cwiseProduct(res);
    const double rz_next = res.dot(z);
    dir = z + (rz_next / rz) * dir;
    rz = rz_next;
  }
  if (cg_capped_ && res.norm() <= tol) cg_capped_ = false;
  dx_warm_ = dx;
  const Vector du = -(grad_u + d2.cwiseProduct(dx)).cwiseQuotient(d1);

  // Backtracking on the barrier objective; differences are formed directly.
  const Vector kdx = forward(dx);
  const double slope = grad_x.dot(dx) + grad_u.dot(du);
  const Vector sum_plus = du + dx;
  const Vector sum_minus = du - dx;
  const Vector upx = u_ + x_;
  const Vector umx = u_ - x_;
  double s = 1.0;
  bool accepted = false;
  Vector x_next, u_next;
  for (int bt = 0; bt < params_.max_backtracks; ++bt, s *= params_.shrink) {
    // Interiority is tested on the exact candidate that would be committed.
    x_next = x_ + s * dx;
    u_next = u_ + s * du;
    if (((u_next + x_next).array() <= 0.0).any() || ((u_next - x_next).array() <= 0.0).any()) continue;
    const double df = 2.0 * s * r.dot(kdx) + s * s * kdx.squaredNorm() + 2.0 * lam * s * du.sum();
    double dbar = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      dbar -= std::log1p(s * sum_plus[i] / upx[i]) + std::log1p(s * sum_minus[i] / umx[i]);
    }
    const double dphi = t_ * df + dbar;
    if (dphi <= params_.armijo * s * slope) {
      accepted = true;
      break;
    }
  }
  if (!accepted) {
    // No progress possible at this barrier weight; treat the iterate as final.
    last_step_ = 0.0;
    converged_ = true;
    return;
  }
  last_step_ = s;
  x_ = std::move(x_next);
  u_ = std::move(u_next);
  if (((u_ + x_).array() <= 0.0).any() || ((u_ - x_).array() <= 0.0).any()) {
    throw SolverError("l1ls: barrier violation");
  }
}

// ---------------------------------------------------------------------------
// FISTA

FistaSolver::FistaSolver(Problem prob) : Solver(Algorithm::Fista, std::move(prob)) {
  if (prob_.mode != Mode::Penalized) throw std::invalid_argument("fista: needs a penalized problem");
  x_prev_ = x_;
}

void FistaSolver::do_step() {
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_ * t_));
  const double coef = (t_ - 1.0) / t_next;
  Vector z = x_;
  if (coef != 0.0) z += coef * (x_ - x_prev_);
  const Vector grad = adjoint(prob_.y - forward(z));
  Vector next = soft_threshold(z + grad, prob_.lambda);
  converged_ = next == x_ && x_ == x_prev_;
  x_prev_ = std::move(x_);
  x_ = std::move(next);
  t_ = t_next;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Solver> make_solver(Algorithm algo, Problem prob) {
  switch (algo) {
    case Algorithm::Ist:
      return std::make_unique<IstSolver>(std::move(prob), false);
    case Algorithm::IstWide:
      return std::make_unique<IstSolver>(std::move(prob), true);
    case Algorithm::Psd:
      return std::make_unique<PsdSolver>(std::move(prob));
    case Algorithm::Gpsr:
      return std::make_unique<GpsrSolver>(std::move(prob));
    case Algorithm::L1ls:
      return std::make_unique<L1lsSolver>(std::move(prob));
    case Algorithm::Fista:
      return std::make_unique<FistaSolver>(std::move(prob));
  }
  throw std::invalid_argument("make_solver: unknown algorithm");
}

std::pair<double, bool> relative_error(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& ref) {
  const double rn = ref.norm();
  if (rn == 0.0) return {x.norm(), true};
  return {(x - ref).norm() / rn, false};
}

Trace run_budgeted(Solver& solver, const std::vector<std::uint64_t>& budgets, const std::optional<Vector>& reference,
                   RunOptions opts) {
  for (std::size_t b = 1; b < budgets.size(); ++b) {
    if (budgets[b] <= budgets[b - 1]) throw std::invalid_argument("run_budgeted: budgets must be strictly increasing");
  }
  if (reference && reference->size() != solver.x().size()) {
    throw std::invalid_argument("run_budgeted: reference length mismatch");
  }
  using Clock = std::chrono::steady_clock;
  Trace trace;
  trace.algo = solver.algorithm();
  double wall = 0.0;

  for (const auto budget : budgets) {
    try {
      while (solver.cost() < budget) {
        const auto t0 = Clock::now();
        solver.step();
        wall += std::chrono::duration<double>(Clock::now() - t0).count();
      }
    } catch (const std::exception& e) {
      trace.failed = true;
      trace.error = e.what();
      return trace;
    }
    Snapshot snap;
    snap.budget = budget;
    snap.cost = solver.cost();
    snap.n = solver.iterations();
    if (reference) {
      std::tie(snap.e, snap.absolute_error) = relative_error(solver.x(), *reference);
    } else {
      snap.e = std::numeric_limits<double>::quiet_NaN();
    }
    CostCounter diagnostics;  // not charged to the solver
    snap.F = functional_value(solver.problem(), solver.x(), diagnostics);
    snap.fp_residual = fixed_point_residual(solver.problem(), solver.x(), diagnostics);
    snap.wall_seconds = wall;
    if (opts.keep_iterates) snap.x = solver.x();
    trace.snapshots.push_back(std::move(snap));
  }
  return trace;
}

void write_trace_csv(const Trace& trace, double k_log2, std::ostream& out, bool header, bool wall_clock) {
  using detail::fmt_double;
  if (header) out << "algo,lambda_over_lambda_max_log2,cost,n,e,F,fp_residual,wall_seconds\n";
  for (const auto& s : trace.snapshots) {
    out << to_string(trace.algo) << ',' << fmt_double(k_log2) << ',' << s.cost << ',' << s.n << ','
        << fmt_double(s.e) << ',' << fmt_double(s.F) << ',' << fmt_double(s.fp_residual) << ','
        << fmt_double(wall_clock ? s.wall_seconds : 0.0) << '\n';
  }
}

}  // namespace isobench
