#include "isobench/homotopy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <limits>
#include <ostream>

#include "format.hpp"

namespace isobench {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double gamma;
  PathEventType type;
  Eigen::Index index;
  int sign;  // sign a joining coefficient takes
};

// Cholesky of the active Gram matrix with a single jitter retry.
class ActiveFactor {
 public:
  bool factor(const Matrix& gram) {
    jittered_ = false;
    if (try_factor(gram)) return true;
    const double s = static_cast<double>(gram.rows());
    Matrix jittered = gram;
    jittered.diagonal().array() += 1e-12 * gram.trace() / s;
    jittered_ = true;
    return try_factor(jittered);
  }
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  bool jittered() const { return jittered_; }

 private:
  bool try_factor(const Matrix& gram) {
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) return false;
    const auto diag = llt_.matrixLLT().diagonal();
    const double max_g = gram.diagonal().maxCoeff();
    return diag.cwiseAbs2().minCoeff() > 1e-15 * max_g;
  }
  Eigen::LLT<Matrix> llt_;
  bool jittered_ = false;
};

// A jittered solve is only trusted if it still solves the unjittered system.
bool solves(const Matrix& gram, const Vector& v, const Vector& rhs) {
  return (gram * v - rhs).norm() <= 1e-6 * std::max(rhs.norm(), 1e-300);
}

struct Node {
  double lambda;
  const Vector* x;
};

std::vector<Node> path_nodes(const HomotopyPath& path) {
  std::vector<Node> nodes;
  nodes.reserve(path.breakpoints.size() + 1);
  for (const auto& bp : path.breakpoints) nodes.push_back({bp.lambda, &bp.x});
  if (nodes.empty() || path.lambda_stop < nodes.back().lambda) nodes.push_back({path.lambda_stop, &path.x_stop});
  return nodes;
}

}  // namespace

const char* to_string(PathEventType type) { return type == PathEventType::Join ? "join" : "leave"; }

bool HomotopyPath::covers(double lam) const { return lam <= lambda_max && lam >= lambda_stop; }

HomotopyPath homotopy_solve(const Problem& prob, const PathStop& stop, const PathLimits& limits) {
  prob.validate();
  if (!stop.lambda_stop && !stop.rho_stop) throw std::invalid_argument("homotopy: no stopping value given");
  if (stop.lambda_stop && !(*stop.lambda_stop >= 0.0)) throw std::invalid_argument("homotopy: lambda_stop must be >= 0");
  if (stop.rho_stop && !(*stop.rho_stop >= 0.0)) throw std::invalid_argument("homotopy: rho_stop must be >= 0");

  const Matrix& k = prob.K().entries();
  const Eigen::Index m = k.rows();
  const Eigen::Index p = k.cols();
  const double md = static_cast<double>(m);
  const double pd = static_cast<double>(p);
  const auto t0 = Clock::now();

  CostCounter cost;
  double flops = 0.0;
  const Vector c0 = apply(prob.K(), prob.y, Apply::Adjoint, cost);
  flops += 2.0 * md * pd;

  HomotopyPath path;
  const double lam_max = c0.cwiseAbs().maxCoeff();
  path.lambda_max = lam_max;
  if (stop.lambda_stop && *stop.lambda_stop > lam_max) {
    throw std::invalid_argument("homotopy: lambda_stop exceeds lambda_max");
  }

  double lam_end = stop.lambda_stop.value_or(0.0);
  bool end_is_limit = false;
  if (limits.min_lambda > lam_end) {
    lam_end = limits.min_lambda;
    end_is_limit = true;
  }
  const double tie = 1e-12 * lam_max;

  Vector x = Vector::Zero(p);
  double lam = lam_max;
  std::vector<Eigen::Index> active;
  std::vector<int> signs;
  std::vector<char> is_active(static_cast<std::size_t>(p), 0);
  std::vector<PathEvent> events;
  std::vector<Eigen::Index> just_joined;
  std::vector<std::pair<Eigen::Index, int>> just_left;

  auto finish = [&](double lam_t, Vector x_t, PathStatus status, std::string reason) {
    path.lambda_stop = lam_t;
    path.x_stop = std::move(x_t);
    path.status = status;
    path.truncation_reason = std::move(reason);
  };

  if (lam_max == 0.0) {
    Breakpoint bp;
    bp.lambda = 0.0;
    bp.x = x;
    bp.cost_units = cost.units();
    bp.flops = flops;
    path.breakpoints.push_back(std::move(bp));
    finish(0.0, x, PathStatus::Complete, {});
    return path;
  }

  // First joins: every index attaining lambda_max (within the tie window).
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(c0[i]) >= lam_max - tie) {
      active.push_back(i);
      signs.push_back(c0[i] > 0 ? 1 : -1);
      is_active[static_cast<std::size_t>(i)] = 1;
      events.push_back({PathEventType::Join, i});
      just_joined.push_back(i);
    }
  }

  const bool stop_at_start = (stop.lambda_stop && *stop.lambda_stop >= lam_max) ||
                             (stop.rho_stop && *stop.rho_stop <= 0.0);

  for (;;) {
    const auto s = static_cast<Eigen::Index>(active.size());
    const double sd = static_cast<double>(s);
    Eigen::Map<const Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>> idx(active.data(), s);
    Vector sgn(s);
    for (Eigen::Index a = 0; a < s; ++a) sgn[a] = signs[static_cast<std::size_t>(a)];

    Matrix ka = k(Eigen::all, idx);
    ActiveFactor factor;
    if (s > 0) {
      Matrix gram = Matrix::Zero(s, s);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(ka.transpose());
      gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
      flops += md * sd * (sd + 1.0) + sd * sd * sd / 3.0;
      bool ok = factor.factor(gram);
      if (ok && factor.jittered()) {
        Vector rhs(s);
        for (Eigen::Index a = 0; a < s; ++a) rhs[a] = c0[idx[a]] - lam * sgn[a];
        const Vector xa = factor.solve(rhs);
        ok = solves(gram, xa, rhs) && solves(gram, factor.solve(sgn), sgn) &&
             (xa.array() * sgn.array()).minCoeff() >= -1e-9 * std::max(xa.cwiseAbs().maxCoeff(), 1e-300);
      }
      if (!ok) {
        Breakpoint bp;
        bp.lambda = lam;
        bp.x = x;
        bp.support = active;
        bp.signs = signs;
        bp.events = events;
        bp.cost_units = cost.units();
        bp.flops = flops;
        bp.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        path.breakpoints.push_back(std::move(bp));
        finish(lam, x, PathStatus::Degenerate, "degenerate support");
        throw DegenerateSupport(std::move(path));
      }

      // Re-anchor on the exact KKT system of the current support so roundoff
      // does not accumulate along the path.
      Vector rhs(s);
      for (Eigen::Index a = 0; a < s; ++a) rhs[a] = c0[idx[a]] - lam * sgn[a];
      const Vector xa = factor.solve(rhs);
      flops += 4.0 * sd * sd;
      x.setZero();
      x(idx) = xa;
    }

    {
      Breakpoint bp;
      bp.lambda = lam;
      bp.x = x;
      // A joining coordinate is exactly zero at its breakpoint; the solve leaves roundoff there.
      for (const Eigen::Index j : just_joined) bp.x[j] = 0.0;
      bp.support = active;
      bp.signs = signs;
      bp.events = events;
      bp.cost_units = cost.units();
      bp.flops = flops;
      bp.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      path.breakpoints.push_back(std::move(bp));
    }

    if (stop_at_start) {
      finish(lam, Vector::Zero(p), PathStatus::Complete, {});
      return path;
    }
    if (static_cast<std::size_t>(s) > limits.max_support) {
      finish(lam, x, PathStatus::Truncated, "max_support");
      return path;
    }
    if (path.breakpoints.size() >= limits.max_breakpoints) {
      finish(lam, x, PathStatus::Truncated, "max_breakpoints");
      return path;
    }

    // Correlations at the breakpoint and their rate of change along the segment.
    const Vector xa = x(idx);
    const Vector residual = prob.y - ka * xa;
    const Vector direction = s > 0 ? factor.solve(sgn) : Vector();
    const Vector kd = ka * direction;
    Matrix both(m, 2);
    both.col(0) = residual;
    both.col(1) = kd;
    const Matrix corr = k.transpose() * both;
    cost.add(2);
    flops += 4.0 * md * sd + 4.0 * md * pd + 2.0 * sd * sd;
    const auto c = corr.col(0);
    const auto rate = corr.col(1);

    std::vector<Candidate> cands;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      int left_sign = 0;
      for (const auto& [li, ls] : just_left) {
        if (li == j) left_sign = ls;
      }
      // Along the segment c_j(g) = c_j - g rate_j must meet +-(lam - g).
      if (left_sign != 1 && 1.0 - rate[j] > 0.0) {
        const double g = (lam - c[j]) / (1.0 - rate[j]);
        if (g > 0.0) cands.push_back({g, PathEventType::Join, j, 1});
      }
      if (left_sign != -1 && 1.0 + rate[j] > 0.0) {
        const double g = (lam + c[j]) / (1.0 + rate[j]);
        if (g > 0.0) cands.push_back({g, PathEventType::Join, j, -1});
      }
    }
    for (Eigen::Index a = 0; a < s; ++a) {
      if (std::find(just_joined.begin(), just_joined.end(), idx[a]) != just_joined.end()) continue;
      if (direction[a] == 0.0) continue;
      const double g = -xa[a] / direction[a];
      if (g > 0.0) cands.push_back({g, PathEventType::Leave, idx[a], 0});
    }
    flops += 6.0 * pd;

    double gamma_event = kInf;
    for (const auto& cand : cands) gamma_event = std::min(gamma_event, cand.gamma);

    double gamma_stop = lam - lam_end;
    bool rho_hit = false;
    if (stop.rho_stop && s > 0) {
      const double l1 = xa.lpNorm<1>();
      const double slope = sgn.dot(direction);
      if (slope > 0.0) {
        const double g = std::max(0.0, (*stop.rho_stop - l1) / slope);
        if (g < gamma_stop) {
          gamma_stop = g;
          rho_hit = true;
        }
      }
    }

    // Events inside the tie window of the stop belong to the far side of it.
    if (gamma_stop <= gamma_event + tie) {
      const double lam_t = rho_hit ? lam - gamma_stop : lam_end;
      Vector x_t = Vector::Zero(p);
      if (s > 0) {
        Vector rhs(s);
        for (Eigen::Index a = 0; a < s; ++a) rhs[a] = c0[idx[a]] - lam_t * sgn[a];
        x_t(idx) = factor.solve(rhs);
      }
      const bool limited = end_is_limit && !rho_hit;
      finish(lam_t, std::move(x_t), limited ? PathStatus::Truncated : PathStatus::Complete,
             limited ? "min_lambda" : "");
      path.breakpoints.back().wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      return path;
    }

    // Advance to the next breakpoint and apply every event in the tie window:
    // leaves are logged before joins, each group in index order.
    const double gamma = gamma_event;
    lam -= gamma;
    std::vector<Candidate> hits;
    for (const auto& cand : cands) {
      if (cand.gamma <= gamma + tie) hits.push_back(cand);
    }
    std::sort(hits.begin(), hits.end(), [](const Candidate& a, const Candidate& b) {
      if (a.type != b.type) return a.type == PathEventType::Leave;
      if (a.index != b.index) return a.index < b.index;
      return a.gamma < b.gamma;
    });
    hits.erase(std::unique(hits.begin(), hits.end(),
                           [](const Candidate& a, const Candidate& b) { return a.type == b.type && a.index == b.index; }),
               hits.end());

    events.clear();
    just_joined.clear();
    just_left.clear();
    for (Eigen::Index a = 0; a < s; ++a) x[idx[a]] += gamma * direction[a];
    for (const auto& h : hits) {
      events.push_back({h.type, h.index});
      const auto pos = static_cast<std::size_t>(h.index);
      if (h.type == PathEventType::Leave) {
        const auto it = std::find(active.begin(), active.end(), h.index);
        const auto at = static_cast<std::size_t>(it - active.begin());
        just_left.emplace_back(h.index, signs[at]);
        active.erase(it);
        signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(at));
        is_active[pos] = 0;
        x[h.index] = 0.0;
      } else {
        const auto it = std::lower_bound(active.begin(), active.end(), h.index);
        const auto at = it - active.begin();
        active.insert(it, h.index);
        signs.insert(signs.begin() + at, h.sign);
        is_active[pos] = 1;
        just_joined.push_back(h.index);
      }
    }
  }
}

Vector eval_path(const HomotopyPath& path, double lam) {
  if (!path.covers(lam)) {
    throw std::out_of_range("eval_path: lambda " + detail::fmt_double(lam) + " outside [" +
                            detail::fmt_double(path.lambda_stop) + ", " + detail::fmt_double(path.lambda_max) + "]");
  }
  const auto nodes = path_nodes(path);
  // nodes are in strictly decreasing lambda; find the first node with lambda <= lam.
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), lam,
                                   [](const Node& n, double v) { return n.lambda > v; });
  if (nodes.size() == 1 || it == nodes.end()) return *nodes.back().x;
  if (it->lambda == lam || it == nodes.begin()) return *it->x;
  const Node& hi = *(it - 1);
  const Node& lo = *it;
  const double w = (lam - lo.lambda) / (hi.lambda - lo.lambda);
  return *lo.x + w * (*hi.x - *lo.x);
}

std::vector<Eigen::Index> path_support(const HomotopyPath& path, double lam) {
  if (!path.covers(lam)) {
    throw std::out_of_range("path_support: lambda " + detail::fmt_double(lam) + " outside [" +
                            detail::fmt_double(path.lambda_stop) + ", " + detail::fmt_double(path.lambda_max) + "]");
  }
  const auto& bps = path.breakpoints;
  // Last breakpoint at or above lam.
  std::size_t i = 0;
  while (i < bps.size() && bps[i].lambda >= lam) ++i;
  if (i == 0) return {};
  const Breakpoint& bp = bps[i - 1];
  std::vector<Eigen::Index> active(bp.support);
  std::sort(active.begin(), active.end());
  if (bp.lambda != lam) return active;
  std::vector<Eigen::Index> before;
  if (i >= 2) {
    before = bps[i - 2].support;
    std::sort(before.begin(), before.end());
  }
  std::vector<Eigen::Index> both;
  std::set_intersection(active.begin(), active.end(), before.begin(), before.end(), std::back_inserter(both));
  return both;
}

double path_l1_norm(const HomotopyPath& path, double lam) { return eval_path(path, lam).lpNorm<1>(); }

double path_lambda_for_rho(const HomotopyPath& path, double rho, double tol) {
  if (rho <= 0.0) return path.lambda_max;
  const double rho_cover = path.x_stop.lpNorm<1>();
  if (rho > rho_cover * (1.0 + 1e-12)) {
    throw std::out_of_range("path_lambda_for_rho: radius " + detail::fmt_double(rho) + " beyond path coverage " +
                            detail::fmt_double(rho_cover));
  }
  double hi = path.lambda_max;   // rho(hi) = 0 <= rho
  double lo = path.lambda_stop;  // rho(lo) >= rho
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (path_l1_norm(path, mid) >= rho) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<ComplexityRow> complexity_table(const HomotopyPath& path) {
  std::vector<ComplexityRow> rows;
  rows.reserve(path.breakpoints.size());
  for (std::size_t j = 0; j < path.breakpoints.size(); ++j) {
    const auto& bp = path.breakpoints[j];
    rows.push_back({bp.support.size(), j + 1, bp.cost_units, bp.flops, bp.wall_seconds});
  }
  return rows;
}

std::vector<ComplexityRow> complexity_table(const Problem& prob, const PathStop& stop, const PathLimits& limits) {
  return complexity_table(homotopy_solve(prob, stop, limits));
}

double complexity_slope(const std::vector<ComplexityRow>& rows, std::size_t s_lo, std::size_t s_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  std::size_t s_min = std::numeric_limits<std::size_t>::max(), s_max = 0;
  for (const auto& r : rows) {
    if (r.support_size < s_lo || r.support_size > s_hi || !(r.flops > 0.0)) continue;
    const double lx = std::log(static_cast<double>(r.support_size));
    const double ly = std::log(r.flops);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
    s_min = std::min(s_min, r.support_size);
    s_max = std::max(s_max, r.support_size);
  }
  if (n < 2.0 || s_min == s_max) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_path_csv(const HomotopyPath& path, std::ostream& out) {
  using detail::fmt_double;
  out << "j,lambda_j,l1_norm,support_size,event_type,event_index\n";
  for (std::size_t j = 0; j < path.breakpoints.size(); ++j) {
    const auto& bp = path.breakpoints[j];
    const std::string head = std::to_string(j) + "," + fmt_double(bp.lambda) + "," + fmt_double(bp.x.lpNorm<1>()) +
                             "," + std::to_string(bp.support.size()) + ",";
    for (const auto& ev : bp.events) out << head << to_string(ev.type) << "," << ev.index << "\n";
  }
  const std::size_t last_support = path.breakpoints.empty() ? 0 : path.breakpoints.back().support.size();
  out << path.breakpoints.size() << "," << fmt_double(path.lambda_stop) << "," << fmt_double(path.x_stop.lpNorm<1>())
      << "," << last_support << ",stop,-1\n";
}

}  // namespace isobench
