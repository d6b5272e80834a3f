#include "isobench/warmstart.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "format.hpp"
#include "isobench/solvers.hpp"

namespace isobench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void set_error(WarmSample& sample, const Vector* reference) {
  if (!reference) {
    sample.e = kNaN;
    return;
  }
  std::tie(sample.e, sample.absolute_error) = relative_error(sample.x, *reference);
}

}  // namespace

Schedule Schedule::geometric(double lambda_max, double lambda_stop, std::size_t N) {
  if (N < 1) throw std::invalid_argument("schedule: N must be at least 1");
  if (!(lambda_stop > 0.0) || !(lambda_stop <= lambda_max)) {
    throw std::invalid_argument("schedule: need 0 < lambda_stop <= lambda_max");
  }
  Schedule s;
  s.kind = ScheduleKind::GeometricLambda;
  s.N = N;
  s.lambda_max = lambda_max;
  s.terminal = lambda_stop;
  s.values.resize(N + 1);
  const double ratio = lambda_stop / lambda_max;
  for (std::size_t n = 0; n <= N; ++n) {
    s.values[n] = lambda_max * std::pow(ratio, static_cast<double>(n) / static_cast<double>(N));
  }
  s.values.front() = lambda_max;
  s.values.back() = lambda_stop;
  return s;
}

Schedule Schedule::arithmetic(double rho_stop, std::size_t N, double lambda_max) {
  if (N < 1) throw std::invalid_argument("schedule: N must be at least 1");
  if (!(rho_stop > 0.0)) throw std::invalid_argument("schedule: rho_stop must be positive");
  Schedule s;
  s.kind = ScheduleKind::ArithmeticRho;
  s.N = N;
  s.lambda_max = lambda_max;
  s.terminal = rho_stop;
  s.values.resize(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    s.values[n] = static_cast<double>(n) * rho_stop / static_cast<double>(N);
  }
  return s;
}

double Schedule::ratio() const {
  if (kind == ScheduleKind::GeometricLambda) {
    return std::pow(terminal / lambda_max, 1.0 / static_cast<double>(N));
  }
  return terminal / static_cast<double>(N);
}

std::vector<WarmSample> fpc_run(const Problem& prob, const Schedule& schedule, const HomotopyPath* reference) {
  if (schedule.kind != ScheduleKind::GeometricLambda) throw std::invalid_argument("fpc_run: needs a geometric schedule");
  prob.validate();
  const Operator& k = prob.K();
  CostCounter cost;
  std::vector<WarmSample> out;
  out.reserve(schedule.N + 1);

  auto emit = [&](double lam, const Vector& x) {
    WarmSample sample;
    sample.parameter = lam;
    sample.x = x;
    sample.cost = cost.units();
    if (reference && reference->covers(lam)) {
      const Vector ref = eval_path(*reference, lam);
      set_error(sample, &ref);
    } else {
      set_error(sample, nullptr);
    }
    out.push_back(std::move(sample));
  };

  Vector x = Vector::Zero(k.cols());
  emit(schedule.values[0], x);
  for (std::size_t n = 0; n < schedule.N; ++n) {
    const Vector grad = apply(k, prob.y - apply(k, x, Apply::Forward, cost), Apply::Adjoint, cost);
    x = soft_threshold(x + grad, schedule.values[n + 1]);
    emit(schedule.values[n + 1], x);
  }
  return out;
}

std::vector<WarmSample> apsd_run(const Problem& prob, const Schedule& schedule, const HomotopyPath* reference) {
  if (schedule.kind != ScheduleKind::ArithmeticRho) throw std::invalid_argument("apsd_run: needs an arithmetic schedule");
  prob.validate();
  const Operator& k = prob.K();
  CostCounter cost;
  std::vector<WarmSample> out;
  out.reserve(schedule.N + 1);
  const double rho_cover = reference ? reference->x_stop.lpNorm<1>() : 0.0;

  auto emit = [&](double rho, const Vector& x) {
    WarmSample sample;
    sample.parameter = rho;
    sample.x = x;
    sample.cost = cost.units();
    if (reference && rho <= rho_cover * (1.0 + 1e-12)) {
      const double lam = path_lambda_for_rho(*reference, rho, 1e-10 * reference->lambda_max);
      const Vector ref = eval_path(*reference, lam);
      set_error(sample, &ref);
    } else {
      set_error(sample, nullptr);
    }
    out.push_back(std::move(sample));
  };

  Vector x = Vector::Zero(k.cols());
  emit(schedule.values[0], x);
  bool stalled = false;
  for (std::size_t n = 0; n < schedule.N; ++n) {
    if (!stalled) {
      const Vector r = apply(k, prob.y - apply(k, x, Apply::Forward, cost), Apply::Adjoint, cost);
      const double rr = r.squaredNorm();
      if (rr == 0.0) {
        stalled = true;
      } else {
        const double krkr = apply(k, r, Apply::Forward, cost).squaredNorm();
        if (krkr == 0.0) {
          stalled = true;
        } else {
          x = project_l1(x + (rr / krkr) * r, schedule.values[n + 1]);
        }
      }
    }
    emit(schedule.values[n + 1], x);
  }
  return out;
}

std::vector<ParetoPoint> pareto_points(const std::vector<Vector>& xs, const Problem& prob) {
  std::vector<ParetoPoint> pts;
  pts.reserve(xs.size());
  CostCounter scratch;
  for (const auto& x : xs) {
    const Vector res = apply(prob.K(), x, Apply::Forward, scratch) - prob.y;
    pts.push_back({x.lpNorm<1>(), res.squaredNorm()});
  }
  return pts;
}

std::vector<ParetoPoint> pareto_points(const std::vector<WarmSample>& samples, const Problem& prob) {
  std::vector<Vector> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(s.x);
  return pareto_points(xs, prob);
}

void write_warmstart_csv(const std::string& method, const std::vector<WarmSample>& samples, const Problem& prob,
                         std::ostream& out, bool header) {
  using detail::fmt_double;
  if (header) out << "method,n,lambda_or_rho,e,l1_norm,residual_sq,cost\n";
  const auto pts = pareto_points(samples, prob);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    out << method << ',' << n << ',' << fmt_double(samples[n].parameter) << ',' << fmt_double(samples[n].e) << ','
        << fmt_double(pts[n].l1_norm) << ',' << fmt_double(pts[n].residual_sq) << ',' << samples[n].cost << '\n';
  }
}

}  // namespace isobench
