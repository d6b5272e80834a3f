#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "isobench/bench.hpp"
#include "isobench/fixtures.hpp"
#include "isobench/homotopy.hpp"
#include "isobench/io.hpp"
#include "isobench/solvers.hpp"
#include "isobench/warmstart.hpp"

namespace isobench::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output files are staged next to their destination and renamed into place
// only after every computation succeeded.
class Artifacts {
 public:
  void text(const fs::path& path, std::string content) {
    entries_.push_back({path, [content = std::move(content)](const fs::path& tmp) {
                          std::ofstream f(tmp, std::ios::binary);
                          f << content;
                          if (!f) throw FormatError(FormatError::Kind::Io, "cannot write " + tmp.string());
                        }});
  }
  void write_with(const fs::path& path, std::function<void(const fs::path&)> writer) {
    entries_.push_back({path, std::move(writer)});
  }

  std::vector<std::string> commit() {
    std::vector<std::string> written;
    for (auto& e : entries_) {
      fs::path tmp = e.path;
      tmp += ".partial";
      try {
        e.writer(tmp);
        fs::rename(tmp, e.path);
      } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
      }
      written.push_back(e.path.string());
    }
    return written;
  }

 private:
  struct Entry {
    fs::path path;
    std::function<void(const fs::path&)> writer;
  };
  std::vector<Entry> entries_;
};

void require_file(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw MissingFile("missing file: " + path);
}

void require_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    throw MissingFile("output directory does not exist: " + parent.string());
  }
}

struct Loaded {
  std::shared_ptr<const Operator> op;
  Vector y;
};

Loaded load_problem(const std::string& op_path, const std::string& data_path) {
  require_file(op_path);
  require_file(data_path);
  Loaded l;
  l.op = std::make_shared<const Operator>(load_operator(op_path));
  l.y = load_vector(data_path);
  if (l.y.size() != l.op->rows()) {
    throw UsageError("data length " + std::to_string(l.y.size()) + " does not match operator rows " +
                     std::to_string(l.op->rows()));
  }
  return l;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct BudgetArgs {
  std::string budget_arg = "log10";
  std::uint64_t lo = 10;
  std::uint64_t hi = 10000;
  std::size_t count = 10;

  void add(CLI::App* app) {
    app->add_option("--budgets", budget_arg, "'log10' or a comma-separated list of cost budgets");
    app->add_option("--budget-min", lo, "Smallest budget of the log10 ladder");
    app->add_option("--budget-max", hi, "Largest budget of the log10 ladder");
    app->add_option("--budget-count", count, "Number of budgets in the log10 ladder");
  }

  std::vector<std::uint64_t> resolve() const {
    if (budget_arg == "log10") {
      try {
        return log_budget_ladder(lo, hi, count);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(budget_arg)) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size() || item.front() == '-') throw UsageError("bad budget '" + item + "'");
      out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty budget list");
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i] <= out[i - 1]) throw UsageError("budgets must be strictly increasing");
    }
    return out;
  }
};

struct GridArgs {
  double kmin = 0.0;
  double kmax = 14.0;
  double kstep = 1.0;

  void add(CLI::App* app) {
    app->add_option("--kmin", kmin, "Smallest grid exponent k (lambda = lambda_max / 2^k)");
    app->add_option("--kmax", kmax, "Largest grid exponent");
    app->add_option("--kstep", kstep, "Grid spacing");
  }
  std::vector<double> resolve() const {
    try {
      return LambdaGrid::range(kmin, kmax, kstep);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

std::vector<Algorithm> parse_algos(const std::string& s) {
  if (s == "all") return all_algorithms();
  std::vector<Algorithm> out;
  for (const auto& name : split_list(s)) {
    try {
      const Algorithm a = parse_algorithm(name);
      if (std::find(out.begin(), out.end(), a) != out.end()) throw UsageError("algorithm listed twice: " + name);
      out.push_back(a);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("no algorithms given");
  return out;
}

double penalty_from(double lam_max, const std::optional<double>& k, const std::optional<double>& lambda) {
  if (k && lambda) throw UsageError("give either --k or --lambda, not both");
  if (lambda) {
    if (!(*lambda >= 0.0)) throw UsageError("--lambda must be non-negative");
    return *lambda;
  }
  const double kk = k.value_or(4.0);
  if (!(kk >= 0.0)) throw UsageError("--k must be non-negative");
  return lam_max * std::exp2(-kk);
}

Json grid_summary(const IsochroneGrid& g) {
  Json j;
  j["algo"] = std::string(to_string(g.algo));
  std::size_t failed = 0, unavailable = 0;
  Json finals = Json::array();
  for (std::size_t k = 0; k < g.cells.size(); ++k) {
    if (g.cells[k].status == CellStatus::Failed) ++failed;
    if (g.cells[k].status == CellStatus::Unavailable) ++unavailable;
    finals.push_back(g.final_error(k));
  }
  j["failed_cells"] = failed;
  j["unavailable_cells"] = unavailable;
  j["e_final"] = std::move(finals);
  return j;
}

struct Command {
  virtual ~Command() = default;
  virtual Json run(Artifacts& artifacts) = 0;
};

struct GenOperator : Command {
  std::string kind = "gaussian";
  Eigen::Index m = 200, p = 1000;
  bool paper_dims = false;
  std::uint64_t seed = 0;
  double normalize = kUnitNormTarget;
  std::optional<Eigen::Index> j0;
  std::optional<double> eps;
  double decades = 8.0;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "gaussian | duplicated | swapped");
    app->add_option("--m", m, "Rows");
    app->add_option("--p", p, "Columns");
    app->add_flag("--paper-dims", paper_dims, "Use 1848 x 8192");
    app->add_option("--seed", seed, "Generator seed")->required();
    app->add_option("--normalize", normalize, "Largest singular value after scaling (0 keeps the raw scale)");
    app->add_option("--j0", j0, "First duplicated column (duplicated kind)");
    app->add_option("--eps", eps, "Perturbation size (duplicated kind)");
    app->add_option("--decades", decades, "Surrogate spectrum range (swapped kind)");
    app->add_option("--out", out, "Operator file")->required();
  }

  Json run(Artifacts& artifacts) override {
    OperatorRecipe r;
    try {
      r.kind = parse_operator_kind(kind);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    r.m = paper_dims ? 1848 : m;
    r.p = paper_dims ? 8192 : p;
    if (r.m < 1 || r.p < 1) throw UsageError("dimensions must be positive");
    if (!(normalize >= 0.0)) throw UsageError("--normalize must be non-negative");
    if (!(decades >= 0.0)) throw UsageError("--decades must be non-negative");
    if (eps && !(*eps >= 0.0)) throw UsageError("--eps must be non-negative");
    if (j0 && (*j0 < 0 || *j0 >= r.p)) throw UsageError("--j0 outside the column range");
    r.seed = seed;
    r.normalize = normalize;
    r.j0 = j0;
    r.eps = eps;
    r.decades = decades;
    require_parent(out);
    auto op = std::make_shared<Operator>(build_operator(r));
    artifacts.write_with(out, [op](const fs::path& tmp) { save_operator(*op, tmp); });
    const Vector sigma = op->singular_values();
    Json j;
    j["m"] = op->rows();
    j["p"] = op->cols();
    j["kind"] = kind;
    j["sigma_max"] = sigma[0];
    j["sigma_min"] = sigma[sigma.size() - 1];
    return j;
  }
};

struct GenData : Command {
  std::string op_path, out, x_out;
  Eigen::Index support = 20;
  double noise = 0.01;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--support", support, "Nonzeros of the synthetic input");
    app->add_option("--noise", noise, "Noise standard deviation");
    app->add_option("--seed", seed, "Generator seed")->required();
    app->add_option("--out", out, "Data vector file")->required();
    app->add_option("--x-out", x_out, "Also write the synthetic input vector");
  }

  Json run(Artifacts& artifacts) override {
    require_file(op_path);
    require_parent(out);
    if (!x_out.empty()) require_parent(x_out);
    if (!(noise >= 0.0)) throw UsageError("--noise must be non-negative");
    const Operator op = load_operator(op_path);
    if (support < 0 || support > op.cols()) throw UsageError("--support outside [0, p]");
    auto data = std::make_shared<SparseData>(gen_sparse_data(op, support, noise, seed));
    artifacts.write_with(out, [data](const fs::path& tmp) { save_vector(data->y, tmp); });
    if (!x_out.empty()) artifacts.write_with(x_out, [data](const fs::path& tmp) { save_vector(data->x_input, tmp); });
    CostCounter cost;
    Json j;
    j["m"] = data->y.size();
    j["support"] = support;
    j["y_norm"] = data->y.norm();
    j["lambda_max"] = lambda_max(op, data->y, cost);
    return j;
  }
};

struct LambdaMax : Command {
  std::string op_path, data_path;
  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
  }
  Json run(Artifacts&) override {
    const Loaded l = load_problem(op_path, data_path);
    CostCounter cost;
    Json j;
    j["lambda_max"] = lambda_max(*l.op, l.y, cost);
    return j;
  }
};

struct PathCmd : Command {
  std::string op_path, data_path, out, dump_dir;
  std::optional<double> k_stop, lambda_stop, rho_stop;
  std::size_t max_support = 100000, max_breakpoints = 100000;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
    app->add_option("--k-stop", k_stop, "Stop at lambda_max / 2^k (default 14)");
    app->add_option("--lambda-stop", lambda_stop, "Stop at this penalty");
    app->add_option("--rho-stop", rho_stop, "Stop at this l1 norm");
    app->add_option("--max-support", max_support, "Truncate above this support size");
    app->add_option("--max-breakpoints", max_breakpoints, "Truncate after this many breakpoints");
    app->add_option("--out", out, "Path CSV")->required();
    app->add_option("--dump-dir", dump_dir, "Directory for per-breakpoint iterate files");
  }

  Json run(Artifacts& artifacts) override {
    const int given = int(k_stop.has_value()) + int(lambda_stop.has_value()) + int(rho_stop.has_value());
    if (given > 1) throw UsageError("give at most one of --k-stop, --lambda-stop, --rho-stop");
    const Loaded l = load_problem(op_path, data_path);
    require_parent(out);
    if (!dump_dir.empty()) {
      std::error_code ec;
      if (!fs::is_directory(dump_dir, ec)) throw MissingFile("dump directory does not exist: " + dump_dir);
    }
    const Problem prob = Problem::penalized(l.op, l.y, 0.0);
    CostCounter cost;
    const double lam_max = lambda_max(*l.op, l.y, cost);
    PathStop stop;
    if (rho_stop) {
      if (!(*rho_stop >= 0.0)) throw UsageError("--rho-stop must be non-negative");
      stop = PathStop::at_rho(*rho_stop);
    } else if (lambda_stop) {
      if (!(*lambda_stop >= 0.0) || *lambda_stop > lam_max) throw UsageError("--lambda-stop outside [0, lambda_max]");
      stop = PathStop::at_lambda(*lambda_stop);
    } else {
      const double k = k_stop.value_or(14.0);
      if (!(k >= 0.0)) throw UsageError("--k-stop must be non-negative");
      stop = PathStop::at_lambda(lam_max * std::exp2(-k));
    }
    PathLimits limits;
    limits.max_support = max_support;
    limits.max_breakpoints = max_breakpoints;
    auto path = std::make_shared<HomotopyPath>(homotopy_solve(prob, stop, limits));

    std::ostringstream csv;
    write_path_csv(*path, csv);
    artifacts.text(out, csv.str());
    if (!dump_dir.empty()) {
      for (std::size_t j = 0; j < path->breakpoints.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "bp_%05zu.l1ve", j);
        artifacts.write_with(fs::path(dump_dir) / name,
                             [path, j](const fs::path& tmp) { save_vector(path->breakpoints[j].x, tmp); });
      }
      artifacts.write_with(fs::path(dump_dir) / "stop.l1ve",
                           [path](const fs::path& tmp) { save_vector(path->x_stop, tmp); });
    }

    double worst = 0.0;
    for (const auto& bp : path->breakpoints) {
      Problem at = prob;
      at.lambda = bp.lambda;
      worst = std::max(worst, fixed_point_residual(at, bp.x, cost));
    }
    Json j;
    j["lambda_max"] = path->lambda_max;
    j["lambda_stop"] = path->lambda_stop;
    j["breakpoints"] = path->breakpoints.size();
    j["final_support"] = static_cast<std::size_t>((path->x_stop.array() != 0.0).count());
    j["status"] = path->status == PathStatus::Complete ? "complete" : "truncated";
    if (!path->truncation_reason.empty()) j["truncation_reason"] = path->truncation_reason;
    j["max_fp_residual"] = worst;
    return j;
  }
};

struct Solve : Command {
  std::string op_path, data_path, out, algo = "fista";
  std::optional<double> k, lambda;
  BudgetArgs budgets;
  bool no_wall = false;
  bool no_reference = false;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
    app->add_option("--algo", algo, "ist | ist_wide | psd | gpsr | l1ls | fista");
    app->add_option("--k", k, "Penalty lambda_max / 2^k (default 4)");
    app->add_option("--lambda", lambda, "Penalty value");
    budgets.add(app);
    app->add_flag("--no-wall", no_wall, "Write zero wall-clock columns");
    app->add_flag("--no-reference", no_reference, "Skip the exact reference (errors become NaN)");
    app->add_option("--out", out, "Trace CSV")->required();
  }

  Json run(Artifacts& artifacts) override {
    Algorithm a;
    try {
      a = parse_algorithm(algo);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto ladder = budgets.resolve();
    const Loaded l = load_problem(op_path, data_path);
    require_parent(out);
    CostCounter cost;
    const double lam_max = lambda_max(*l.op, l.y, cost);
    const double lam = penalty_from(lam_max, k, lambda);
    Problem prob = Problem::penalized(l.op, l.y, lam);

    std::optional<Vector> reference;
    if (!no_reference || is_constrained(a)) {
      const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(lam));
      reference = path.x_stop;
    }
    if (is_constrained(a)) prob = Problem::constrained(l.op, l.y, reference->lpNorm<1>(), lam);
    if (no_reference) reference.reset();

    auto solver = make_solver(a, prob);
    const Trace trace = run_budgeted(*solver, ladder, reference);
    if (trace.failed) throw SolverError(trace.error);
    std::ostringstream csv;
    write_trace_csv(trace, lam > 0.0 ? std::log2(lam_max / lam) : std::numeric_limits<double>::infinity(), csv, true,
                    !no_wall);
    artifacts.text(out, csv.str());
    const auto& last = trace.snapshots.back();
    Json j;
    j["algo"] = algo;
    j["lambda"] = lam;
    j["cost"] = last.cost;
    j["iterations"] = last.n;
    j["e"] = last.e;
    j["F"] = last.F;
    j["fp_residual"] = last.fp_residual;
    return j;
  }
};

struct GridRun {
  std::string op_path, data_path;
  GridArgs grid;
  BudgetArgs budgets;
  bool no_wall = false;
  unsigned workers = default_workers();
  std::size_t max_support = 100000;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
    grid.add(app);
    budgets.add(app);
    app->add_flag("--no-wall", no_wall, "Write zero wall-clock columns");
    app->add_option("--workers", workers, "Concurrent cells (default: ISOBENCH_WORKERS or 1)");
    app->add_option("--max-support", max_support, "Reference path support limit");
  }

  struct Setup {
    Loaded loaded;
    Problem prob;
    Reference ref;
    std::vector<std::uint64_t> ladder;
  };

  Setup prepare() const {
    if (workers < 1) throw UsageError("--workers must be at least 1");
    const auto exponents = grid.resolve();
    const auto ladder = budgets.resolve();
    Loaded l = load_problem(op_path, data_path);
    Problem prob = Problem::penalized(l.op, l.y, 0.0);
    PathLimits limits;
    limits.max_support = max_support;
    Reference ref = build_reference(prob, exponents, limits);
    return {std::move(l), std::move(prob), std::move(ref), ladder};
  }
};

struct IsochroneCmd : Command {
  GridRun run_args;
  std::string algo = "ist", out;

  void add(CLI::App* app) {
    run_args.add(app);
    app->add_option("--algo", algo, "Algorithm name");
    app->add_option("--out", out, "Isochrone CSV")->required();
  }

  Json run(Artifacts& artifacts) override {
    Algorithm a;
    try {
      a = parse_algorithm(algo);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    require_parent(out);
    const auto setup = run_args.prepare();
    const IsochroneGrid g = isochrone(setup.prob, a, setup.ref, setup.ladder, {run_args.workers});
    std::ostringstream csv;
    write_isochrone_csv(g, csv, true, !run_args.no_wall);
    artifacts.text(out, csv.str());
    Json j = grid_summary(g);
    j["budgets"] = setup.ladder;
    return j;
  }
};

struct Compare : Command {
  GridRun run_args;
  std::string algos = "all", out_dir;

  void add(CLI::App* app) {
    run_args.add(app);
    app->add_option("--algos", algos, "Comma-separated algorithm names or 'all'");
    app->add_option("--out-dir", out_dir, "Directory for isochrones.csv and summary.json")->required();
  }

  Json run(Artifacts& artifacts) override {
    const auto list = parse_algos(algos);
    std::error_code ec;
    if (!fs::is_directory(out_dir, ec)) throw MissingFile("output directory does not exist: " + out_dir);
    const auto setup = run_args.prepare();
    const CompareResult result = compare_suite(setup.prob, list, setup.ref, setup.ladder, {run_args.workers});
    std::ostringstream csv;
    bool header = true;
    for (const auto& g : result.grids) {
      write_isochrone_csv(g, csv, header, !run_args.no_wall);
      header = false;
    }
    const std::string summary = summary_json(result);
    artifacts.text(fs::path(out_dir) / "isochrones.csv", csv.str());
    artifacts.text(fs::path(out_dir) / "summary.json", summary + "\n");
    Json j;
    Json names = Json::array();
    for (auto a : list) names.push_back(std::string(to_string(a)));
    j["algos"] = std::move(names);
    j["gridpoints"] = setup.ref.grid.exponents.size();
    j["budgets"] = setup.ladder;
    j["summary"] = Json::parse(summary);
    return j;
  }
};

struct Warmstart : Command {
  std::string op_path, data_path, out, method = "both";
  double k_stop = 12.0;
  std::size_t n_fpc = 600, n_apsd = 400;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
    app->add_option("--method", method, "fpc | apsd | both");
    app->add_option("--k-stop", k_stop, "Terminal penalty lambda_max / 2^k");
    app->add_option("--n-fpc", n_fpc, "Schedule steps for fixed-point continuation (2 units each)");
    app->add_option("--n-apsd", n_apsd, "Schedule steps for adaptive steepest descent (3 units each)");
    app->add_option("--out", out, "Warm-start CSV")->required();
  }

  Json run(Artifacts& artifacts) override {
    if (method != "fpc" && method != "apsd" && method != "both") throw UsageError("unknown method '" + method + "'");
    if (!(k_stop > 0.0)) throw UsageError("--k-stop must be positive");
    if (n_fpc < 1 || n_apsd < 1) throw UsageError("schedule step counts must be positive");
    const Loaded l = load_problem(op_path, data_path);
    require_parent(out);
    const Problem prob = Problem::penalized(l.op, l.y, 0.0);
    CostCounter cost;
    const double lam_max = lambda_max(*l.op, l.y, cost);
    const double lam_stop = lam_max * std::exp2(-k_stop);
    const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(lam_stop));

    std::ostringstream csv;
    Json j;
    j["lambda_stop"] = lam_stop;
    bool header = true;
    if (method != "apsd") {
      const auto samples = fpc_run(prob, Schedule::geometric(lam_max, lam_stop, n_fpc), &path);
      write_warmstart_csv("fpc", samples, prob, csv, header);
      header = false;
      j["fpc"] = {{"cost", samples.back().cost}, {"e", samples.back().e}};
    }
    if (method != "fpc") {
      const double rho_stop = path.x_stop.lpNorm<1>();
      if (!(rho_stop > 0.0)) throw UsageError("terminal minimizer is zero; choose a larger --k-stop");
      const auto samples = apsd_run(prob, Schedule::arithmetic(rho_stop, n_apsd, lam_max), &path);
      write_warmstart_csv("apsd", samples, prob, csv, header);
      j["apsd"] = {{"cost", samples.back().cost}, {"e", samples.back().e}};
    }
    artifacts.text(out, csv.str());
    return j;
  }
};

struct Complexity : Command {
  std::string op_path, data_path, out;
  double k_stop = 14.0;
  std::size_t s_lo = 50, s_hi = 400;
  bool no_wall = false;

  void add(CLI::App* app) {
    app->add_option("--op", op_path, "Operator file")->required();
    app->add_option("--data", data_path, "Data vector file")->required();
    app->add_option("--k-stop", k_stop, "Stop at lambda_max / 2^k");
    app->add_option("--s-lo", s_lo, "Smallest support size in the slope fit");
    app->add_option("--s-hi", s_hi, "Largest support size in the slope fit");
    app->add_flag("--no-wall", no_wall, "Write zero wall-clock columns");
    app->add_option("--out", out, "Complexity CSV")->required();
  }

  Json run(Artifacts& artifacts) override {
    if (!(k_stop >= 0.0)) throw UsageError("--k-stop must be non-negative");
    if (s_lo > s_hi) throw UsageError("--s-lo exceeds --s-hi");
    const Loaded l = load_problem(op_path, data_path);
    require_parent(out);
    const Problem prob = Problem::penalized(l.op, l.y, 0.0);
    CostCounter cost;
    const double lam_max = lambda_max(*l.op, l.y, cost);
    const auto rows = complexity_table(prob, PathStop::at_lambda(lam_max * std::exp2(-k_stop)));
    std::ostringstream csv;
    csv << "support_size,breakpoint_count,cost_units,flops,wall_seconds\n";
    for (const auto& r : rows) {
      csv << r.support_size << ',' << r.breakpoint_count << ',' << r.cost_units << ',' << Json(r.flops).dump() << ','
          << Json(no_wall ? 0.0 : r.wall_seconds).dump() << '\n';
    }
    artifacts.text(out, csv.str());
    Json j;
    j["breakpoints"] = rows.size();
    j["final_support"] = rows.empty() ? 0 : rows.back().support_size;
    j["slope"] = complexity_slope(rows, s_lo, s_hi);
    return j;
  }
};

Json error_line(const std::string& kind, const std::string& message) {
  Json j;
  j["ok"] = false;
  j["error"] = kind;
  j["message"] = message;
  return j;
}

}  // namespace

unsigned default_workers() {
  const char* env = std::getenv("ISOBENCH_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<unsigned>(v);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact l1 path solver and iterative-solver isochrone benchmarks", "isobench"};
  app.require_subcommand(1);

  GenOperator gen_operator;
  GenData gen_data;
  LambdaMax lam_max;
  PathCmd path;
  Solve solve;
  IsochroneCmd iso;
  Compare compare;
  Warmstart warm;
  Complexity complexity;

  const std::vector<std::pair<CLI::App*, Command*>> commands = {
      {app.add_subcommand("gen-operator", "Generate a test operator"), &gen_operator},
      {app.add_subcommand("gen-data", "Generate data from a sparse synthetic input"), &gen_data},
      {app.add_subcommand("lambda-max", "Smallest penalty with a zero minimizer"), &lam_max},
      {app.add_subcommand("path", "Exact homotopy path"), &path},
      {app.add_subcommand("solve", "Budgeted run of one iterative solver"), &solve},
      {app.add_subcommand("isochrone", "Isochrone grid for one algorithm"), &iso},
      {app.add_subcommand("compare", "Isochrone grids for several algorithms"), &compare},
      {app.add_subcommand("warmstart", "Continuation runs against the exact path"), &warm},
      {app.add_subcommand("complexity", "Homotopy work against support size"), &complexity},
  };
  gen_operator.add(commands[0].first);
  gen_data.add(commands[1].first);
  lam_max.add(commands[2].first);
  path.add(commands[3].first);
  solve.add(commands[4].first);
  iso.add(commands[5].first);
  compare.add(commands[6].first);
  warm.add(commands[7].first);
  complexity.add(commands[8].first);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    out << error_line("usage", e.what()).dump() << '\n';
    return kUsage;
  }

  Command* cmd = nullptr;
  std::string name;
  for (const auto& [sub, c] : commands) {
    if (sub->parsed()) {
      cmd = c;
      name = sub->get_name();
    }
  }

  auto fail = [&](const char* kind, const std::string& message, int code) {
    err << name << ": " << message << '\n';
    Json line = error_line(kind, message);
    line["command"] = name;
    out << line.dump() << '\n';
    return code;
  };

  try {
    Artifacts artifacts;
    Json summary;
    summary["ok"] = true;
    summary["command"] = name;
    Json body = cmd->run(artifacts);
    const auto written = artifacts.commit();
    for (auto& [key, value] : body.items()) summary[key] = value;
    if (!written.empty()) summary["artifacts"] = written;
    out << summary.dump() << '\n';
    return kOk;
  } catch (const MissingFile& e) {
    return fail("missing-file", e.what(), kUsage);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const FormatError& e) {
    if (e.kind() == FormatError::Kind::Io) return fail("io", e.what(), kUsage);
    return fail("format", e.what(), kUsage);
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const std::exception& e) {
    return fail("numerical", e.what(), kNumerical);
  }
}

}  // namespace isobench::cli
