#include <chrono>
#include <cmath>
#include <limits>

#include "vrsplit/baselines.hpp"
#include "vrsplit/errors.hpp"
#include "vrsplit/runner.hpp"

namespace vrsplit {

namespace {

constexpr double kDivergenceNorm = 1e12;

}  // namespace

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::VfosaPlus: return "vfosa_plus";
    case SolverKind::VfosaMinus: return "vfosa_minus";
    case SolverKind::Og: return "og";
    case SolverKind::Fkm: return "fkm";
    case SolverKind::VrHalpern: return "vr_halpern";
    case SolverKind::VrEg: return "vr_eg";
    case SolverKind::VrFrbs: return "vr_frbs";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  for (auto k : {SolverKind::VfosaPlus, SolverKind::VfosaMinus, SolverKind::Og, SolverKind::Fkm,
                 SolverKind::VrHalpern, SolverKind::VrEg, SolverKind::VrFrbs}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown solver '" + name + "'");
}

std::unique_ptr<Solver> make_solver(const GeProblem& problem, const MethodSpec& spec) {
  switch (spec.solver) {
    case SolverKind::VfosaPlus:
    case SolverKind::VfosaMinus:
      if (!spec.accel) throw ConfigError(std::string(to_string(spec.solver)) + " needs accel parameters");
      if (spec.solver == SolverKind::VfosaPlus) {
        return std::make_unique<VfosaPlus>(problem, *spec.accel, spec.estimator);
      }
      return std::make_unique<VfosaMinus>(problem, *spec.accel, spec.estimator);
    case SolverKind::Og:
      return std::make_unique<Og>(problem, spec.eta);
    case SolverKind::Fkm:
      return std::make_unique<Fkm>(problem, spec.eta);
    case SolverKind::VrHalpern:
      return std::make_unique<VrHalpern>(problem, spec.eta, spec.estimator);
    case SolverKind::VrEg:
      return std::make_unique<VrEg>(problem, spec.eta, spec.batch, spec.probability);
    case SolverKind::VrFrbs:
      return std::make_unique<VrFrbs>(problem, spec.eta, spec.batch, spec.probability);
  }
  throw ConfigError("unknown solver kind");
}

RunTrace run_solver(const GeProblem& problem, const MethodSpec& spec, const RunOptions& options) {
  auto solver = make_solver(problem, spec);
  RunTrace trace = run_solver(problem, *solver, options);
  trace.method = spec.label.empty() ? to_string(spec.solver) : spec.label;
  trace.estimator = to_string(spec.estimator.kind);
  return trace;
}

RunTrace run_solver(const GeProblem& problem, Solver& solver, const RunOptions& options) {
  if (!(options.budget_epochs >= 0.0)) throw ConfigError("budget_epochs must be nonnegative");
  if (!(options.report_lambda > 0.0)) throw ConfigError("report_lambda must be positive");
  if (options.x0.size() != problem.dim()) throw DimensionError("x0: dimension mismatch");
  if (options.metric_every < 0) throw ConfigError("metric_every must be nonnegative");

  using clock = std::chrono::steady_clock;
  const double lambda = options.report_lambda;
  const Index n = problem.n_components();
  const long long stride = options.metric_every > 0 ? options.metric_every : n;
  const double budget = options.budget_epochs * static_cast<double>(n);

  RunTrace trace;
  trace.method = solver.name();
  trace.problem = problem.tag();
  trace.seed = options.seed;

  Rng rng = make_stream(options.seed, options.stream);
  solver.initialize(options.x0, rng);
  const double g0 = fbs_residual(problem, options.x0, lambda).norm();
  trace.rows.push_back(TraceRow{0, 0.0, 1.0, 0.0});

  auto measure = [&](const Vec& x) {
    const double g = fbs_residual(problem, x, lambda).norm();
    if (g0 > 0.0) return g / g0;
    return g == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };

  double wall_ms = 0.0;
  long long next_mark = stride;
  long long last_units = 0;
  while (static_cast<double>(solver.oracle_units()) < budget &&
         (options.max_iterations == 0 || trace.iterations < options.max_iterations)) {
    const auto t0 = clock::now();
    solver.step(rng);
    wall_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    ++trace.iterations;

    const Vec x = solver.iterate();
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      trace.diverged = true;
      break;
    }
    const long long units = solver.oracle_units();
    const bool last = static_cast<double>(units) >= budget ||
                      (options.max_iterations != 0 && trace.iterations >= options.max_iterations);
    if ((units >= next_mark || last) && units > last_units) {
      TraceRow row;
      row.oracle_units = units;
      row.epochs = static_cast<double>(units) / static_cast<double>(n);
      row.rel_residual = measure(x);
      row.wall_ms = wall_ms;
      trace.rows.push_back(row);
      last_units = units;
      next_mark = (units / stride + 1) * stride;

      if (options.check_error_bound) {
        if (auto probe = solver.last_estimate()) {
          const Vec f_exact = problem.full(probe->point);
          const Vec g_est = fbs_residual(problem, probe->point, lambda, probe->estimate);
          const Vec g_exact = fbs_residual(problem, probe->point, lambda, f_exact);
          const double slack = (probe->estimate - f_exact).norm() - (g_est - g_exact).norm();
          trace.min_error_bound_slack = std::min(trace.min_error_bound_slack, slack);
          ++trace.error_bound_checks;
        }
      }
    }
  }
  return trace;
}

}  // namespace vrsplit
