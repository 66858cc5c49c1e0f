#pragma once

#include <memory>
#include <optional>
#include <string>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/estimators.hpp"
#include "vrsplit/solver.hpp"
#include "vrsplit/splitting.hpp"
#include "vrsplit/trace.hpp"

namespace vrsplit {

enum class SolverKind { VfosaPlus, VfosaMinus, Og, Fkm, VrHalpern, VrEg, VrFrbs };

const char* to_string(SolverKind kind);
/// Accepts the to_string names. Throws ConfigError.
SolverKind solver_kind_from_string(const std::string& name);

struct MethodSpec {
  std::string label;  // name written to traces; defaults to the solver name
  SolverKind solver = SolverKind::VfosaPlus;
  EstimatorConfig estimator = full_batch_config();
  std::optional<AccelParams> accel;  // required by the accelerated schemes
  double eta = 0.0;                  // baseline step size
  Index batch = 1;                   // VrEg / VrFrbs
  double probability = 1.0;          // VrEg / VrFrbs
};

std::unique_ptr<Solver> make_solver(const GeProblem& problem, const MethodSpec& spec);

struct RunOptions {
  double budget_epochs = 200.0;
  long long metric_every = 0;  // oracle units between measurements; 0 means one epoch
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Vec x0;
  double report_lambda = 0.0;  // lambda of the reported residual; required
  bool check_error_bound = false;
  long long max_iterations = 0;  // 0: budget only
};

/// Drives a solver until the oracle budget is spent.
/// Row 0 is (0 units, rel 1.0); later rows appear once per metric stride and at the end.
/// Residuals use the exact F and are not charged to the budget.
/// A non-finite iterate or ||x|| > 1e12 stops the run with `diverged` set.
RunTrace run_solver(const GeProblem& problem, const MethodSpec& spec, const RunOptions& options);

/// Same loop over an already constructed solver.
RunTrace run_solver(const GeProblem& problem, Solver& solver, const RunOptions& options);

}  // namespace vrsplit
