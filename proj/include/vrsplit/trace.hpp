#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace vrsplit {

struct TraceRow {
  long long oracle_units = 0;
  double epochs = 0.0;
  double rel_residual = 0.0;
  double wall_ms = 0.0;

  bool operator==(const TraceRow&) const = default;
};

/// Residual history of one run. Only metadata and rows are serialized.
struct RunTrace {
  std::string method;
  std::string estimator;
  std::string problem;
  std::uint64_t seed = 0;
  std::string params_digest;
  std::vector<TraceRow> rows;

  bool diverged = false;
  long long iterations = 0;
  // min over measured iterates of ||F~ - F x|| - ||G~ - G x||, when requested
  double min_error_bound_slack = std::numeric_limits<double>::infinity();
  long long error_bound_checks = 0;
};

}  // namespace vrsplit
