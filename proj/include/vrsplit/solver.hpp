#pragma once

#include <optional>
#include <string>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

/// Estimate of F taken at `point` during the most recent step.
struct EstimateProbe {
  Vec point;
  Vec estimate;
};

/// Common interface for every iterative method driven by the benchmark loop.
class Solver {
 public:
  virtual ~Solver() = default;

  virtual std::string name() const = 0;
  virtual void initialize(const Vec& x0, Rng& rng) = 0;
  virtual void step(Rng& rng) = 0;

  /// Point whose residual is reported (x for forward-backward schemes, J(u) for the backward-forward one).
  virtual Vec iterate() const = 0;

  virtual long long oracle_units() const = 0;
  virtual long long resolvent_calls() const = 0;
  virtual long long estimator_calls() const { return 0; }
  virtual Index iteration() const = 0;

  virtual std::optional<EstimateProbe> last_estimate() const { return std::nullopt; }
};

}  // namespace vrsplit
