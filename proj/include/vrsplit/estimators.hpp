#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

enum class EstimatorKind { FullBatch, Lsvrg, Saga, Lsarah, Hsgd };

const char* to_string(EstimatorKind kind);
/// Accepts "full_batch", "lsvrg"/"svrg", "saga", "lsarah"/"sarah", "hsgd". Throws ConfigError.
EstimatorKind estimator_kind_from_string(const std::string& name);

using IndexSchedule = std::function<Index(Index k)>;
using RealSchedule = std::function<double(Index k)>;

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::FullBatch;
  IndexSchedule batch;      // b_k; clamped to [1, n] on use
  RealSchedule probability; // p_k (snapshot refresh for L-SVRG, full restart for L-SARAH)
  RealSchedule tau;         // HSGD mixing weight in [0, 1]
  IndexSchedule hat_batch;  // HSGD unbiased-part batch; defaults to batch
  Index mega_batch = 0;     // 0: exact full passes; > 0: every full pass becomes this many i.i.d. draws
  double theta = 0.0;       // HSGD
  double alpha = 0.5;       // analysis constant, carried for reporting only
  std::string description;
  std::vector<std::string> warnings;
};

EstimatorConfig full_batch_config();

/// Fixed b and p (p is not clamped, so p = 0 disables refreshes entirely).
EstimatorConfig fixed_config(EstimatorKind kind, Index batch, double probability);

enum class SchedulePreset { Theory, Practical, PracticalHalved };

struct ScheduleConstants {
  double c_p = 0.5;
  double c_b = 0.5;
  double r = 0.0;      // 0 means 2 + 1/mu
  double mu = 0.95 * 2.0 / 3.0;
  double theta = 0.0;  // HSGD; 0 means 1/n
};

/// Schedules for the given estimator.
///   Practical: SVRG  p = 1/(2 n^{1/3}), b = floor(n^{2/3}/2)
///              SAGA  b = min(n, floor(n^{2/3}/2))
///              SARAH p = 1/(2 sqrt n),  b = floor(sqrt(n)/2)
///              HSGD  theta = 1/n,       b = floor(sqrt(n)/2)
///   PracticalHalved: p and b of the practical preset halved.
///   Theory:    the piecewise complexity-optimal rules, omega selecting the batch exponent
///              (SAGA always uses omega = 1/3). Violated size requirements are recorded as warnings.
/// HSGD tau_k = 1 - sqrt((1 - theta) t_{k-1}(t_{k-1} - 1) / (t_k (t_k - 1))), t_k = mu (k + r).
/// b_k is clamped to [1, n] and p_k to [1e-6, 1].
EstimatorConfig build_schedule(EstimatorKind kind, Index n, double omega,
                               const ScheduleConstants& constants,
                               SchedulePreset preset = SchedulePreset::Practical);

/// Random choices consumed by one estimator step.
struct Draw {
  Index k = 0;
  bool refresh = false;           // snapshot refresh (L-SVRG) or full restart (L-SARAH)
  std::vector<Index> batch;       // minibatch S_k, with replacement
  std::vector<Index> hat_batch;   // HSGD unbiased part
  std::vector<Index> mega;        // indices replacing a full pass when mega_batch > 0
};

/// Stateful variance-reduced estimator of F x^k.
///
/// Copying an estimator freezes its state; tests rely on this to enumerate minibatches.
class VrEstimator {
 public:
  VrEstimator(const GeProblem& problem, EstimatorConfig config);

  /// k = 0: full pass (or mega-batch) at x0. Returns F~^0.
  Vec initialize(const Vec& x0, Rng& rng);

  /// k >= 1. Draws with `draw` and applies `estimate_with`.
  Vec estimate(const Vec& x, Rng& rng);

  /// Random choices for the next step. Order: refresh coin (only if 0 < p < 1),
  /// minibatch (only if used), hat batch (only if used), mega-batch (only if used).
  Draw draw(Rng& rng) const;

  /// Deterministic update given the draws.
  Vec estimate_with(const Vec& x, const Draw& d);

  Index step() const { return k_; }
  bool initialized() const { return initialized_; }
  long long oracle_calls() const { return oracle_calls_; }
  const EstimatorConfig& config() const { return config_; }

  const Vec& snapshot_x() const { return snapshot_x_; }
  const Vec& snapshot_F() const { return snapshot_F_; }
  const RowMat& saga_table() const { return table_; }  // row i holds the stored F_i
  const Vec& saga_mean() const { return table_mean_; }
  const Vec& prev_estimate() const { return prev_estimate_; }
  const Vec& prev_x() const { return prev_x_; }

  Index batch_size(Index k) const;
  Index hat_batch_size(Index k) const;
  double probability(Index k) const;
  double tau(Index k) const;

 private:
  Vec full_pass(const Vec& x, const std::vector<Index>& mega);
  Vec batch_mean(const Vec& x, const std::vector<Index>& idx);
  Vec batch_mean_diff(const Vec& x, const Vec& y, const std::vector<Index>& idx);
  void saga_overwrite(const std::vector<Index>& idx, const std::vector<Vec>& values);
  std::vector<Index> sample(Rng& rng, Index size) const;

  const GeProblem* problem_;
  EstimatorConfig config_;
  Index n_;
  Index k_ = 0;
  bool initialized_ = false;
  long long oracle_calls_ = 0;

  Vec snapshot_x_, snapshot_F_;
  RowMat table_;
  Vec table_mean_;
  Index table_updates_ = 0;
  Vec prev_estimate_, prev_x_;
};

}  // namespace vrsplit
