#pragma once

#include <memory>
#include <optional>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/estimators.hpp"
#include "vrsplit/solver.hpp"

namespace vrsplit {

/// Parameters of the accelerated schemes.
///   0 < mu < 2/3,  r >= 2 + 1/mu,  nu = mu/2,  0 < beta <= (2 - mu) beta_bar / (2 + mu).
class AccelParams {
 public:
  /// Throws ConfigError naming the violated inequality.
  AccelParams(double mu, double r, double beta, double lambda, double beta_bar);

  /// beta at its upper bound; r defaults to 2 + 1/mu.
  static AccelParams theory(const SplitConstants& constants, double mu = kDefaultMu,
                            std::optional<double> r = std::nullopt);

  static constexpr double kDefaultMu = 0.95 * 2.0 / 3.0;

  double mu() const { return mu_; }
  double r() const { return r_; }
  double nu() const { return mu_ / 2.0; }
  double beta() const { return beta_; }
  double lambda() const { return lambda_; }
  double beta_bar() const { return beta_bar_; }

 private:
  double mu_, r_, beta_, lambda_, beta_bar_;
};

struct StepSchedule {
  double t = 0.0;
  double eta = 0.0;
};

/// t_k = mu (k + r),  eta_k = 2 beta (t_k - 1) / (t_k - nu).
StepSchedule schedule_tk_etak(const AccelParams& params, Index k);

/// Forward-backward accelerated scheme:
///   y   = ((t-1)/t) x + z/t
///   w   = J(x - lambda F~)
///   x+  = y - (eta/lambda)(x - w)
///   z+  = z + nu (x+ - y)
/// starting from z = x.
class VfosaPlus : public Solver {
 public:
  VfosaPlus(const GeProblem& problem, AccelParams params, EstimatorConfig estimator);

  std::string name() const override { return "vfosa_plus"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return estimator_.oracle_calls(); }
  long long resolvent_calls() const override { return resolvent_calls_; }
  long long estimator_calls() const override { return estimator_calls_; }
  Index iteration() const override { return k_; }
  std::optional<EstimateProbe> last_estimate() const override;

  const Vec& x() const { return x_; }
  const Vec& z() const { return z_; }
  // Values from the most recent step, indexed by the step's k.
  const Vec& prev_x() const { return prev_x_; }
  const Vec& prev_z() const { return prev_z_; }
  const Vec& last_F() const { return last_F_; }
  const Vec& last_G() const { return last_G_; }
  const StepSchedule& last_schedule() const { return last_sched_; }
  const VrEstimator& estimator() const { return estimator_; }
  const AccelParams& params() const { return params_; }

 private:
  const GeProblem* problem_;
  AccelParams params_;
  VrEstimator estimator_;
  Index k_ = 0;
  Vec x_, z_, prev_x_, prev_z_, last_F_, last_G_;
  StepSchedule last_sched_;
  long long resolvent_calls_ = 0;
  long long estimator_calls_ = 0;
  bool ready_ = false;
};

/// Backward-forward accelerated scheme on u, with shadow x = J(u):
///   v   = ((t-1)/t) u + s/t
///   u+  = v - (eta/lambda)(u - x) - eta F~(x)
///   s+  = s + nu (u+ - v)
/// starting from u = x0 + lambda xi0 and s = u.
class VfosaMinus : public Solver {
 public:
  VfosaMinus(const GeProblem& problem, AccelParams params, EstimatorConfig estimator);

  std::string name() const override { return "vfosa_minus"; }
  void initialize(const Vec& x0, Rng& rng) override;
  /// xi0 must be an element of T x0; the default initialize uses xi0 = 0.
  void initialize(const Vec& x0, const Vec& xi0, Rng& rng);
  void step(Rng& rng) override;
  /// Shadow J(u); recomputed here, so it does not count as a resolvent call.
  Vec iterate() const override;
  long long oracle_units() const override { return estimator_.oracle_calls(); }
  long long resolvent_calls() const override { return resolvent_calls_; }
  long long estimator_calls() const override { return estimator_calls_; }
  Index iteration() const override { return k_; }
  std::optional<EstimateProbe> last_estimate() const override;

  const Vec& u() const { return u_; }
  const Vec& s() const { return s_; }
  const Vec& last_shadow() const { return shadow_; }
  const Vec& last_F() const { return last_F_; }
  const StepSchedule& last_schedule() const { return last_sched_; }
  const AccelParams& params() const { return params_; }

  /// S(u) = F(J u) + (u - J u)/lambda with exact F.
  BfsResidual residual() const;

 private:
  const GeProblem* problem_;
  AccelParams params_;
  VrEstimator estimator_;
  Index k_ = 0;
  Vec u_, s_, shadow_, last_F_;
  StepSchedule last_sched_;
  long long resolvent_calls_ = 0;
  long long estimator_calls_ = 0;
  bool ready_ = false;
};

}  // namespace vrsplit
