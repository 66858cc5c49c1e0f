#include "vrsplit/splitting.hpp"

#include <cmath>
#include <sstream>

#include "vrsplit/errors.hpp"

namespace vrsplit {

AccelParams::AccelParams(double mu, double r, double beta, double lambda, double beta_bar)
    : mu_(mu), r_(r), beta_(beta), lambda_(lambda), beta_bar_(beta_bar) {
  if (!(mu > 0.0)) throw ConfigError("violated 0 < mu");
  if (!(mu < 2.0 / 3.0)) throw ConfigError("violated mu < 2/3");
  if (!(r >= 2.0 + 1.0 / mu - 1e-12)) throw ConfigError("violated r >= 2 + 1/mu");
  if (!(lambda > 0.0)) throw ConfigError("violated lambda > 0");
  if (!(beta > 0.0)) throw ConfigError("violated 0 < beta");
  const double cap = (2.0 - mu) * beta_bar / (2.0 + mu);
  if (!(beta <= cap * (1.0 + 1e-12))) {
    std::ostringstream msg;
    msg << "violated beta <= (2 - mu) beta_bar / (2 + mu): beta = " << beta << ", bound = " << cap;
    throw ConfigError(msg.str());
  }
}

AccelParams AccelParams::theory(const SplitConstants& constants, double mu, std::optional<double> r) {
  const double beta = (2.0 - mu) * constants.beta_bar / (2.0 + mu);
  return AccelParams(mu, r.value_or(2.0 + 1.0 / mu), beta, constants.lambda, constants.beta_bar);
}

StepSchedule schedule_tk_etak(const AccelParams& params, Index k) {
  if (k < 0) throw ConfigError("iteration index must be nonnegative");
  StepSchedule s;
  s.t = params.mu() * (static_cast<double>(k) + params.r());
  s.eta = 2.0 * params.beta() * (s.t - 1.0) / (s.t - params.nu());
  return s;
}

namespace {

void check_finite_start(const GeProblem& problem, const Vec& x0) {
  if (x0.size() != problem.dim()) throw DimensionError("initial point: dimension mismatch");
  if (!x0.allFinite()) throw ConfigError("initial point has non-finite entries");
}

}  // namespace

VfosaPlus::VfosaPlus(const GeProblem& problem, AccelParams params, EstimatorConfig estimator)
    : problem_(&problem), params_(params), estimator_(problem, std::move(estimator)) {}

void VfosaPlus::initialize(const Vec& x0, Rng&) {
  check_finite_start(*problem_, x0);
  x_ = x0;
  z_ = x0;
  k_ = 0;
  resolvent_calls_ = 0;
  estimator_calls_ = 0;
  ready_ = true;
}

void VfosaPlus::step(Rng& rng) {
  if (!ready_) throw StateError("vfosa_plus stepped before initialize");
  const double lambda = params_.lambda();
  const StepSchedule sc = schedule_tk_etak(params_, k_);

  last_F_ = k_ == 0 ? estimator_.initialize(x_, rng) : estimator_.estimate(x_, rng);
  ++estimator_calls_;
  const Vec w = problem_->resolvent(x_ - lambda * last_F_, lambda);
  ++resolvent_calls_;
  last_G_ = (x_ - w) / lambda;

  const Vec y = ((sc.t - 1.0) / sc.t) * x_ + z_ / sc.t;
  prev_x_ = x_;
  prev_z_ = z_;
  x_ = y - (sc.eta / lambda) * (prev_x_ - w);
  z_ = prev_z_ + params_.nu() * (x_ - y);
  last_sched_ = sc;
  ++k_;
}

std::optional<EstimateProbe> VfosaPlus::last_estimate() const {
  if (k_ == 0) return std::nullopt;
  return EstimateProbe{prev_x_, last_F_};
}

VfosaMinus::VfosaMinus(const GeProblem& problem, AccelParams params, EstimatorConfig estimator)
    : problem_(&problem), params_(params), estimator_(problem, std::move(estimator)) {}

void VfosaMinus::initialize(const Vec& x0, Rng& rng) {
  initialize(x0, Vec::Zero(x0.size()), rng);
}

void VfosaMinus::initialize(const Vec& x0, const Vec& xi0, Rng&) {
  check_finite_start(*problem_, x0);
  if (xi0.size() != x0.size()) throw DimensionError("xi0: dimension mismatch");
  u_ = x0 + params_.lambda() * xi0;
  s_ = u_;
  k_ = 0;
  resolvent_calls_ = 0;
  estimator_calls_ = 0;
  ready_ = true;
}

void VfosaMinus::step(Rng& rng) {
  if (!ready_) throw StateError("vfosa_minus stepped before initialize");
  const double lambda = params_.lambda();
  const StepSchedule sc = schedule_tk_etak(params_, k_);

  shadow_ = problem_->resolvent(u_, lambda);
  ++resolvent_calls_;
  last_F_ = k_ == 0 ? estimator_.initialize(shadow_, rng) : estimator_.estimate(shadow_, rng);
  ++estimator_calls_;

  const Vec v = ((sc.t - 1.0) / sc.t) * u_ + s_ / sc.t;
  const Vec u_next = v - (sc.eta / lambda) * (u_ - shadow_) - sc.eta * last_F_;
  s_ = s_ + params_.nu() * (u_next - v);
  u_ = u_next;
  last_sched_ = sc;
  ++k_;
}

Vec VfosaMinus::iterate() const {
  if (!ready_) throw StateError("vfosa_minus not initialized");
  return problem_->resolvent(u_, params_.lambda());
}

std::optional<EstimateProbe> VfosaMinus::last_estimate() const {
  if (k_ == 0) return std::nullopt;
  return EstimateProbe{shadow_, last_F_};
}

BfsResidual VfosaMinus::residual() const {
  const Vec x = iterate();
  return bfs_residual(u_, params_.lambda(), x, problem_->full(x));
}

}  // namespace vrsplit
