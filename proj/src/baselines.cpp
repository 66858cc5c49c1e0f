#include "vrsplit/baselines.hpp"

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

void check_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("step size eta must be positive");
}

void check_start(const GeProblem& problem, const Vec& x0) {
  if (x0.size() != problem.dim()) throw DimensionError("initial point: dimension mismatch");
}

std::vector<Index> sample_batch(Rng& rng, Index n, Index b) {
  std::vector<Index> idx;
  if (b >= n) {
    idx.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
  }
  idx.resize(static_cast<std::size_t>(b));
  for (auto& i : idx) i = uniform_index(rng, n);
  return idx;
}

// (1/|S|) sum_{i in S} (F_i x - F_i y)
Vec batch_diff(const GeProblem& problem, const std::vector<Index>& idx, const Vec& x, const Vec& y) {
  Vec acc = Vec::Zero(problem.dim());
  Vec fx(problem.dim()), fy(problem.dim());
  for (Index i : idx) {
    problem.component(i, x, fx);
    problem.component(i, y, fy);
    acc += fx - fy;
  }
  return acc / static_cast<double>(idx.size());
}

bool coin(Rng& rng, double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform01(rng) < p;
}

void check_vr(double p, Index batch) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("probability must lie in (0, 1]");
  if (batch < 1) throw ConfigError("batch size must be at least 1");
}

}  // namespace

Og::Og(const GeProblem& problem, double eta) : problem_(&problem), eta_(eta) { check_eta(eta); }

void Og::initialize(const Vec& x0, Rng&) {
  check_start(*problem_, x0);
  x_ = x0;
  f_prev_.resize(0);
  k_ = 0;
  units_ = resolvent_calls_ = 0;
}

void Og::step(Rng&) {
  const Vec f = problem_->full(x_);
  units_ += problem_->n_components();
  if (k_ == 0) f_prev_ = f;
  x_ = problem_->resolvent(x_ - eta_ * (2.0 * f - f_prev_), eta_);
  ++resolvent_calls_;
  f_prev_ = f;
  ++k_;
}

Fkm::Fkm(const GeProblem& problem, double eta, double alpha)
    : problem_(&problem), eta_(eta), alpha_(alpha) {
  check_eta(eta);
  if (!(alpha > 2.0)) throw ConfigError("fkm alpha must exceed 2");
}

void Fkm::initialize(const Vec& x0, Rng&) {
  check_start(*problem_, x0);
  x_ = x0;
  x_prev_ = x0;
  m_prev_.resize(0);
  k_ = 0;
  units_ = resolvent_calls_ = 0;
}

void Fkm::step(Rng&) {
  const Vec f = problem_->full(x_);
  units_ += problem_->n_components();
  const Vec m = x_ - problem_->resolvent(x_ - eta_ * f, eta_);
  ++resolvent_calls_;
  if (k_ == 0) m_prev_ = m;
  const double kd = static_cast<double>(k_);
  const double mom = kd / (kd + alpha_);
  const Vec next = x_ + mom * (x_ - x_prev_) - (alpha_ / (2.0 * (kd + alpha_))) * m - mom * (m - m_prev_);
  x_prev_ = x_;
  x_ = next;
  m_prev_ = m;
  ++k_;
}

VrHalpern::VrHalpern(const GeProblem& problem, double eta, EstimatorConfig estimator)
    : problem_(&problem), eta_(eta), estimator_(problem, std::move(estimator)) {
  check_eta(eta);
}

void VrHalpern::initialize(const Vec& x0, Rng&) {
  check_start(*problem_, x0);
  x0_ = x0;
  x_ = x0;
  k_ = 0;
  resolvent_calls_ = estimator_calls_ = 0;
}

void VrHalpern::step(Rng& rng) {
  const Vec f = k_ == 0 ? estimator_.initialize(x_, rng) : estimator_.estimate(x_, rng);
  ++estimator_calls_;
  const Vec w = problem_->resolvent(x_ - eta_ * f, eta_);
  ++resolvent_calls_;
  const double l = anchor_weight(k_);
  x_ = l * x0_ + (1.0 - l) * w;
  ++k_;
}

VrEg::VrEg(const GeProblem& problem, double eta, Index batch, double probability)
    : problem_(&problem), eta_(eta), batch_(batch), p_(probability) {
  check_eta(eta);
  check_vr(probability, batch);
}

void VrEg::initialize(const Vec& x0, Rng&) {
  check_start(*problem_, x0);
  x_ = x0;
  w_ = x0;
  fw_.resize(0);
  k_ = 0;
  units_ = resolvent_calls_ = 0;
}

void VrEg::step(Rng& rng) {
  const Index n = problem_->n_components();
  if (k_ == 0) {
    fw_ = problem_->full(w_);
    units_ += n;
  }
  const double a = 1.0 - p_;
  const Vec xb = a * x_ + (1.0 - a) * w_;
  const Vec xh = problem_->resolvent(xb - eta_ * fw_, eta_);
  const auto idx = sample_batch(rng, n, batch_);
  const Vec g = fw_ + batch_diff(*problem_, idx, xh, w_);
  units_ += 2 * static_cast<long long>(idx.size());
  x_ = problem_->resolvent(xb - eta_ * g, eta_);
  resolvent_calls_ += 2;
  if (coin(rng, p_)) {
    w_ = x_;
    fw_ = problem_->full(w_);
    units_ += n;
  }
  ++k_;
}

VrFrbs::VrFrbs(const GeProblem& problem, double eta, Index batch, double probability)
    : problem_(&problem), eta_(eta), batch_(batch), p_(probability) {
  check_eta(eta);
  check_vr(probability, batch);
}

void VrFrbs::initialize(const Vec& x0, Rng&) {
  check_start(*problem_, x0);
  x_ = x0;
  w_ = x0;
  w_prev_ = x0;
  fw_.resize(0);
  k_ = 0;
  units_ = resolvent_calls_ = 0;
}

void VrFrbs::step(Rng& rng) {
  const Index n = problem_->n_components();
  if (k_ == 0) {
    fw_ = problem_->full(w_);
    units_ += n;
  }
  const auto idx = sample_batch(rng, n, batch_);
  const Vec g = fw_ + batch_diff(*problem_, idx, x_, w_prev_);
  units_ += 2 * static_cast<long long>(idx.size());
  x_ = problem_->resolvent(x_ - eta_ * g, eta_);
  ++resolvent_calls_;
  w_prev_ = w_;
  if (coin(rng, p_)) {
    w_ = x_;
    fw_ = problem_->full(w_);
    units_ += n;
  }
  ++k_;
}

}  // namespace vrsplit
