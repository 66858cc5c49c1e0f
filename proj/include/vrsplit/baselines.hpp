#pragma once

#include <cmath>
#include <vector>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/estimators.hpp"
#include "vrsplit/solver.hpp"

namespace vrsplit {

// Comparison methods. J below is the resolvent J_{eta T} at the method's own step eta.

/// Optimistic gradient (past extragradient), deterministic:
///   x+ = J(x - eta (2 F x - F x_prev)),  x_prev = x0 at the start.
/// One full F per iteration; the previous one is reused. Default eta = 1/L.
class Og : public Solver {
 public:
  Og(const GeProblem& problem, double eta);

  std::string name() const override { return "og"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return units_; }
  long long resolvent_calls() const override { return resolvent_calls_; }
  Index iteration() const override { return k_; }

 private:
  const GeProblem* problem_;
  double eta_;
  Vec x_, f_prev_;
  Index k_ = 0;
  long long units_ = 0, resolvent_calls_ = 0;
};

/// Fast Krasnosel'skii-Mann on the forward-backward residual M x = x - J(x - eta F x):
///   x+ = x + k/(k+a) (x - x_prev) - a/(2(k+a)) M x - k/(k+a) (M x - M x_prev)
/// with a = 3 and x_prev = x0. Default eta = 1/L.
class Fkm : public Solver {
 public:
  Fkm(const GeProblem& problem, double eta, double alpha = 3.0);

  std::string name() const override { return "fkm"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return units_; }
  long long resolvent_calls() const override { return resolvent_calls_; }
  Index iteration() const override { return k_; }

 private:
  const GeProblem* problem_;
  double eta_, alpha_;
  Vec x_, x_prev_, m_prev_;
  Index k_ = 0;
  long long units_ = 0, resolvent_calls_ = 0;
};

/// Variance-reduced Halpern iteration:
///   x+ = l_k x0 + (1 - l_k) J(x - eta F~),  l_k = 2/(k+4),
/// F~ from the supplied estimator (L-SARAH in the experiments).
/// Default eta = 1/(2L) on the logistic problem, 1/(4L) on the matrix game.
class VrHalpern : public Solver {
 public:
  VrHalpern(const GeProblem& problem, double eta, EstimatorConfig estimator);

  static double anchor_weight(Index k) { return 2.0 / (static_cast<double>(k) + 4.0); }

  std::string name() const override { return "vr_halpern"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return estimator_.oracle_calls(); }
  long long resolvent_calls() const override { return resolvent_calls_; }
  long long estimator_calls() const override { return estimator_calls_; }
  Index iteration() const override { return k_; }

 private:
  const GeProblem* problem_;
  double eta_;
  VrEstimator estimator_;
  Vec x0_, x_;
  Index k_ = 0;
  long long resolvent_calls_ = 0, estimator_calls_ = 0;
};

/// Loopless SVRG extragradient with snapshot w:
///   xb    = a x + (1 - a) w
///   xh    = J(xb - eta F w)
///   x+    = J(xb - eta [F w + F_S xh - F_S w])
///   w+    = x+ with probability p, else w   (full pass on refresh)
/// with a = 1 - p. Default eta = 0.99 sqrt(p) / L. Costs 2b per iteration plus refreshes.
class VrEg : public Solver {
 public:
  VrEg(const GeProblem& problem, double eta, Index batch, double probability);

  static double default_eta(double L, double probability) { return 0.99 * std::sqrt(probability) / L; }

  std::string name() const override { return "vr_eg"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return units_; }
  long long resolvent_calls() const override { return resolvent_calls_; }
  Index iteration() const override { return k_; }

 private:
  const GeProblem* problem_;
  double eta_;
  Index batch_;
  double p_;
  Vec x_, w_, fw_;
  Index k_ = 0;
  long long units_ = 0, resolvent_calls_ = 0;
};

/// Variance-reduced forward-reflected-backward splitting:
///   x+ = J(x - eta [F w + F_S x - F_S w_prev]),
///   w+ = x+ with probability p, else w   (full pass on refresh),
/// with w = w_prev = x0 at the start. Default eta = 0.99 (1 - sqrt(1 - p)) / (2L).
class VrFrbs : public Solver {
 public:
  VrFrbs(const GeProblem& problem, double eta, Index batch, double probability);

  static double default_eta(double L, double probability) {
    return 0.99 * (1.0 - std::sqrt(1.0 - probability)) / (2.0 * L);
  }

  std::string name() const override { return "vr_frbs"; }
  void initialize(const Vec& x0, Rng& rng) override;
  void step(Rng& rng) override;
  Vec iterate() const override { return x_; }
  long long oracle_units() const override { return units_; }
  long long resolvent_calls() const override { return resolvent_calls_; }
  Index iteration() const override { return k_; }

 private:
  const GeProblem* problem_;
  double eta_;
  Index batch_;
  double p_;
  Vec x_, w_, w_prev_, fw_;
  Index k_ = 0;
  long long units_ = 0, resolvent_calls_ = 0;
};

}  // namespace vrsplit
