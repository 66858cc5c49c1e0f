#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "vrsplit/types.hpp"

namespace vrsplit {

/// A generalized equation 0 ∈ Fx + Tx with F given as a finite sum
/// F = (1/n) Σ F_i and T accessed only through its resolvent J_{λT}.
///
/// Instances are immutable once built and may be shared between threads.
class GeProblem {
 public:
  using ComponentFn = std::function<void(Index i, const Vec& x, Vec& out)>;
  using FullFn = std::function<void(const Vec& x, Vec& out)>;
  using ResolventFn = std::function<Vec(const Vec& x, double lambda)>;
  using DomainFn = std::function<Vec(const Vec& x)>;

  struct Parts {
    Index dim = 0;
    Index n_components = 1;
    ComponentFn component;        // out = F_i x
    FullFn full;                  // optional fast path for F x; defaults to the component mean
    ResolventFn resolvent;        // J_{λT}; defaults to the identity (T = 0)
    DomainFn to_domain;           // maps a sample point into dom T (identity if unset)
    double lipschitz_L = 1.0;     // F is 1/L-(average) co-coercive
    double cohypo_rho = 0.0;      // T is ρ-co-hypomonotone
    std::optional<Vec> known_solution;
    std::string tag;
  };

  explicit GeProblem(Parts parts);

  Index dim() const { return parts_.dim; }
  Index n_components() const { return parts_.n_components; }
  double lipschitz() const { return parts_.lipschitz_L; }
  double cohypo_rho() const { return parts_.cohypo_rho; }
  const std::string& tag() const { return parts_.tag; }
  const std::optional<Vec>& known_solution() const { return parts_.known_solution; }

  void component(Index i, const Vec& x, Vec& out) const;
  Vec component(Index i, const Vec& x) const;

  /// Exact F x.
  Vec full(const Vec& x) const;
  /// Mean of the components, always computed term by term.
  Vec component_mean(const Vec& x) const;

  Vec resolvent(const Vec& x, double lambda) const;
  Vec to_domain(const Vec& x) const;

 private:
  Parts parts_;
};

struct SplitConstants {
  double lambda = 0.0;
  double L = 0.0;
  double L_hat = 0.0;
  double rho = 0.0;
  double beta_bar = 0.0;
  double Lambda_gap = 0.0;  // (L̂ − L)/(L L̂)
};

/// G_λ x = (x − J_{λT}(x − λ f)) / λ with f = F x or an estimate of it.
Vec fbs_residual(const GeProblem& problem, const Vec& x, double lambda, const Vec& f_value);

/// Exact FBS residual, F evaluated through GeProblem::full.
Vec fbs_residual(const GeProblem& problem, const Vec& x, double lambda);

struct BfsResidual {
  Vec value;  // S_λ u
  Vec xi;     // (u − J_{λT}u)/λ, an element of T(J_{λT}u)
};

/// S_λ u = f + (u − shadow)/λ where shadow = J_{λT}u and f = F(shadow) or its estimate.
BfsResidual bfs_residual(const Vec& u, double lambda, const Vec& shadow_x, const Vec& f_at_shadow);

/// Default ζ in L̂ = L + ζ.
inline constexpr double kDefaultZetaFraction = 0.05;

/// Builds λ, L̂, β̄ and Λ. λ defaults to 1/L̂. Throws ConfigError naming the violated inequality.
SplitConstants compute_split_constants(double L, double rho, double zeta,
                                       std::optional<double> lambda_override = std::nullopt);

struct SamplingOptions {
  Index pairs = 1000;
  std::uint64_t seed = 0;
  double radius = 1.0;  // points drawn uniformly in [-radius, radius]^p, then mapped into dom T
};

struct CocoercivityReport {
  double min_margin = 0.0;
  Index pairs = 0;
};

/// min over sampled pairs of ⟨Fx−Fy, x−y⟩ − (1/(nL)) Σ‖F_i x − F_i y‖².
CocoercivityReport check_cocoercivity(const GeProblem& problem, const SamplingOptions& opts);

struct NonexpansiveReport {
  double max_ratio = 0.0;
  Index pairs = 0;
};

/// max over sampled pairs of ‖J x − J y‖ / ‖x − y‖.
NonexpansiveReport check_resolvent_nonexpansive(const GeProblem& problem, double lambda,
                                                const SamplingOptions& opts);

struct ResidualInequalityReport {
  double min_slack = 0.0;
  Index pairs = 0;
};

/// min over sampled pairs of
///   ⟨G x − G y, x − y⟩ − β̄‖G x − G y‖² − Λ L ⟨F x − F y, x − y⟩.
/// `beta_bar_override` replaces β̄ (used to exercise the check itself).
ResidualInequalityReport check_residual_inequality(const GeProblem& problem,
                                                   const SplitConstants& constants,
                                                   const SamplingOptions& opts,
                                                   std::optional<double> beta_bar_override = {});

}  // namespace vrsplit
