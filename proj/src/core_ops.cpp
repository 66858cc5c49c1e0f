#include "vrsplit/core_ops.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

void require_dim(const Vec& v, Index dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream msg;
    msg << what << ": expected dimension " << dim << ", got " << v.size();
    throw DimensionError(msg.str());
  }
}

void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be positive and finite");
  }
}

Vec sample_box(Rng& rng, Index dim, double radius) {
  Vec x(dim);
  std::uniform_real_distribution<double> unif(-radius, radius);
  for (Index i = 0; i < dim; ++i) x[i] = unif(rng);
  return x;
}

}  // namespace

GeProblem::GeProblem(Parts parts) : parts_(std::move(parts)) {
  if (parts_.dim <= 0) throw ConfigError("problem dimension must be positive");
  if (parts_.n_components <= 0) throw ConfigError("component count must be positive");
  if (!parts_.component) throw ConfigError("component oracle is required");
  if (!(parts_.lipschitz_L > 0.0)) throw ConfigError("L must be positive");
  if (parts_.cohypo_rho < 0.0) throw ConfigError("rho must be nonnegative");
  if (parts_.known_solution) require_dim(*parts_.known_solution, parts_.dim, "known solution");
}

void GeProblem::component(Index i, const Vec& x, Vec& out) const {
  out.resize(parts_.dim);
  parts_.component(i, x, out);
}

Vec GeProblem::component(Index i, const Vec& x) const {
  Vec out(parts_.dim);
  parts_.component(i, x, out);
  return out;
}

Vec GeProblem::full(const Vec& x) const {
  require_dim(x, parts_.dim, "F x");
  if (parts_.full) {
    Vec out(parts_.dim);
    parts_.full(x, out);
    return out;
  }
  return component_mean(x);
}

Vec GeProblem::component_mean(const Vec& x) const {
  require_dim(x, parts_.dim, "F x");
  Vec acc = Vec::Zero(parts_.dim);
  Vec tmp(parts_.dim);
  for (Index i = 0; i < parts_.n_components; ++i) {
    parts_.component(i, x, tmp);
    acc += tmp;
  }
  acc /= static_cast<double>(parts_.n_components);
  return acc;
}

Vec GeProblem::resolvent(const Vec& x, double lambda) const {
  require_dim(x, parts_.dim, "resolvent");
  if (!parts_.resolvent) return x;
  return parts_.resolvent(x, lambda);
}

Vec GeProblem::to_domain(const Vec& x) const {
  if (!parts_.to_domain) return x;
  return parts_.to_domain(x);
}

Vec fbs_residual(const GeProblem& problem, const Vec& x, double lambda, const Vec& f_value) {
  require_positive_lambda(lambda);
  require_dim(x, problem.dim(), "fbs_residual x");
  require_dim(f_value, problem.dim(), "fbs_residual f_value");
  const Vec w = problem.resolvent(x - lambda * f_value, lambda);
  return (x - w) / lambda;
}

Vec fbs_residual(const GeProblem& problem, const Vec& x, double lambda) {
  return fbs_residual(problem, x, lambda, problem.full(x));
}

BfsResidual bfs_residual(const Vec& u, double lambda, const Vec& shadow_x, const Vec& f_at_shadow) {
  require_positive_lambda(lambda);
  require_dim(shadow_x, u.size(), "bfs_residual shadow");
  require_dim(f_at_shadow, u.size(), "bfs_residual f");
  BfsResidual out;
  out.xi = (u - shadow_x) / lambda;
  out.value = f_at_shadow + out.xi;
  return out;
}

SplitConstants compute_split_constants(double L, double rho, double zeta,
                                       std::optional<double> lambda_override) {
  if (!(L > 0.0)) throw ConfigError("L must be positive");
  if (rho < 0.0) throw ConfigError("rho must be nonnegative");
  if (zeta < 0.0) throw ConfigError("zeta must be nonnegative");

  SplitConstants c;
  c.L = L;
  c.rho = rho;
  c.L_hat = L + zeta;
  if (!(c.L_hat * rho < 1.0)) throw ConfigError("violated L_hat * rho < 1");

  c.lambda = lambda_override.value_or(1.0 / c.L_hat);
  require_positive_lambda(c.lambda);
  if (c.lambda < 2.0 * rho) throw ConfigError("violated 2 * rho <= lambda");
  const double upper = 2.0 * (1.0 + std::sqrt(1.0 - c.L_hat * rho)) / c.L_hat;
  if (!(c.lambda < upper)) {
    throw ConfigError("violated lambda < 2 (1 + sqrt(1 - L_hat rho)) / L_hat");
  }

  c.beta_bar = (c.lambda * (4.0 - c.L_hat * c.lambda) - 4.0 * rho) / (4.0 * (1.0 - rho * c.L_hat));
  c.Lambda_gap = (c.L_hat - L) / (L * c.L_hat);
  if (c.beta_bar < 0.0) throw ConfigError("violated beta_bar >= 0");
  return c;
}

CocoercivityReport check_cocoercivity(const GeProblem& problem, const SamplingOptions& opts) {
  Rng rng = make_stream(opts.seed, 0);
  const Index n = problem.n_components();
  const double scale = 1.0 / (static_cast<double>(n) * problem.lipschitz());
  CocoercivityReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  Vec fx(problem.dim()), fy(problem.dim());
  for (Index s = 0; s < opts.pairs; ++s) {
    const Vec x = problem.to_domain(sample_box(rng, problem.dim(), opts.radius));
    const Vec y = problem.to_domain(sample_box(rng, problem.dim(), opts.radius));
    double sq = 0.0;
    for (Index i = 0; i < n; ++i) {
      problem.component(i, x, fx);
      problem.component(i, y, fy);
      sq += (fx - fy).squaredNorm();
    }
    const double inner = (problem.full(x) - problem.full(y)).dot(x - y);
    report.min_margin = std::min(report.min_margin, inner - scale * sq);
    ++report.pairs;
  }
  return report;
}

NonexpansiveReport check_resolvent_nonexpansive(const GeProblem& problem, double lambda,
                                                const SamplingOptions& opts) {
  require_positive_lambda(lambda);
  Rng rng = make_stream(opts.seed, 1);
  NonexpansiveReport report;
  for (Index s = 0; s < opts.pairs; ++s) {
    const Vec x = sample_box(rng, problem.dim(), opts.radius);
    const Vec y = sample_box(rng, problem.dim(), opts.radius);
    const double denom = (x - y).norm();
    if (denom == 0.0) continue;
    const double ratio = (problem.resolvent(x, lambda) - problem.resolvent(y, lambda)).norm() / denom;
    report.max_ratio = std::max(report.max_ratio, ratio);
    ++report.pairs;
  }
  return report;
}

ResidualInequalityReport check_residual_inequality(const GeProblem& problem,
                                                   const SplitConstants& constants,
                                                   const SamplingOptions& opts,
                                                   std::optional<double> beta_bar_override) {
  Rng rng = make_stream(opts.seed, 2);
  const double beta_bar = beta_bar_override.value_or(constants.beta_bar);
  ResidualInequalityReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (Index s = 0; s < opts.pairs; ++s) {
    const Vec x = problem.to_domain(sample_box(rng, problem.dim(), opts.radius));
    const Vec y = problem.to_domain(sample_box(rng, problem.dim(), opts.radius));
    const Vec fx = problem.full(x);
    const Vec fy = problem.full(y);
    const Vec dg = fbs_residual(problem, x, constants.lambda, fx) -
                   fbs_residual(problem, y, constants.lambda, fy);
    const Vec dx = x - y;
    const double slack = dg.dot(dx) - beta_bar * dg.squaredNorm() -
                         constants.Lambda_gap * constants.L * (fx - fy).dot(dx);
    report.min_slack = std::min(report.min_slack, slack);
    ++report.pairs;
  }
  return report;
}

}  // namespace vrsplit
