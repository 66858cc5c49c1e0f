#pragma once

#include <memory>
#include <random>
#include <vector>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/prox.hpp"

namespace testing {

using vrsplit::GeProblem;
using vrsplit::Index;
using vrsplit::Mat;
using vrsplit::Rng;
using vrsplit::Vec;

inline Vec randn(Index p, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g;
  Vec v(p);
  for (Index i = 0; i < p; ++i) v[i] = scale * g(rng);
  return v;
}

/// F x = c x in one dimension, T = 0 unless a resolvent is given.
inline GeProblem scalar_problem(double c, GeProblem::ResolventFn resolvent = {}, double L = 0.0) {
  GeProblem::Parts parts;
  parts.dim = 1;
  parts.component = [c](Index, const Vec& x, Vec& out) { out = c * x; };
  parts.resolvent = std::move(resolvent);
  parts.lipschitz_L = L > 0.0 ? L : std::max(std::abs(c), 1e-12);
  return GeProblem(parts);
}

/// n components F_i x = A_i x + b_i with random PSD A_i; L = max ||A_i||.
inline GeProblem random_finite_sum(Index n, Index p, Rng& rng, GeProblem::ResolventFn resolvent = {}) {
  auto mats = std::make_shared<std::vector<Mat>>();
  auto shifts = std::make_shared<std::vector<Vec>>();
  double L = 0.0;
  for (Index i = 0; i < n; ++i) {
    Mat a(p, p);
    for (Index r = 0; r < p; ++r) a.row(r) = randn(p, rng).transpose();
    Mat s = a.transpose() * a / static_cast<double>(p);
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    L = std::max(L, es.eigenvalues().maxCoeff());
    mats->push_back(s);
    shifts->push_back(randn(p, rng));
  }
  GeProblem::Parts parts;
  parts.dim = p;
  parts.n_components = n;
  parts.component = [mats, shifts](Index i, const Vec& x, Vec& out) {
    out = (*mats)[static_cast<std::size_t>(i)] * x + (*shifts)[static_cast<std::size_t>(i)];
  };
  parts.resolvent = std::move(resolvent);
  parts.lipschitz_L = L;
  parts.tag = "finite_sum";
  return GeProblem(parts);
}

inline double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace testing
