#pragma once

#include <vector>

#include "vrsplit/types.hpp"

namespace vrsplit {

/// Soft thresholding: sign(x_i) max(|x_i| - threshold, 0).
Vec prox_l1(const Vec& x, double threshold);

/// Componentwise prox of step * SCAD(weight, a).
///
/// Closed form, valid while step < a - 1 (the scalar subproblem is then strictly convex):
///   |x| <= weight (1 + step)          soft threshold at step * weight
///   weight (1 + step) < |x| < a w     ((a - 1) x - sign(x) a step w) / (a - 1 - step)
///   |x| >= a w                        x (both pieces agree at a w)
/// At the knee the soft-threshold piece is used.
Vec prox_scad(const Vec& x, double step, double weight, double a);

/// Euclidean projection onto the unit simplex (sort and threshold).
Vec project_simplex(const Vec& v);

enum class BlockKind { Identity, L1, Scad, Simplex };

struct ResolventBlock {
  Index offset = 0;
  Index length = 0;
  BlockKind kind = BlockKind::Identity;
  double weight = 0.0;  // l1 / scad regularization weight
  double a = 3.7;       // scad shape
};

/// Product resolvent over a partition of the coordinates.
class BlockResolvent {
 public:
  /// Throws ConfigError if blocks do not partition [0, dim).
  BlockResolvent(Index dim, std::vector<ResolventBlock> blocks);

  Index dim() const { return dim_; }
  const std::vector<ResolventBlock>& blocks() const { return blocks_; }

  Vec apply(const Vec& x, double lambda) const;

 private:
  Index dim_;
  std::vector<ResolventBlock> blocks_;
};

Vec apply_block_resolvent(const BlockResolvent& res, const Vec& x, double lambda);

}  // namespace vrsplit
