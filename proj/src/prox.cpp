#include "vrsplit/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

Vec prox_l1(const Vec& x, double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("l1 threshold must be nonnegative");
  Vec out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = soft(x[i], threshold);
  return out;
}

Vec prox_scad(const Vec& x, double step, double weight, double a) {
  if (!(a > 2.0)) throw ConfigError("scad shape a must exceed 2");
  if (!(step > 0.0)) throw ConfigError("scad step must be positive");
  if (!(weight >= 0.0)) throw ConfigError("scad weight must be nonnegative");
  if (!(step < a - 1.0)) {
    std::ostringstream msg;
    msg << "scad prox degenerate: step " << step << " must be below a - 1 = " << a - 1.0;
    throw ConfigError(msg.str());
  }
  const double knee = weight * (1.0 + step);
  const double flat = a * weight;
  const double denom = a - 1.0 - step;
  Vec out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double m = std::abs(xi);
    if (m <= knee) {
      out[i] = soft(xi, step * weight);
    } else if (m < flat) {
      const double s = xi > 0.0 ? 1.0 : -1.0;
      out[i] = ((a - 1.0) * xi - s * a * step * weight) / denom;
    } else {
      out[i] = xi;
    }
  }
  return out;
}

Vec project_simplex(const Vec& v) {
  const Index p = v.size();
  if (p == 0) throw DimensionError("simplex projection of an empty vector");
  std::vector<double> sorted(v.data(), v.data() + p);
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < p; ++j) {
    cumsum += sorted[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) theta = t;
  }
  Vec out(p);
  for (Index i = 0; i < p; ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

BlockResolvent::BlockResolvent(Index dim, std::vector<ResolventBlock> blocks)
    : dim_(dim), blocks_(std::move(blocks)) {
  std::sort(blocks_.begin(), blocks_.end(),
            [](const ResolventBlock& l, const ResolventBlock& r) { return l.offset < r.offset; });
  Index next = 0;
  for (const auto& b : blocks_) {
    if (b.length <= 0) throw ConfigError("resolvent block with nonpositive length");
    if (b.offset != next) {
      std::ostringstream msg;
      msg << "resolvent blocks " << (b.offset < next ? "overlap" : "leave a gap") << " at offset "
          << std::min(b.offset, next);
      throw ConfigError(msg.str());
    }
    if ((b.kind == BlockKind::L1 || b.kind == BlockKind::Scad) && !(b.weight >= 0.0)) {
      throw ConfigError("regularization weight must be nonnegative");
    }
    if (b.kind == BlockKind::Scad && !(b.a > 2.0)) throw ConfigError("scad shape a must exceed 2");
    next = b.offset + b.length;
  }
  if (next != dim_) throw ConfigError("resolvent blocks do not cover the dimension");
}

Vec BlockResolvent::apply(const Vec& x, double lambda) const {
  if (x.size() != dim_) throw DimensionError("block resolvent: dimension mismatch");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  Vec out(dim_);
  for (const auto& b : blocks_) {
    const Vec seg = x.segment(b.offset, b.length);
    switch (b.kind) {
      case BlockKind::Identity:
        out.segment(b.offset, b.length) = seg;
        break;
      case BlockKind::L1:
        out.segment(b.offset, b.length) = prox_l1(seg, lambda * b.weight);
        break;
      case BlockKind::Scad:
        out.segment(b.offset, b.length) = prox_scad(seg, lambda, b.weight, b.a);
        break;
      case BlockKind::Simplex:
        out.segment(b.offset, b.length) = project_simplex(seg);
        break;
    }
  }
  return out;
}

Vec apply_block_resolvent(const BlockResolvent& res, const Vec& x, double lambda) {
  return res.apply(x, lambda);
}

}  // namespace vrsplit
