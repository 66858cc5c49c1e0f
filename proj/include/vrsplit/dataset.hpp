#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "vrsplit/types.hpp"

namespace vrsplit {

using SparseRow = std::vector<std::pair<Index, double>>;  // (0-based column, value), in file order

struct SparseDataset {
  std::vector<SparseRow> rows;
  std::vector<int> labels;  // 0 or 1
  Index dim = 0;            // number of columns, bias included once appended
  bool has_bias = false;

  Index size() const { return static_cast<Index>(rows.size()); }
};

/// LIBSVM text: "label idx:val idx:val ...", 1-based indices, '#' starts a comment.
/// Labels: {0,1} kept, -1 -> 0, digits 0..9 -> parity (odd -> 1).
/// Throws ParseError carrying the line number on malformed tokens or repeated indices.
SparseDataset parse_libsvm(const std::string& path);
SparseDataset parse_libsvm(std::istream& in);

/// Scales every row to unit Euclidean norm; zero rows stay zero.
void normalize_rows(SparseDataset& data);

/// normalize_rows, then appends a bias column of ones. A no-op on data that already has the bias.
void preprocess(SparseDataset& data);

RowMat to_dense(const SparseDataset& data);

/// n x p2 noisy copies of each preprocessed row. Noise hits the feature columns only; the bias stays 1.
class AmbiguousFeatures {
 public:
  AmbiguousFeatures(Index n, Index copies, Index dim);

  Index n() const { return n_; }
  Index copies() const { return copies_; }
  Index dim() const { return dim_; }

  // Row j of sample i, length dim.
  Eigen::Map<const Vec> copy(Index i, Index j) const {
    return Eigen::Map<const Vec>(data_.data() + offset(i, j), dim_);
  }
  Eigen::Map<Vec> copy(Index i, Index j) { return Eigen::Map<Vec>(data_.data() + offset(i, j), dim_); }

 private:
  std::size_t offset(Index i, Index j) const {
    return static_cast<std::size_t>((i * copies_ + j) * dim_);
  }
  Index n_, copies_, dim_;
  std::vector<double> data_;
};

AmbiguousFeatures make_ambiguous(const SparseDataset& data, Index p2, double sigma, Rng& rng);

/// Gaussian features with labels drawn from a logistic model on a random weight vector.
/// Returns raw (not preprocessed) data with `raw_features` columns.
SparseDataset generate_logistic_dataset(Index n, Index raw_features, Rng& rng);

}  // namespace vrsplit
