#include "vrsplit/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

int map_label(const std::string& tok, long line) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno != 0 || v != std::floor(v)) {
    throw ParseError("bad label '" + tok + "'", line);
  }
  const long long iv = static_cast<long long>(v);
  if (iv == -1) return 0;
  if (iv >= 0 && iv <= 9) return static_cast<int>(iv % 2);
  throw ParseError("unsupported label '" + tok + "'", line);
}

}  // namespace

SparseDataset parse_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return parse_libsvm(in);
}

SparseDataset parse_libsvm(std::istream& in) {
  SparseDataset data;
  std::string raw;
  long line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string tok;
    if (!(ls >> tok)) continue;
    const int label = map_label(tok, line);

    SparseRow row;
    std::unordered_set<Index> seen;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("malformed token '" + tok + "'", line);
      }
      const std::string idx_s = tok.substr(0, colon);
      const std::string val_s = tok.substr(colon + 1);
      char* end = nullptr;
      errno = 0;
      const long long idx = std::strtoll(idx_s.c_str(), &end, 10);
      if (*end != '\0' || errno != 0 || idx < 1) throw ParseError("bad index in '" + tok + "'", line);
      errno = 0;
      const double val = std::strtod(val_s.c_str(), &end);
      if (*end != '\0' || errno != 0 || !std::isfinite(val)) {
        throw ParseError("bad value in '" + tok + "'", line);
      }
      const Index col = static_cast<Index>(idx - 1);
      if (!seen.insert(col).second) throw ParseError("duplicate index " + idx_s, line);
      row.emplace_back(col, val);
      data.dim = std::max(data.dim, col + 1);
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

void normalize_rows(SparseDataset& data) {
  for (auto& row : data.rows) {
    double sq = 0.0;
    for (const auto& [col, val] : row) {
      if (!(data.has_bias && col == data.dim - 1)) sq += val * val;
    }
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [col, val] : row) {
      if (!(data.has_bias && col == data.dim - 1)) val *= inv;
    }
  }
}

void preprocess(SparseDataset& data) {
  if (data.has_bias) return;
  normalize_rows(data);
  const Index bias = data.dim;
  for (auto& row : data.rows) row.emplace_back(bias, 1.0);
  data.dim += 1;
  data.has_bias = true;
}

RowMat to_dense(const SparseDataset& data) {
  RowMat X = RowMat::Zero(data.size(), data.dim);
  for (Index i = 0; i < data.size(); ++i) {
    for (const auto& [col, val] : data.rows[static_cast<std::size_t>(i)]) X(i, col) = val;
  }
  return X;
}

AmbiguousFeatures::AmbiguousFeatures(Index n, Index copies, Index dim)
    : n_(n), copies_(copies), dim_(dim),
      data_(static_cast<std::size_t>(n * copies * dim), 0.0) {
  if (n < 0 || copies < 1 || dim < 1) throw ConfigError("ambiguous features: bad shape");
}

AmbiguousFeatures make_ambiguous(const SparseDataset& data, Index p2, double sigma, Rng& rng) {
  if (p2 < 1) throw ConfigError("number of ambiguous copies p2 must be at least 1");
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
  const RowMat X = to_dense(data);
  const Index features = data.has_bias ? data.dim - 1 : data.dim;
  AmbiguousFeatures out(data.size(), p2, data.dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < p2; ++j) {
      auto c = out.copy(i, j);
      c = X.row(i).transpose();
      for (Index f = 0; f < features; ++f) c[f] += sigma * noise(rng);
    }
  }
  return out;
}

SparseDataset generate_logistic_dataset(Index n, Index raw_features, Rng& rng) {
  if (n < 1 || raw_features < 1) throw ConfigError("synthetic dataset needs n >= 1 and features >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec w(raw_features);
  for (Index f = 0; f < raw_features; ++f) w[f] = gauss(rng);
  w *= 3.0 / std::max(w.norm(), 1e-12);

  SparseDataset data;
  data.dim = raw_features;
  for (Index i = 0; i < n; ++i) {
    Vec x(raw_features);
    for (Index f = 0; f < raw_features; ++f) x[f] = gauss(rng);
    const double margin = w.dot(x) / std::max(x.norm(), 1e-12);
    const double prob = 1.0 / (1.0 + std::exp(-margin));
    data.labels.push_back(uniform01(rng) < prob ? 1 : 0);
    SparseRow row;
    for (Index f = 0; f < raw_features; ++f) row.emplace_back(f, x[f]);
    data.rows.push_back(std::move(row));
  }
  return data;
}

}  // namespace vrsplit
