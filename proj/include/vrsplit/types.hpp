#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace vrsplit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

// Independent stream for (seed, stream_id); used to give every run of a sweep its own generator.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline Index uniform_index(Rng& rng, Index n) {
  return static_cast<Index>(std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng));
}

}  // namespace vrsplit
