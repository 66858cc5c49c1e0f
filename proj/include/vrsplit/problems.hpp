#pragma once

#include <vector>

#include "vrsplit/core_ops.hpp"
#include "vrsplit/dataset.hpp"
#include "vrsplit/prox.hpp"

namespace vrsplit {

/// Top eigenvalue of M^T M by power iteration (at most 1000 iterations).
double spectral_norm_sq(const Mat& M);

/// (1/4) ||X^T X||, floored at 1e-12.
double estimate_L(const RowMat& X);

enum class RegKind { L1, Scad };

const char* to_string(RegKind kind);
RegKind reg_kind_from_string(const std::string& name);

/// Logistic loss l(t, s) = log(1 + e^t) - s t and its derivative, in overflow-safe form.
double logistic_loss(double t, double s);
double logistic_loss_deriv(double t, double s);

struct LogisticMinimaxOptions {
  RegKind reg = RegKind::L1;
  double reg_weight = 5e-3;
  double scad_a = 3.7;
  double L = 0.0;  // required; usually estimate_L of the nominal features
};

/// Worst-case logistic regression over p2 ambiguous copies, x = [u (p1); v (p2)]:
///   F_i x = [ sum_j v_j l'(<X_ij, u>, y_i) X_ij ;  -l(<X_ij, u>, y_i) for each j ]
///   T     = [ weight * dR(u) ; normal cone of the simplex at v ]
/// R is l1 or SCAD(a). SCAD makes T nonmonotone; rho is reported as a - 1.
GeProblem build_logistic_minimax(const AmbiguousFeatures& features, const std::vector<int>& labels,
                                 const LogisticMinimaxOptions& options);

/// Value of sum_j v_j l(<X_ij, u>, y_i) averaged over i (the saddle function without regularizer).
double logistic_minimax_value(const AmbiguousFeatures& features, const std::vector<int>& labels,
                              const Vec& x);

struct MatrixGameData {
  Mat wealth;  // n_samples x p1, row s holds w_s
  Mat decay;   // p1 x p1, K_ij = 1 - exp(-theta |i - j|)
  double epsilon = 1e-8;

  Index p1() const { return decay.rows(); }
  Index samples() const { return wealth.rows(); }
  /// Payoff of sample s: diag(w_s) K.
  Mat payoff(Index s) const;
  /// Mean payoff diag(mean w) K.
  Mat mean_payoff() const;
};

/// Nominal wealth |randn|, sample wealth |nominal + sigma randn|.
MatrixGameData generate_matrix_game(Index p1, Index n_samples, double theta, double noise_sigma, Rng& rng);

/// F_s x = [eps u + L_s^T v; eps v - L_s u], T = two simplex normal cones, L = ||mean L_s||_2 + eps.
GeProblem build_matrix_game(const MatrixGameData& data);

/// Shorthand for generate + build.
GeProblem build_matrix_game(Index p1, Index n_samples, double theta, double noise_sigma, Rng& rng);

/// F x = A x + q, T x = B x + s with symmetric A >= 0 and symmetric invertible B.
/// The resolvent is applied in the eigenbasis of B; rho = max(0, -min 1/eig(B)).
/// Stores x* = -(A + B)^{-1}(q + s). Throws ConfigError if L rho >= 1.
GeProblem build_linear_problem(const Mat& A, const Vec& q, const Mat& B, const Vec& s,
                               const std::string& tag = "linear");

/// Random orthogonal bases carrying the given spectra (independent bases for A and B).
GeProblem build_synthetic_linear(const std::vector<double>& spectrum_F, const std::vector<double>& spectrum_T,
                                 const Vec& q, const Vec& s, Rng& rng);

/// Haar-distributed orthogonal matrix.
Mat random_orthogonal(Index p, Rng& rng);

}  // namespace vrsplit
