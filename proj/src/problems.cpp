#include "vrsplit/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

constexpr double kLFloor = 1e-12;

// Power iteration on the symmetric PSD operator `apply`; stops on a 1e-12 relative change.
template <class Apply>
double top_eigenvalue(Index dim, Apply apply) {
  Vec v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i + 1));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vec w = apply(v);
    const double rq = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 0 && std::abs(rq - est) <= 1e-12 * std::abs(rq)) {
      est = rq;
      break;
    }
    est = rq;
  }
  return est;
}

}  // namespace

double spectral_norm_sq(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return top_eigenvalue(M.cols(), [&](const Vec& v) -> Vec { return M.transpose() * (M * v); });
}

double estimate_L(const RowMat& X) {
  if (X.size() == 0) return kLFloor;
  const double top = top_eigenvalue(X.cols(), [&](const Vec& v) -> Vec { return X.transpose() * (X * v); });
  return std::max(0.25 * top, kLFloor);
}

const char* to_string(RegKind kind) { return kind == RegKind::L1 ? "l1" : "scad"; }

RegKind reg_kind_from_string(const std::string& name) {
  if (name == "l1") return RegKind::L1;
  if (name == "scad") return RegKind::Scad;
  throw ConfigError("unknown regularizer '" + name + "'");
}

double logistic_loss(double t, double s) {
  return std::log1p(std::exp(-std::abs(t))) + std::max(t, 0.0) - s * t;
}

double logistic_loss_deriv(double t, double s) {
  const double sig = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  return sig - s;
}

GeProblem build_logistic_minimax(const AmbiguousFeatures& features, const std::vector<int>& labels,
                                 const LogisticMinimaxOptions& options) {
  const Index n = features.n();
  const Index p1 = features.dim();
  const Index p2 = features.copies();
  if (static_cast<Index>(labels.size()) != n) throw DimensionError("labels do not match the feature tensor");
  if (n < 1) throw ConfigError("logistic problem needs at least one sample");
  if (!(options.L > 0.0)) throw ConfigError("logistic problem needs a positive L");
  if (!(options.reg_weight >= 0.0)) throw ConfigError("regularization weight must be nonnegative");

  auto X = std::make_shared<const AmbiguousFeatures>(features);
  auto y = std::make_shared<const std::vector<int>>(labels);

  GeProblem::Parts parts;
  parts.dim = p1 + p2;
  parts.n_components = n;
  parts.component = [X, y, p1, p2](Index i, const Vec& x, Vec& out) {
    const auto u = x.head(p1);
    const double label = static_cast<double>((*y)[static_cast<std::size_t>(i)]);
    out.setZero();
    for (Index j = 0; j < p2; ++j) {
      const auto row = X->copy(i, j);
      const double t = row.dot(u);
      out.head(p1) += (x[p1 + j] * logistic_loss_deriv(t, label)) * row;
      out[p1 + j] = -logistic_loss(t, label);
    }
  };

  ResolventBlock ublock{0, p1, options.reg == RegKind::L1 ? BlockKind::L1 : BlockKind::Scad,
                        options.reg_weight, options.scad_a};
  ResolventBlock vblock{p1, p2, BlockKind::Simplex, 0.0, 3.7};
  auto res = std::make_shared<const BlockResolvent>(p1 + p2, std::vector<ResolventBlock>{ublock, vblock});
  parts.resolvent = [res](const Vec& x, double lambda) { return res->apply(x, lambda); };
  parts.to_domain = [p1, p2](const Vec& x) {
    Vec out = x;
    out.segment(p1, p2) = project_simplex(x.segment(p1, p2));
    return out;
  };
  parts.lipschitz_L = options.L;
  parts.cohypo_rho = options.reg == RegKind::L1 ? 0.0 : options.scad_a - 1.0;
  parts.tag = std::string("logistic_") + to_string(options.reg);
  return GeProblem(std::move(parts));
}

double logistic_minimax_value(const AmbiguousFeatures& features, const std::vector<int>& labels,
                              const Vec& x) {
  const Index p1 = features.dim();
  double total = 0.0;
  for (Index i = 0; i < features.n(); ++i) {
    const double label = static_cast<double>(labels[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < features.copies(); ++j) {
      total += x[p1 + j] * logistic_loss(features.copy(i, j).dot(x.head(p1)), label);
    }
  }
  return total / static_cast<double>(features.n());
}

Mat MatrixGameData::payoff(Index s) const { return wealth.row(s).transpose().asDiagonal() * decay; }

Mat MatrixGameData::mean_payoff() const {
  const Vec w = wealth.colwise().mean().transpose();
  return w.asDiagonal() * decay;
}

MatrixGameData generate_matrix_game(Index p1, Index n_samples, double theta, double noise_sigma, Rng& rng) {
  if (p1 < 2) throw ConfigError("matrix game needs p1 >= 2");
  if (n_samples < 1) throw ConfigError("matrix game needs at least one sample");
  if (!(noise_sigma >= 0.0) || !(theta >= 0.0)) throw ConfigError("theta and sigma must be nonnegative");
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixGameData d;
  Vec nominal(p1);
  for (Index i = 0; i < p1; ++i) nominal[i] = std::abs(gauss(rng));
  d.wealth.resize(n_samples, p1);
  for (Index s = 0; s < n_samples; ++s) {
    for (Index i = 0; i < p1; ++i) d.wealth(s, i) = std::abs(nominal[i] + noise_sigma * gauss(rng));
  }
  d.decay.resize(p1, p1);
  for (Index i = 0; i < p1; ++i) {
    for (Index j = 0; j < p1; ++j) {
      d.decay(i, j) = 1.0 - std::exp(-theta * static_cast<double>(std::abs(i - j)));
    }
  }
  return d;
}

GeProblem build_matrix_game(const MatrixGameData& data) {
  const Index p1 = data.p1();
  const double eps = data.epsilon;
  auto shared = std::make_shared<const MatrixGameData>(data);
  auto mean_w = std::make_shared<const Vec>(data.wealth.colwise().mean().transpose());

  // L_s^T v = K (w_s .* v) and L_s u = w_s .* (K u); K is symmetric.
  auto apply = [p1, eps](const Mat& K, const Eigen::Ref<const Vec>& w, const Vec& x, Vec& out) {
    const auto u = x.head(p1);
    const auto v = x.tail(p1);
    out.head(p1) = eps * u + K * w.cwiseProduct(v);
    out.tail(p1) = eps * v - w.cwiseProduct(K * u);
  };

  GeProblem::Parts parts;
  parts.dim = 2 * p1;
  parts.n_components = data.samples();
  parts.component = [shared, apply](Index s, const Vec& x, Vec& out) {
    const Vec w = shared->wealth.row(s).transpose();
    apply(shared->decay, w, x, out);
  };
  parts.full = [shared, mean_w, apply](const Vec& x, Vec& out) { apply(shared->decay, *mean_w, x, out); };
  auto res = std::make_shared<const BlockResolvent>(
      2 * p1, std::vector<ResolventBlock>{{0, p1, BlockKind::Simplex, 0.0, 3.7},
                                          {p1, p1, BlockKind::Simplex, 0.0, 3.7}});
  parts.resolvent = [res](const Vec& x, double lambda) { return res->apply(x, lambda); };
  parts.to_domain = [res](const Vec& x) { return res->apply(x, 1.0); };
  parts.lipschitz_L = std::sqrt(spectral_norm_sq(data.mean_payoff())) + eps;
  parts.cohypo_rho = 0.0;
  parts.tag = "matrix_game";
  return GeProblem(std::move(parts));
}

GeProblem build_matrix_game(Index p1, Index n_samples, double theta, double noise_sigma, Rng& rng) {
  return build_matrix_game(generate_matrix_game(p1, n_samples, theta, noise_sigma, rng));
}

GeProblem build_linear_problem(const Mat& A, const Vec& q, const Mat& B, const Vec& s, const std::string& tag) {
  const Index p = A.rows();
  if (p < 1 || A.cols() != p || B.rows() != p || B.cols() != p || q.size() != p || s.size() != p) {
    throw DimensionError("linear problem: inconsistent dimensions");
  }
  Eigen::SelfAdjointEigenSolver<Mat> ea(0.5 * (A + A.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> eb(0.5 * (B + B.transpose()));
  const Vec ta = ea.eigenvalues();
  const Vec tb = eb.eigenvalues();
  if (ta.minCoeff() < -1e-12) throw ConfigError("F part must be positive semidefinite");
  if (tb.cwiseAbs().minCoeff() < 1e-14) throw ConfigError("T part must be invertible");

  const double L = std::max(ta.maxCoeff(), kLFloor);
  double rho = 0.0;
  for (Index i = 0; i < p; ++i) rho = std::max(rho, -1.0 / tb[i]);
  if (!(L * rho < 1.0)) {
    std::ostringstream msg;
    msg << "violated L * rho < 1 (L = " << L << ", rho = " << rho << ")";
    throw ConfigError(msg.str());
  }

  auto Am = std::make_shared<const Mat>(A);
  auto qv = std::make_shared<const Vec>(q);
  auto Q = std::make_shared<const Mat>(eb.eigenvectors());
  auto tv = std::make_shared<const Vec>(tb);
  auto sv = std::make_shared<const Vec>(s);

  GeProblem::Parts parts;
  parts.dim = p;
  parts.n_components = 1;
  parts.component = [Am, qv](Index, const Vec& x, Vec& out) { out = (*Am) * x + *qv; };
  parts.resolvent = [Q, tv, sv](const Vec& x, double lambda) -> Vec {
    Vec c = Q->transpose() * (x - lambda * (*sv));
    for (Index i = 0; i < c.size(); ++i) {
      const double d = 1.0 + lambda * (*tv)[i];
      if (std::abs(d) < 1e-14) throw ConfigError("resolvent undefined at this lambda");
      c[i] /= d;
    }
    return (*Q) * c;
  };
  parts.lipschitz_L = L;
  parts.cohypo_rho = rho;
  parts.known_solution = Vec((A + B).fullPivLu().solve(-(q + s)));
  parts.tag = tag;
  return GeProblem(std::move(parts));
}

Mat random_orthogonal(Index p, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat G(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) G(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(p, p);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q;
}

GeProblem build_synthetic_linear(const std::vector<double>& spectrum_F, const std::vector<double>& spectrum_T,
                                 const Vec& q, const Vec& s, Rng& rng) {
  const Index p = static_cast<Index>(spectrum_F.size());
  if (p < 1 || static_cast<Index>(spectrum_T.size()) != p) throw DimensionError("spectra must share a positive length");
  Vec sf(p), st(p);
  for (Index i = 0; i < p; ++i) {
    sf[i] = spectrum_F[static_cast<std::size_t>(i)];
    st[i] = spectrum_T[static_cast<std::size_t>(i)];
  }
  if (sf.minCoeff() < 0.0) throw ConfigError("F spectrum must be nonnegative");
  const Mat U = random_orthogonal(p, rng);
  const Mat V = random_orthogonal(p, rng);
  const Mat A = U * sf.asDiagonal() * U.transpose();
  const Mat B = V * st.asDiagonal() * V.transpose();
  return build_linear_problem(A, q, B, s, "synthetic_linear");
}

}  // namespace vrsplit
