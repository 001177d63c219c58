#pragma once

// Independent dense reference constructions used as test oracles. They are
// written from the definitions, deliberately without the library helpers.

#include <algorithm>
#include <cmath>
#include <vector>

#include "huberfilt/rng.hpp"
#include "huberfilt/types.hpp"

namespace oracle {

using huberfilt::Matrix;
using huberfilt::RowMatrix;
using huberfilt::Vector;

/// Π = I − V Vᵀ for orthonormal columns V.
inline Matrix complement_projector(const Matrix& V, Eigen::Index d) {
  Matrix P = Matrix::Identity(d, d);
  for (Eigen::Index j = 0; j < V.cols(); ++j) P -= V.col(j) * V.col(j).transpose();
  return P;
}

/// W²Σ⊥ − (1 − c1·eps)Π, point by point from the definitions.
inline Matrix dense_bperp(const RowMatrix& X, const Vector& w, const Matrix& V, double eps, double c1,
                          double reference_mass) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const Matrix P = complement_projector(V, d);
  double total = 0.0;
  Vector mean = Vector::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    total += w[i];
    mean += w[i] * (P * X.row(i).transpose());
  }
  mean /= total;
  Matrix cov = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector c = P * X.row(i).transpose() - mean;
    cov += w[i] * c * c.transpose();
  }
  cov /= total;
  const double W = total / reference_mass;
  return W * W * cov - (1.0 - c1 * eps) * P;
}

/// Random orthonormal d x m columns.
inline Matrix random_orthonormal(Eigen::Index d, Eigen::Index m, huberfilt::Rng& rng) {
  if (m == 0) return Matrix(d, 0);
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(d, m));
  return qr.householderQ() * Matrix::Identity(d, m);
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

/// Lower median by full sort.
inline double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

/// Result of the dense top-k filtering loop oracle.
struct TopkOracle {
  Vector w;
  Vector mu;
  int iterations = 0;
};

/// Top-k eigenvector filtering written with dense loops: explicit weighted
/// moments, a full eigendecomposition, explicit scores, and a linear scan for
/// the down-weighting exponent.
inline TopkOracle dense_topk_loop(const RowMatrix& X, const Vector& w0, double eps, double r, double c_stop,
                                  double score_mult, double kappa_T, double beta, long cap) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const int k = static_cast<int>(std::min<double>(double(d), std::max(1.0, std::ceil(r * std::log(1.0 / eps)))));
  const double T = kappa_T * eps / std::log(1.0 / eps);
  TopkOracle out;
  out.w = w0;
  const auto mean_of = [&](const Vector& w) {
    Vector m = Vector::Zero(d);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      m += w[i] * X.row(i).transpose();
      total += w[i];
    }
    return Vector(m / total);
  };
  for (long it = 0; it < cap; ++it) {
    out.iterations = static_cast<int>(it + 1);
    const Vector mu = mean_of(out.w);
    Matrix cov = Matrix::Zero(d, d);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector c = X.row(i).transpose() - mu;
      cov += out.w[i] * c * c.transpose();
      total += out.w[i];
    }
    cov /= total;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Matrix top = eig.eigenvectors().rightCols(k);
    if (eig.eigenvalues().tail(k).mean() < 1.0 + c_stop * eps / r) break;
    Vector tau = Vector::Zero(n);
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = (top.transpose() * (X.row(i).transpose() - mu)).squaredNorm() / k;
      if (g > score_mult / r) tau[i] = g;
      if (out.w[i] > 0.0) rmax = std::max(rmax, tau[i]);
    }
    if (rmax <= 0.0) break;
    const long ell_max = static_cast<long>(std::ceil(rmax / (std::exp(1.0) * T))) + 1;
    long ell = ell_max;
    for (long l = 0; l <= ell_max; ++l) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += out.w[i] * std::pow(1.0 - tau[i] / rmax, double(l)) * tau[i];
      if (s / double(n) <= T * beta) {
        ell = l;
        break;
      }
    }
    if (ell == 0) break;
    for (Eigen::Index i = 0; i < n; ++i) out.w[i] *= std::pow(1.0 - tau[i] / rmax, double(ell));
  }
  out.mu = mean_of(out.w);
  return out;
}

}  // namespace oracle
