#include "huberfilt/audit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace huberfilt {

CertificateAudit audit_certificate(const Dataset& data, const WeightVector& w, const SubspaceBasis& basis,
                                   const Vector& mu_true, double eps, double kappa_cert) {
  validate_weights(w, data.n());
  // With eps = c1 = 1 and reference mass Σw the moment operator is exactly
  // the normalized weighted covariance on V⊥, which is PSD.
  const MomentOperatorState state = build_moment_state(data, w, basis, 1.0, 1.0, w.sum(), {512, configured_threads()});
  double top = 0.0;
  if (data.d() <= 256) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(bperp_dense(state), Eigen::EigenvaluesOnly);
    top = eig.eigenvalues().maxCoeff();
  } else {
    Rng rng(0xCE27ull);
    top = estimate_top_eigenvalue(as_operator(state), 60, 4, rng).lambda_hat;
  }
  CertificateAudit a;
  a.lambda = top - 1.0;
  a.error = basis.project_complement(Vector(state.mu_full - mu_true)).norm();
  a.bound = kappa_cert * (eps + std::sqrt(std::max(a.lambda, 0.0) * eps));
  a.margin = a.bound - a.error;
  a.pass = a.error <= a.bound;
  return a;
}

FilterMassAudit audit_filter_mass(const std::vector<FilterCall>& calls, double eps, double n) {
  FilterMassAudit a;
  const double ratio = eps / std::log(1.0 / eps);
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const auto& c = calls[i];
    ++a.calls;
    a.inlier_total += c.inlier;
    a.outlier_total += c.outlier;
    if (c.inlier <= std::max(2.0 * ratio * c.outlier, 1e-3 * n)) ++a.passes;
    else a.violations.push_back(static_cast<long>(i));
  }
  a.pass_rate = a.calls ? static_cast<double>(a.passes) / static_cast<double>(a.calls) : 1.0;
  return a;
}

std::vector<FilterCall> filter_calls(const std::vector<IterationRecord>& trace) {
  std::vector<FilterCall> out;
  for (const auto& r : trace)
    if (r.kind == IterationCase::filter)
      out.push_back({r.inlier_mass_removed.value_or(0.0), r.outlier_mass_removed.value_or(0.0)});
  return out;
}

GoodnessAudit audit_goodness(const Dataset& samples, const Vector& mu, double eps, double alpha, int k, int trials,
                             Rng& rng, double kappa) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  const Eigen::Index n = samples.n();
  const Eigen::Index d = samples.d();
  const RowMatrix& X = samples.points();
  GoodnessAudit a;
  a.median_bound = kappa * eps;
  a.mean_bound = kappa * alpha * std::sqrt(std::log(1.0 / alpha));
  a.cov_bound = kappa * alpha * std::log(1.0 / alpha);
  a.tail_bound = kappa * eps / std::log(1.0 / eps);

  const Vector mean_all = X.colwise().mean().transpose();
  const Matrix second_all = (X.transpose() * X) / static_cast<double>(n);
  const Matrix cov_all = second_all - mean_all * mean_all.transpose();
  const auto m = static_cast<Eigen::Index>(std::ceil(alpha * static_cast<double>(n)));

  a.median_ok = a.mean_ok = a.covariance_ok = a.tail_ok = true;
  for (int t = 0; t < trials; ++t) {
    Vector v = rng.normal_vector(d);
    v.normalize();
    const Vector proj = (X.rowwise() - mu.transpose()) * v;

    // (1) Median: both one-sided tail probabilities at ±κ·eps stay below 1/2.
    const double above = (proj.array() > a.median_bound).cast<double>().mean();
    const double below = (proj.array() < -a.median_bound).cast<double>().mean();
    if (!(above < 0.5 && below < 0.5)) a.median_ok = false;
    std::vector<double> vals(proj.data(), proj.data() + n);
    const auto mid = vals.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
    std::nth_element(vals.begin(), mid, vals.end());
    a.worst_median_gap = std::max(a.worst_median_gap, std::abs(*mid));

    // (2.a/2.b) Delete the m most extreme points along v.
    if (m > 0 && m < n) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::partial_sort(idx.begin(), idx.begin() + m, idx.end(),
                        [&](Eigen::Index i, Eigen::Index j) { return proj[i] > proj[j]; });
      Vector del_sum = Vector::Zero(d);
      Matrix del_second = Matrix::Zero(d, d);
      for (Eigen::Index r = 0; r < m; ++r) {
        const Vector x = X.row(idx[static_cast<std::size_t>(r)]).transpose();
        del_sum += x;
        del_second.noalias() += x * x.transpose();
      }
      const double kept = static_cast<double>(n - m);
      const Vector mean_del = (mean_all * static_cast<double>(n) - del_sum) / kept;
      const Matrix cov_del = (second_all * static_cast<double>(n) - del_second) / kept - mean_del * mean_del.transpose();
      const double shift = (mean_del - mean_all).norm();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(cov_del - cov_all), Eigen::EigenvaluesOnly);
      const double cov_shift = eig.eigenvalues().cwiseAbs().maxCoeff();
      a.worst_mean_shift = std::max(a.worst_mean_shift, shift);
      a.worst_cov_shift = std::max(a.worst_cov_shift, cov_shift);
      if (shift > a.mean_bound) a.mean_ok = false;
      if (cov_shift > a.cov_bound) a.covariance_ok = false;
    }

    // (2.c) Quadratic-form tails for a random orthonormal (hence
    // near-orthogonal) k-row U.
    const int kk = static_cast<int>(std::min<Eigen::Index>(k, d));
    Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(d, kk));
    const Matrix Q = qr.householderQ() * Matrix::Identity(d, kk);
    const Vector p = ((X.rowwise() - mu.transpose()) * Q).rowwise().squaredNorm();
    const double cutoff = 100.0 * kk;
    const double tail = (p.array() > cutoff).select(p, 0.0).sum() / static_cast<double>(n);
    a.worst_tail_mass = std::max(a.worst_tail_mass, tail);
    if (tail > a.tail_bound) a.tail_ok = false;
  }
  return a;
}

ConditionalAudit audit_conditional(const Vector& beta, double sigma, const ConditioningRegion& interval,
                                   Eigen::Index kept, Rng& rng) {
  if (kept < 2) throw std::invalid_argument("need at least two kept samples");
  if (!(interval.half_length > 0.0)) throw std::invalid_argument("interval must have positive length");
  const Eigen::Index d = beta.size();
  const ConditionalMoments point = conditional_moments(beta, sigma, {interval.a, 0.0});
  const ConditionalMoments inter = conditional_moments(beta, sigma, interval);
  const double sy2 = point.sigma_y_sq;
  const double sy = std::sqrt(sy2);

  ConditionalAudit a;
  Vector sum = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  Vector x(d);
  constexpr Eigen::Index kBlock = 4096;
  RowMatrix block(kBlock, d);
  Eigen::Index fill = 0;
  const auto flush = [&] {
    if (fill == 0) return;
    const auto rows = block.topRows(fill);
    sum += rows.colwise().sum().transpose();
    second.noalias() += rows.transpose() * rows;
    fill = 0;
  };
  while (a.kept < kept) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = rng.normal();
    const double y = beta.dot(x) + sigma * rng.normal();
    ++a.drawn;
    if (std::abs(y - interval.a) > interval.half_length) continue;
    block.row(fill++) = x.transpose();
    ++a.kept;
    if (fill == kBlock) flush();
  }
  flush();
  const double N = static_cast<double>(a.kept);
  const Vector mean = sum / N;
  const Matrix cov = second / N - mean * mean.transpose();

  a.mean_stderr = std::sqrt(cov.trace() / N);
  // Operator-norm fluctuation scale of a d-dimensional sample covariance.
  a.cov_stderr = std::sqrt(static_cast<double>(d) / N);
  a.mean_gap_point = (mean - point.mean).norm();
  a.mean_bound_point = interval.half_length * beta.norm() / sy2 + 3.0 * a.mean_stderr;
  a.mean_gap_interval = (mean - inter.mean).norm();
  const auto op_norm = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  };
  a.cov_dev = op_norm(cov - Matrix::Identity(d, d));
  a.cov_bound = 9.0 * beta.squaredNorm() / sy2 + 3.0 * a.cov_stderr;
  a.cov_gap_interval = op_norm(cov - inter.covariance());
  a.kept_fraction = N / static_cast<double>(a.drawn);
  a.kept_fraction_floor = 0.2 * interval.half_length / sy;
  a.mean_ok = a.mean_gap_point <= a.mean_bound_point && a.mean_gap_interval <= 3.0 * a.mean_stderr;
  a.cov_ok = a.cov_dev <= a.cov_bound && a.cov_gap_interval <= 3.0 * a.cov_stderr;
  a.fraction_ok = a.kept_fraction >= a.kept_fraction_floor;
  a.pass = a.mean_ok && a.cov_ok && a.fraction_ok;
  return a;
}

}  // namespace huberfilt
