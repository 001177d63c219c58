#include "huberfilt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

namespace huberfilt {

namespace {

// Number of partial sums a data pass is split into. Fixed (not tied to the
// worker count) so the reduction order never changes.
constexpr int kMaxGroups = 64;
// Below this norm a renormalized iterate is treated as exactly zero.
constexpr double kZeroNorm = 1e-280;

struct ChunkPlan {
  Eigen::Index n = 0;
  Eigen::Index chunk = 1;
  int groups = 1;

  ChunkPlan(Eigen::Index rows, int chunk_rows) : n(rows), chunk(std::max(1, chunk_rows)) {
    const Eigen::Index chunks = (n + chunk - 1) / chunk;
    groups = static_cast<int>(std::max<Eigen::Index>(1, std::min<Eigen::Index>(chunks, kMaxGroups)));
  }
  // Row range [begin, end) owned by group g: whole chunks, contiguous.
  std::pair<Eigen::Index, Eigen::Index> range(int g) const {
    const Eigen::Index chunks = (n + chunk - 1) / chunk;
    const Eigen::Index c0 = chunks * g / groups;
    const Eigen::Index c1 = chunks * (g + 1) / groups;
    return {std::min(n, c0 * chunk), std::min(n, c1 * chunk)};
  }
};

// Runs body(group, begin, end) for every group and returns the groups'
// results summed in group order.
template <typename T, typename Body>
T reduce_groups(const ChunkPlan& plan, int threads, const T& zero, Body body) {
  std::vector<T> partial(static_cast<std::size_t>(plan.groups), zero);
  parallel_blocks(plan.groups, threads, [&](int g) {
    const auto [begin, end] = plan.range(g);
    body(partial[static_cast<std::size_t>(g)], begin, end);
  });
  T total = zero;
  for (const auto& p : partial) total += p;
  return total;
}

void normalize_columns(Matrix& Z, std::vector<bool>* zero_mask) {
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const double nrm = Z.col(j).norm();
    if (!(nrm > kZeroNorm) || !std::isfinite(nrm)) {
      Z.col(j).setZero();
      if (zero_mask) (*zero_mask)[static_cast<std::size_t>(j)] = true;
    } else {
      Z.col(j) /= nrm;
    }
  }
}

}  // namespace

void parallel_blocks(int blocks, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, blocks));
  if (workers == 1) {
    for (int b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int b = t; b < blocks; b += workers) fn(b);
    });
  }
  for (auto& th : pool) th.join();
}

Vector weighted_mean(const Dataset& data, const WeightVector& w, const ExecOptions& exec) {
  const double total = w.sum();
  if (!(total > 0.0)) throw NumericalError(ErrorKind::degenerate_weights, "sum of weights is zero");
  const ChunkPlan plan(data.n(), exec.chunk_rows);
  const Vector zero = Vector::Zero(data.d());
  const Vector sum = reduce_groups(plan, exec.threads, zero, [&](Vector& acc, Eigen::Index b, Eigen::Index e) {
    acc.noalias() += data.points().middleRows(b, e - b).transpose() * w.segment(b, e - b);
  });
  return sum / total;
}

Matrix weighted_covariance(const Dataset& data, const WeightVector& w, const Vector& center,
                           const ExecOptions& exec) {
  const double total = w.sum();
  if (!(total > 0.0)) throw NumericalError(ErrorKind::degenerate_weights, "sum of weights is zero");
  const ChunkPlan plan(data.n(), exec.chunk_rows);
  const Matrix zero = Matrix::Zero(data.d(), data.d());
  const Matrix sum = reduce_groups(plan, exec.threads, zero, [&](Matrix& acc, Eigen::Index b, Eigen::Index e) {
    const RowMatrix centered = data.points().middleRows(b, e - b).rowwise() - center.transpose();
    const RowMatrix scaled = centered.array().colwise() * w.segment(b, e - b).array();
    acc.noalias() += centered.transpose() * scaled;
  });
  return sum / total;
}

Vector quadratic_scores(const Dataset& data, const Matrix& U, const Vector& center, const ExecOptions& exec) {
  Vector g(data.n());
  const ChunkPlan plan(data.n(), exec.chunk_rows);
  const Matrix Ut = U.transpose();
  parallel_blocks(plan.groups, exec.threads, [&](int grp) {
    const auto [b, e] = plan.range(grp);
    for (Eigen::Index s = b; s < e; s += plan.chunk) {
      const Eigen::Index len = std::min(plan.chunk, e - s);
      const RowMatrix centered = data.points().middleRows(s, len).rowwise() - center.transpose();
      const Matrix proj = centered * Ut;
      g.segment(s, len) = proj.rowwise().squaredNorm();
    }
  });
  return g;
}

MomentOperatorState build_moment_state(const Dataset& data, const WeightVector& w, const SubspaceBasis& basis,
                                       double eps, double c1, double reference_mass, const ExecOptions& exec) {
  if (w.size() != data.n()) throw std::invalid_argument("weight vector length does not match dataset");
  if (basis.ambient_dim() != data.d()) throw std::invalid_argument("basis dimension does not match dataset");
  MomentOperatorState s;
  s.data = &data;
  s.w = &w;
  s.basis = basis;
  s.eps = eps;
  s.c1 = c1;
  s.exec = exec;
  s.reference_mass = reference_mass > 0.0 ? reference_mass : static_cast<double>(data.n());
  s.weight_sum = w.sum();
  if (!(s.weight_sum > 0.0)) throw NumericalError(ErrorKind::degenerate_weights, "sum of weights is zero");
  s.W = s.weight_sum / s.reference_mass;
  s.mu_full = weighted_mean(data, w, exec);
  s.mu_perp = basis.project_complement(s.mu_full);
  return s;
}

Matrix bperp_apply(const MomentOperatorState& s, const Matrix& Z) {
  const Dataset& data = *s.data;
  const WeightVector& w = *s.w;
  const Matrix Zp = s.basis.project_complement(Z);
  const ChunkPlan plan(data.n(), s.exec.chunk_rows);
  const Matrix zero = Matrix::Zero(data.d(), Z.cols());
  const Eigen::RowVectorXd mu_z = s.mu_full.transpose() * Zp;
  // Σ_full Zp with Σ_full the weighted covariance about the full mean; then
  // Σ⊥ Z = Π Σ_full Π Z.
  const Matrix acc = reduce_groups(plan, s.exec.threads, zero, [&](Matrix& part, Eigen::Index b, Eigen::Index e) {
    for (Eigen::Index start = b; start < e; start += plan.chunk) {
      const Eigen::Index len = std::min(plan.chunk, e - start);
      // (x − μ)(x − μ)ᵀ z expanded so the chunk is never copied.
      const auto rows = data.points().middleRows(start, len);
      Matrix inner = rows * Zp;
      inner.rowwise() -= mu_z;
      inner.array().colwise() *= w.segment(start, len).array();
      part.noalias() += rows.transpose() * inner;
      part.noalias() -= s.mu_full * inner.colwise().sum();
    }
  });
  const Matrix sigma_z = s.basis.project_complement(Matrix(acc / s.weight_sum));
  return (s.W * s.W) * sigma_z - (1.0 - s.c1 * s.eps) * Zp;
}

Vector bperp_matvec(const MomentOperatorState& s, const Vector& z) {
  const Matrix out = bperp_apply(s, Matrix(z));
  return out.col(0);
}

Matrix bperp_dense(const MomentOperatorState& s) {
  const Eigen::Index d = s.dim();
  const Matrix proj = s.basis.project_complement(Matrix(Matrix::Identity(d, d)));
  const Matrix cov = weighted_covariance(*s.data, *s.w, s.mu_full, s.exec);
  return (s.W * s.W) * (proj * cov * proj) - (1.0 - s.c1 * s.eps) * proj;
}

SymmetricOperator as_operator(const MomentOperatorState& state) {
  return {state.dim(), [&state](const Matrix& Z) { return bperp_apply(state, Z); }};
}

SymmetricOperator dense_operator(Matrix A) {
  const Eigen::Index d = A.rows();
  return {d, [A = std::move(A)](const Matrix& Z) -> Matrix { return A * Z; }};
}

Matrix power_apply(const SymmetricOperator& op, const Matrix& Z, int m) {
  if (m < 1) throw std::invalid_argument("power must be at least 1");
  Matrix out = Z;
  for (int i = 0; i < m; ++i) out = op.apply(out);
  return out;
}

Vector power_apply(const MomentOperatorState& state, const Vector& z, int m) {
  const Matrix out = power_apply(as_operator(state), Matrix(z), m);
  return out.col(0);
}

TopEigen estimate_top_eigenvalue(const SymmetricOperator& op, int p_prime, int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (p_prime < 1) throw std::invalid_argument("p_prime must be at least 1");
  Matrix Z = rng.normal_matrix(op.dim, trials);
  normalize_columns(Z, nullptr);
  for (int i = 0; i < p_prime; ++i) {
    Z = op.apply(Z);
    normalize_columns(Z, nullptr);
  }
  const Matrix AZ = op.apply(Z);
  TopEigen best;
  best.witness = Vector::Unit(op.dim, 0);
  bool found = false;
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const double nrm2 = Z.col(j).squaredNorm();
    if (!(nrm2 > 0.0)) continue;
    const double rq = Z.col(j).dot(AZ.col(j)) / nrm2;
    if (!found || rq > best.lambda_hat) {
      best.lambda_hat = rq;
      best.witness = Z.col(j) / std::sqrt(nrm2);
      found = true;
    }
  }
  return best;
}

double hutchinson_frobenius_sq(const SymmetricOperator& op, int m, int probes, Rng& rng) {
  if (probes < 1) throw std::invalid_argument("probes must be at least 1");
  const Matrix Z = rng.normal_matrix(op.dim, probes);
  const Matrix Y = power_apply(op, Z, m);
  return Y.colwise().squaredNorm().sum() / probes;
}

SketchMatrix make_sketch(Matrix rows) {
  SketchMatrix U;
  U.frob_sq = rows.squaredNorm();
  U.rows = std::move(rows);
  return U;
}

SketchMatrix gaussian_sketch(const SymmetricOperator& op, int k, int p, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sketch size must be at least 1");
  const Matrix Z = rng.normal_matrix(op.dim, k);
  return make_sketch(power_apply(op, Z, p).transpose());
}

bool near_orthogonality_check(const SketchMatrix& U, int k) {
  const Vector norms = U.rows.rowwise().norm();
  if ((norms.array() <= 0.0).any()) throw NumericalError(ErrorKind::degenerate_sketch, "sketch has a zero row");
  const double kk = static_cast<double>(k);
  const Matrix gram = U.rows * U.rows.transpose();
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j)
      if (std::abs(gram(i, j)) > norms[i] * norms[j] / (kk * kk)) return false;
  const double max_sq = norms.array().square().maxCoeff();
  return max_sq <= (std::log(kk) / kk) * U.frob_sq;
}

double binomial_upper_bound(long successes, long trials, double alpha) {
  if (successes >= trials) return 1.0;
  return boost::math::ibeta_inv(static_cast<double>(successes + 1), static_cast<double>(trials - successes),
                                1.0 - alpha);
}

double binomial_lower_bound(long successes, long trials, double alpha) {
  if (successes <= 0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(successes), static_cast<double>(trials - successes + 1), alpha);
}

AlignmentEstimate estimate_alignment_probability(const SymmetricOperator& op, int p, int k, long pairs, Rng& rng,
                                                 const AlignmentOptions& options) {
  if (pairs < 1) throw std::invalid_argument("pairs must be at least 1");
  const double kk = static_cast<double>(k);
  const double cos_threshold = 1.0 / (kk * kk);
  AlignmentEstimate est;
  long batch = std::max(1, options.batch);
  while (est.pairs_used < pairs) {
    const long take = std::min(batch, pairs - est.pairs_used);
    Matrix Z = rng.normal_matrix(op.dim, 2 * take);
    std::vector<bool> zero(static_cast<std::size_t>(2 * take), false);
    for (int i = 0; i < p; ++i) {
      Z = op.apply(Z);
      normalize_columns(Z, &zero);
    }
    for (long j = 0; j < take; ++j) {
      const auto a = static_cast<Eigen::Index>(2 * j);
      const auto b = a + 1;
      if (zero[static_cast<std::size_t>(a)] || zero[static_cast<std::size_t>(b)]) {
        ++est.aligned;
        continue;
      }
      // Columns are unit vectors, so the inner product is the cosine.
      if (std::abs(Z.col(a).dot(Z.col(b))) > cos_threshold) ++est.aligned;
    }
    est.pairs_used += take;
    if (options.threshold > 0.0 && est.pairs_used < pairs) {
      const double alpha = options.confidence;
      if (binomial_lower_bound(est.aligned, est.pairs_used, alpha) > options.threshold ||
          binomial_upper_bound(est.aligned, est.pairs_used, alpha) < options.threshold) {
        est.early_stopped = true;
        break;
      }
    }
    batch = std::min<long>(2 * batch, 512);
  }
  est.q_hat = static_cast<double>(est.aligned) / static_cast<double>(est.pairs_used);
  return est;
}

ExtendResult extend_basis(const SubspaceBasis& basis, const Vector& u, double tol_rel) {
  const double unorm = u.norm();
  if (!(unorm > 0.0) || !std::isfinite(unorm)) throw std::invalid_argument("cannot extend basis by a zero vector");
  if (u.size() != basis.ambient_dim()) throw std::invalid_argument("vector dimension does not match basis");
  if (basis.size() >= basis.ambient_dim()) throw NumericalError(ErrorKind::full_space, "basis already spans R^d");
  Vector r = basis.project_complement(u);
  r = basis.project_complement(r);  // second pass restores orthogonality lost to rounding
  ExtendResult out{basis, false};
  const double rnorm = r.norm();
  if (rnorm < tol_rel * unorm) {
    out.already_spanned = true;
    return out;
  }
  out.basis.append_unchecked(r / rnorm);
  return out;
}

Dataset project_points(const Dataset& data, const SubspaceBasis& basis, ProjectionMode mode) {
  if (basis.ambient_dim() != data.d()) throw std::invalid_argument("basis dimension does not match dataset");
  const Matrix& V = basis.vectors();
  if (mode == ProjectionMode::span_coordinates) {
    if (basis.empty()) throw std::invalid_argument("span coordinates of an empty basis");
    RowMatrix coords = data.points() * V;
    return Dataset(std::move(coords), data.labels());
  }
  if (basis.empty()) return data;
  RowMatrix rest = data.points() - (data.points() * V) * V.transpose();
  return Dataset(std::move(rest), data.labels());
}

}  // namespace huberfilt
