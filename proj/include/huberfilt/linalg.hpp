#pragma once

#include <functional>

#include "huberfilt/rng.hpp"
#include "huberfilt/types.hpp"

namespace huberfilt {

/// Execution knobs for data passes. Rows are processed in fixed-size chunks
/// whose partial sums are combined in a fixed order, so results are
/// bit-identical for any worker count.
struct ExecOptions {
  int chunk_rows = 512;
  int threads = 1;
};

/// Runs fn(block) for block = 0..blocks-1 on up to `threads` workers.
void parallel_blocks(int blocks, int threads, const std::function<void(int)>& fn);

/// Weighted mean sum_i w_i x_i / sum_i w_i.
Vector weighted_mean(const Dataset& data, const WeightVector& w, const ExecOptions& exec = {});
/// Dense weighted covariance (d x d); intended for small d.
Matrix weighted_covariance(const Dataset& data, const WeightVector& w, const Vector& center,
                           const ExecOptions& exec = {});
/// g_i = ‖U (x_i - center)‖² for every point; U is k x d.
Vector quadratic_scores(const Dataset& data, const Matrix& U, const Vector& center, const ExecOptions& exec = {});

/// Matrix-free handle for B⊥ = W² Σ⊥ − (1 − c1·eps) Π_{V⊥}.
///
/// `reference_mass` is the mass of the reference distribution the weights
/// are relative to; W = Σw / reference_mass. It defaults to n (weights
/// relative to the uniform distribution on the points).
struct MomentOperatorState {
  const Dataset* data = nullptr;
  const WeightVector* w = nullptr;
  SubspaceBasis basis;
  double eps = 0.0;
  double c1 = 0.0;
  double reference_mass = 0.0;
  double weight_sum = 0.0;
  double W = 0.0;
  Vector mu_full;
  Vector mu_perp;
  ExecOptions exec;

  Eigen::Index dim() const { return mu_perp.size(); }
};

MomentOperatorState build_moment_state(const Dataset& data, const WeightVector& w, const SubspaceBasis& basis,
                                       double eps, double c1, double reference_mass = 0.0,
                                       const ExecOptions& exec = {});
/// The state refers to `data` and `w`; temporaries would dangle.
MomentOperatorState build_moment_state(Dataset&&, const WeightVector&, const SubspaceBasis&, double, double,
                                       double = 0.0, const ExecOptions& = {}) = delete;
MomentOperatorState build_moment_state(const Dataset&, WeightVector&&, const SubspaceBasis&, double, double,
                                       double = 0.0, const ExecOptions& = {}) = delete;

/// B⊥ applied to every column of Z in one data pass.
Matrix bperp_apply(const MomentOperatorState& state, const Matrix& Z);
Vector bperp_matvec(const MomentOperatorState& state, const Vector& z);
/// Explicit d x d B⊥ (for oracles and small dimensions only).
Matrix bperp_dense(const MomentOperatorState& state);

/// A symmetric linear operator given only through block products.
struct SymmetricOperator {
  Eigen::Index dim = 0;
  std::function<Matrix(const Matrix&)> apply;
};

SymmetricOperator as_operator(const MomentOperatorState& state);
SymmetricOperator as_operator(MomentOperatorState&&) = delete;
SymmetricOperator dense_operator(Matrix A);

/// A^m applied to the columns of Z.
Matrix power_apply(const SymmetricOperator& op, const Matrix& Z, int m);
Vector power_apply(const MomentOperatorState& state, const Vector& z, int m);

struct TopEigen {
  double lambda_hat = 0.0;
  Vector witness;
};

/// Block power iteration: `trials` Gaussian starts, p_prime applications
/// (renormalized each step), max Rayleigh quotient over trials. Returns
/// (0, e_1) when every image is numerically zero.
TopEigen estimate_top_eigenvalue(const SymmetricOperator& op, int p_prime, int trials, Rng& rng);

/// Average of ‖A^m z‖² over Gaussian probes; unbiased for tr(A^{2m}).
double hutchinson_frobenius_sq(const SymmetricOperator& op, int m, int probes, Rng& rng);

struct SketchMatrix {
  Matrix rows;  // k x d
  double frob_sq = 0.0;
  int k() const { return static_cast<int>(rows.rows()); }
};

SketchMatrix make_sketch(Matrix rows);
/// Rows v_j = A^p z_j with independent standard Gaussian z_j.
SketchMatrix gaussian_sketch(const SymmetricOperator& op, int k, int p, Rng& rng);

/// Pairwise |<u_i,u_j>| ≤ ‖u_i‖‖u_j‖/k² and max‖u_j‖² ≤ (ln k / k)·frob_sq.
bool near_orthogonality_check(const SketchMatrix& U, int k);

struct AlignmentOptions {
  /// Decision threshold for sequential early stopping; <= 0 disables it.
  double threshold = 0.0;
  int batch = 8;
  /// Error probability of the one-sided exact binomial bounds used to stop.
  double confidence = 1e-3;
};

struct AlignmentEstimate {
  double q_hat = 0.0;
  long pairs_used = 0;
  long aligned = 0;
  bool early_stopped = false;
};

/// Monte Carlo estimate of Pr[|<Mz, Mz'>| > ‖Mz‖‖Mz'‖/k²] with M = A^p.
/// Pairs with a numerically zero image count as aligned.
AlignmentEstimate estimate_alignment_probability(const SymmetricOperator& op, int p, int k, long pairs, Rng& rng,
                                                 const AlignmentOptions& options = {});

/// Clopper-Pearson one-sided bounds for a binomial proportion.
double binomial_upper_bound(long successes, long trials, double alpha);
double binomial_lower_bound(long successes, long trials, double alpha);

struct ExtendResult {
  SubspaceBasis basis;
  bool already_spanned = false;
};

/// Gram-Schmidt u against the basis (two passes). Residual below
/// tol_rel·‖u‖ leaves the basis unchanged and flags already_spanned.
ExtendResult extend_basis(const SubspaceBasis& basis, const Vector& u, double tol_rel = 1e-8);

enum class ProjectionMode { span_coordinates, complement_ambient };

Dataset project_points(const Dataset& data, const SubspaceBasis& basis, ProjectionMode mode);

}  // namespace huberfilt
