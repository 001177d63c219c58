#pragma once

#include <string>
#include <vector>

#include "huberfilt/datagen.hpp"
#include "huberfilt/stage1.hpp"

namespace huberfilt {

struct CertificateAudit {
  bool pass = false;
  /// ‖Π_{V⊥}(μ_w − μ_true)‖.
  double error = 0.0;
  /// Top eigenvalue of the weighted covariance on V⊥, minus one.
  double lambda = 0.0;
  /// κ_cert·(eps + sqrt(max(λ,0)·eps)).
  double bound = 0.0;
  double margin = 0.0;
};

/// Certificate check: the weighted mean is within κ_cert·(eps + √(λ·eps))
/// of the truth on V⊥, with λ = λ_max(Cov_w on V⊥) − 1. Dense for d <= 256,
/// power iteration otherwise.
CertificateAudit audit_certificate(const Dataset& data, const WeightVector& w, const SubspaceBasis& basis,
                                   const Vector& mu_true, double eps, double kappa_cert = 10.0);

struct FilterMassAudit {
  long calls = 0;
  long passes = 0;
  double pass_rate = 1.0;
  double inlier_total = 0.0;
  double outlier_total = 0.0;
  /// Indices of calls violating inlier <= max(2·(eps/ln(1/eps))·outlier, 1e-3·n).
  std::vector<long> violations;
};

FilterMassAudit audit_filter_mass(const std::vector<FilterCall>& calls, double eps, double n);
/// Filter-case iterations of a stage-1 trace (labels must have been present).
std::vector<FilterCall> filter_calls(const std::vector<IterationRecord>& trace);

struct GoodnessAudit {
  bool median_ok = false;
  bool mean_ok = false;
  bool covariance_ok = false;
  bool tail_ok = false;
  double worst_median_gap = 0.0;
  double worst_mean_shift = 0.0;
  double worst_cov_shift = 0.0;
  double worst_tail_mass = 0.0;
  double median_bound = 0.0;
  double mean_bound = 0.0;
  double cov_bound = 0.0;
  double tail_bound = 0.0;
  bool all_ok() const { return median_ok && mean_ok && covariance_ok && tail_ok; }
};

/// Spot checks of the goodness conditions on inlier samples around mu:
/// (1) directional medians within κ·eps of v^T mu (one-sided probabilities
/// below 1/2 at ±κ·eps); (2.a/2.b) deleting the alpha-fraction most extreme
/// points along v moves the mean by <= κ·α·sqrt(ln(1/α)) and the covariance
/// by <= κ·α·ln(1/α); (2.c) for random orthonormal U with k rows,
/// E[p·1(p > 100·tr)] <= κ·eps/ln(1/eps) with p = ‖U(x−μ)‖².
GoodnessAudit audit_goodness(const Dataset& samples, const Vector& mu, double eps, double alpha, int k, int trials,
                             Rng& rng, double kappa = 5.0);

struct ConditionalAudit {
  bool pass = false;
  Eigen::Index kept = 0;
  Eigen::Index drawn = 0;
  double kept_fraction = 0.0;
  double kept_fraction_floor = 0.0;
  /// ‖mean_hat − (a/σ_y²)β‖ against ℓ‖β‖/σ_y² + 3·stderr.
  double mean_gap_point = 0.0;
  double mean_bound_point = 0.0;
  /// ‖mean_hat − E[x | y ∈ I]‖ against 3·stderr.
  double mean_gap_interval = 0.0;
  double mean_stderr = 0.0;
  /// ‖Σ_hat − I‖_op against 9‖β‖²/σ_y² + 3·stderr.
  double cov_dev = 0.0;
  double cov_bound = 0.0;
  /// ‖Σ_hat − Cov[x | y ∈ I]‖_op against 3·stderr.
  double cov_gap_interval = 0.0;
  double cov_stderr = 0.0;
  bool mean_ok = false;
  bool cov_ok = false;
  bool fraction_ok = false;
};

/// Rejection-samples inlier pairs with y in [a − ℓ, a + ℓ] until `kept`
/// samples are accepted and compares their moments with the analytic ones.
ConditionalAudit audit_conditional(const Vector& beta, double sigma, const ConditioningRegion& interval,
                                   Eigen::Index kept, Rng& rng);

}  // namespace huberfilt
