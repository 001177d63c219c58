#pragma once

#include <vector>

#include "huberfilt/filter.hpp"

namespace huberfilt {

struct NaiveCenter {
  Vector center;
  double radius = 0.0;
  WeightVector w0;
};

/// Coordinatewise median, R = kappa_R·sqrt(d·ln(1/eps)), and the indicator
/// of the 2R ball around the median.
NaiveCenter naive_center(const Dataset& data, double eps, double kappa_R = 3.0);

struct TopkResult {
  WeightVector w;
  SubspaceBasis top_dirs;
  Vector mu_w;
  int iterations = 0;
  /// Iteration cap reached with the stopping condition still false.
  bool cap_reached = false;
  /// Stopping condition false but no point scored above the threshold.
  bool stalled = false;
  double inlier_mass_removed = 0.0;
  double outlier_mass_removed = 0.0;
  std::vector<FilterOutcome> calls;
};

/// Filters along the top-k eigenvectors of the weighted covariance,
/// k = max(1, ceil(r·ln(1/eps))), until the average of the top k eigenvalues
/// drops below 1 + c_stop·eps/r.
TopkResult topk_filter_loop(const Dataset& data, const WeightVector& w0, double eps, double r,
                            const ResolvedParams& params);

struct CoverSet {
  std::vector<Vector> directions;
  double eta = 0.0;
};

/// Random eta-cover of the unit sphere in R^k (valid with probability >= 0.99).
CoverSet sphere_cover(int k_prime, double eta, Rng& rng);

/// Exact (lower) median of {u^T x_i}.
double directional_median(const Dataset& data, const Vector& u);

struct SlabConstraint {
  Vector u;
  double center = 0.0;
  double slack = 0.0;
};

/// Cyclic projections onto {x : |u^T x - center| <= slack}. One iteration is
/// one sweep over all slabs. Throws NumericalError(infeasible) after
/// max_iters sweeps or when the sweeps stop moving while still infeasible.
Vector feasible_point(const std::vector<SlabConstraint>& constraints, double tol = 1e-9, long max_iters = 100000,
                      const Vector* start = nullptr);

/// Median along every cover direction, then a point within 2·gamma of all of
/// them, found from the coordinatewise median.
Vector brute_force_mean(const Dataset& coords, double eps, double gamma, Rng& rng, std::size_t* cover_size = nullptr);

struct LowdimResult {
  Vector mu;
  double gamma_used = 0.0;
  bool gamma_doubled = false;
  int k = 0;
  std::size_t cover_size = 0;
  TopkResult topk;
};

/// Optimal-error estimator for small dimension: filter + certificate mean
/// on one half, brute force along the top-k directions on the other.
LowdimResult run_lowdim(const Dataset& coords, double eps, double r, const ResolvedParams& params, Rng& rng);

/// Coordinatewise (lower) median.
Vector coordinate_median(const Dataset& data);

}  // namespace huberfilt
