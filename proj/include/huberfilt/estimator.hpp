#pragma once

#include <string>
#include <vector>

#include "huberfilt/datagen.hpp"
#include "huberfilt/lowdim.hpp"
#include "huberfilt/stage1.hpp"

namespace huberfilt {

/// Sort, drop ceil(kappa_trim·eps·n) values from each end, average the rest.
double trimmed_mean(std::vector<double> values, double eps, double kappa_trim = 4.0);

/// E[Z² | Z² between its alpha and 1-alpha quantiles] for Z ~ N(0,1): the
/// factor by which symmetric trimming shrinks the mean of a Gaussian square.
double trimmed_chi2_mean(double alpha);

struct MeanReport {
  Vector mu_hat;
  int dim_V = 0;
  FilterOutcome warm;
  Stage1Output stage1;
  bool lowdim_ran = false;
  double lowdim_gamma_used = 0.0;
  bool lowdim_gamma_doubled = false;
  int lowdim_k = 0;
  std::size_t lowdim_cover_size = 0;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  /// Inlier/outlier weight removed on S1 by warm start and stage 1 together
  /// (labels required).
  std::optional<double> inlier_mass_removed;
  std::optional<double> outlier_mass_removed;
  ResolvedParams params;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> warnings;
};

/// Warm start and stage 1 on S1, low-dimensional stage with r = c on the
/// projection of S2 onto the set-aside subspace, recombined.
MeanReport robust_mean(const Dataset& samples, double eps, double c, const AlgorithmParams& params, Rng& rng);

struct RegressionReport {
  Vector beta_hat;
  double sigma_y_hat = 0.0;
  double interval_center = 0.0;
  double interval_half_length = 0.0;
  Eigen::Index kept_count = 0;
  int retries = 0;
  double inner_eps = 0.0;
  MeanReport inner;
  double wall_ms = 0.0;
};

/// Regression by reduction to mean estimation on {x : y in I}, rescaled.
RegressionReport robust_regression(const RegressionInstance& pairs, double eps, double c,
                                   const AlgorithmParams& params, Rng& rng);

/// Runs robust_regression `repeats` times on independent streams and returns
/// the coordinatewise median of the estimates (first report otherwise kept).
RegressionReport robust_regression_repeated(const RegressionInstance& pairs, double eps, double c,
                                            const AlgorithmParams& params, Rng& rng, int repeats);

/// Iterative trimmed least squares: OLS, drop the ceil(2·eps·n) largest
/// absolute residuals, refit from all points, `rounds` times.
Vector baseline_center_regressor(const RegressionInstance& pairs, double eps, int rounds = 10);

/// y' = y - beta0^T x.
RegressionInstance recenter(const RegressionInstance& pairs, const Vector& beta0);

/// Baselines used by the benchmark.
Vector sample_mean(const Dataset& data);
/// Warm start alone followed by the weighted mean.
Vector single_direction_mean(const Dataset& data, double eps, const AlgorithmParams& params, Rng& rng,
                             FilterOutcome* outcome = nullptr);

}  // namespace huberfilt
