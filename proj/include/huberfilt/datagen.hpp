#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "huberfilt/rng.hpp"
#include "huberfilt/types.hpp"

namespace huberfilt {

enum class AdversaryKind {
  none,
  point_mass,
  cluster,
  subspace_spread,
  mirrored_pair,
  regression_hinge,
  regression_label_flip,
};

const char* to_string(AdversaryKind kind);
AdversaryKind parse_adversary_kind(const std::string& text);

/// Outlier law B of the Huber model P = (1 - eps) G + eps B.
struct ContaminationSpec {
  AdversaryKind kind = AdversaryKind::none;
  /// Displacement scale in units of the inlier standard deviation.
  double magnitude = 0.0;
  /// Number of orthonormal directions used by subspace_spread.
  int spread_count = 1;
  std::uint64_t direction_seed = 0;
  /// regression_hinge: labels drawn uniformly from [band_lo, band_hi]·σ_y.
  double band_lo = 0.9;
  double band_hi = 1.0;

  void validate() const;
  /// Text form "kind[:magnitude[:spread_count]]", e.g. "cluster:3.0" or
  /// "subspace_spread:3.46:8".
  static ContaminationSpec parse(const std::string& text);
  std::string to_string() const;
};

/// `count` orthonormal directions in R^d (columns), a deterministic function
/// of (d, count, seed).
Matrix adversary_directions(Eigen::Index d, int count, std::uint64_t seed);

/// Huber-model mean instance: each point independently an inlier
/// N(mu, I_d) with probability 1 - eps, else an outlier from `spec`.
Dataset gen_mean_instance(Eigen::Index d, Eigen::Index n, double eps, const Vector& mu, const ContaminationSpec& spec,
                          Rng& rng);

struct RegressionInstance {
  RowMatrix xs;
  Vector ys;
  std::vector<std::uint8_t> labels;
  std::optional<Vector> beta;
  std::optional<double> sigma;

  Eigen::Index n() const { return xs.rows(); }
  Eigen::Index d() const { return xs.cols(); }
};

/// Inliers: x ~ N(0, I), y = beta^T x + N(0, sigma²).
RegressionInstance gen_regression_instance(Eigen::Index d, Eigen::Index n, double eps, const Vector& beta,
                                           double sigma, const ContaminationSpec& spec, Rng& rng);

/// Conditioning region for y: the point y = a (half_length = 0) or the
/// interval [a - half_length, a + half_length].
struct ConditioningRegion {
  double a = 0.0;
  double half_length = 0.0;
};

/// Law of x given y in the region, for inlier regression pairs.
/// Covariance = cov_identity·I + cov_beta_coeff·ββᵀ.
struct ConditionalMoments {
  Vector beta;
  Vector mean;
  double cov_identity = 1.0;
  double cov_beta_coeff = 0.0;
  double sigma_y_sq = 0.0;
  /// E[y | region] and Var[y | region].
  double y_mean = 0.0;
  double y_var = 0.0;
  /// Pr[y in region] for an inlier (0 for a point region).
  double mass = 0.0;

  Matrix covariance() const;
};

ConditionalMoments conditional_moments(const Vector& beta, double sigma, const ConditioningRegion& where);

/// One row per point; optional trailing 0/1 label column.
void write_csv(std::ostream& out, const Dataset& data, bool with_labels);
void write_csv(std::ostream& out, const RegressionInstance& inst, bool with_labels);
/// Reads a headerless numeric CSV; if `trailing_labels`, the last column is a
/// 0/1 inlier flag.
Dataset read_csv(std::istream& in, bool trailing_labels);

}  // namespace huberfilt
