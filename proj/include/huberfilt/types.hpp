#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace huberfilt {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Per-point confidence weights in [0, 1].
using WeightVector = Eigen::VectorXd;

/// Failure kinds raised by the numerical routines. The CLI maps every
/// NumericalError to exit code 3.
enum class ErrorKind {
  degenerate_weights,
  score_exceeds_cap,
  full_space,
  degenerate_sketch,
  cover_too_large,
  infeasible,
  interval_starved,
  rank_deficient,
  all_trimmed,
};

const char* to_string(ErrorKind kind);

class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Immutable n x d sample matrix with optional hidden inlier labels
/// (true = inlier). Rows are points.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(RowMatrix points, std::vector<std::uint8_t> labels = {});

  const RowMatrix& points() const { return points_; }
  Eigen::Index n() const { return points_.rows(); }
  Eigen::Index d() const { return points_.cols(); }
  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  bool is_inlier(Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)] != 0; }

  /// Copy of the listed rows (labels carried through).
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  RowMatrix points_;
  std::vector<std::uint8_t> labels_;
};

/// Throws std::invalid_argument unless 0 <= w_i <= 1 and sum w > 0.
void validate_weights(const WeightVector& w, Eigen::Index n);

/// Ordered orthonormal vectors, stored as the columns of a d x m matrix.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Eigen::Index d = 0) : vectors_(d, 0) {}
  /// Adopts the given columns; throws std::invalid_argument if they are not
  /// orthonormal to the documented tolerances.
  static SubspaceBasis from_columns(const Matrix& columns);

  Eigen::Index ambient_dim() const { return vectors_.rows(); }
  Eigen::Index size() const { return vectors_.cols(); }
  bool empty() const { return vectors_.cols() == 0; }
  const Matrix& vectors() const { return vectors_; }

  /// Pi_{V-perp} applied to each column of z.
  Matrix project_complement(const Matrix& z) const;
  Vector project_complement(const Vector& z) const;
  /// Pi_V applied to z (ambient coordinates).
  Vector project_span(const Vector& z) const;
  /// Coordinates <u_j, z>.
  Vector coordinates(const Vector& z) const;
  /// Sum_j c_j u_j.
  Vector lift(const Vector& coords) const;

  /// Appends a unit vector assumed orthogonal to the current span.
  void append_unchecked(const Vector& unit);

  /// Max |<u_i,u_j>| over i != j and max |‖u_i‖ - 1|.
  std::pair<double, double> orthonormality_defect() const;

 private:
  Matrix vectors_;
};

/// Every constant the algorithms leave as "sufficiently large", with
/// defaults. Fields left unset are resolved from (n, d, eps) by `resolve`.
struct AlgorithmParams {
  double eps = 0.05;
  double c = 0.5;
  std::optional<int> k_sketch;
  std::optional<int> t_max;
  std::optional<int> p;
  std::optional<int> p_prime;
  std::optional<long> qt_pairs;
  double c1 = 4.0;
  double c_stop = 6.0;
  double kappa_T = 8.0;
  std::optional<double> beta_filter;
  int hutchinson_probes = 16;
  double kappa_trim = 4.0;
  double kappa_pre = 10.0;
  int power_trials = 3;
  int qt_batch = 8;
  double qt_confidence = 1e-3;
  double kappa_R = 3.0;
  double kappa_gamma = 4.0;
  double kappa_iter = 4.0;
  double kappa_2 = 1.5;
  double kappa_min = 50.0;
  double lowdim_score_mult = 100.0;
  double inner_eps_cap = 0.2;
  bool trim_consistency = true;
  bool track_potential = true;
  int chunk_rows = 512;
  std::uint64_t seed = 0;

  /// Sets a field from text, e.g. ("c_stop", "8"). Throws
  /// std::invalid_argument for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Applies a comma-separated list of key=value pairs.
  void apply_overrides(const std::string& spec);
  /// Range checks; throws std::invalid_argument.
  void validate() const;

  static std::vector<std::string> keys();
};

/// AlgorithmParams with every derived default filled in for a concrete
/// problem size.
struct ResolvedParams {
  double eps = 0.0;
  double c = 0.0;
  int k_sketch = 0;
  int t_max = 0;
  int p = 0;
  int p_prime = 0;
  long qt_pairs = 0;
  bool qt_pairs_capped = false;
  double c1 = 0.0;
  double c_stop = 0.0;
  double kappa_T = 0.0;
  double beta_filter = 0.0;
  int hutchinson_probes = 0;
  double kappa_trim = 0.0;
  double kappa_pre = 0.0;
  int power_trials = 0;
  int qt_batch = 0;
  double qt_confidence = 0.0;
  double kappa_R = 0.0;
  double kappa_gamma = 0.0;
  double kappa_iter = 0.0;
  double kappa_2 = 0.0;
  double kappa_min = 0.0;
  double lowdim_score_mult = 0.0;
  double inner_eps_cap = 0.0;
  bool trim_consistency = true;
  bool track_potential = true;
  int chunk_rows = 0;
  std::uint64_t seed = 0;
};

ResolvedParams resolve(const AlgorithmParams& params, Eigen::Index n, Eigen::Index d);

/// Worker count from HUBERFILT_THREADS (default 1, minimum 1).
int configured_threads();

}  // namespace huberfilt
