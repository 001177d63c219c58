#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace huberfilt {

/// Counter-based generator built on Philox4x32-10.
///
/// A stream is identified by a 64-bit key; draws walk a 128-bit counter.
/// `split(id)` derives an independent child stream, so every stochastic
/// operation can take its own stream and results stay reproducible no matter
/// how work is scheduled.
class Rng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Rng(std::uint64_t seed = 0) : key_(seed) {}

  /// Raw Philox4x32-10 bijection, exposed for known-answer tests.
  static Block philox(Block counter, std::array<std::uint32_t, 2> key);

  /// Child stream keyed by (this key, id). Does not advance this stream.
  Rng split(std::uint64_t id) const;

  std::uint64_t key() const { return key_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index d);
  /// d x cols matrix of independent standard normals, filled column by column.
  Eigen::MatrixXd normal_matrix(Eigen::Index d, Eigen::Index cols);

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_ = 0;
  Block buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace huberfilt
