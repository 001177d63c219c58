#pragma once

#include <optional>
#include <vector>

#include "huberfilt/filter.hpp"

namespace huberfilt {

enum class IterationCase { terminate, filter, grow, fallback_grow };

const char* to_string(IterationCase c);

struct IterationRecord {
  int t = 0;
  double lambda_hat = 0.0;
  /// Alignment probability estimate; absent on terminate.
  std::optional<double> q_hat;
  long qt_pairs_used = 0;
  IterationCase kind = IterationCase::terminate;
  /// Hutchinson estimates of tr((B⊥)^{2p}) before and after the update,
  /// computed from the same probe vectors.
  std::optional<double> phi_hat_before;
  std::optional<double> phi_hat_after;
  /// Grow cases: ‖(B⊥)^p u‖² for the direction u set aside.
  std::optional<double> direction_energy;
  double mass_removed = 0.0;
  std::optional<double> inlier_mass_removed;
  std::optional<double> outlier_mass_removed;
  int dim_V = 0;
  /// Filter cases: ℓ chosen and the down-weighting stop reason.
  long filter_steps = 0;
  std::optional<FilterStop> filter_stop;
};

enum class Stage1Stop {
  /// λ̂ <= c_stop·eps certified at some iteration.
  terminated,
  /// t_max iterations without certification.
  exhausted,
  /// A grow step found its direction already spanned by V.
  stalled,
};

const char* to_string(Stage1Stop s);

struct Stage1Output {
  SubspaceBasis basis;
  WeightVector w;
  Vector mu_full;
  std::vector<IterationRecord> trace;
  Stage1Stop stop = Stage1Stop::exhausted;
  double reference_mass = 0.0;
  double lambda_final = 0.0;
};

/// The outer loop: Case 1 filters along a near-orthogonal sketch when the
/// alignment probability is small, Case 2 sets the top direction aside
/// otherwise, until λ̂(B⊥) <= c_stop·eps or t_max iterations.
///
/// `initial` weights (e.g. from the warm start) define the distribution P
/// the loop runs on; its weights are relative to that distribution and
/// start at one, which is represented by carrying the product of the two in
/// `w` with reference_mass = Σ initial.
Stage1Output run_stage1(const Dataset& data, double eps, const ResolvedParams& params, Rng& rng,
                        const WeightVector* initial = nullptr);

}  // namespace huberfilt
