#pragma once

#include <optional>
#include <vector>

#include "huberfilt/linalg.hpp"

namespace huberfilt {

enum class FilterStop {
  /// Score mass at or below T·beta (or nothing to filter).
  threshold_met,
  /// Even the largest exponent left score mass above T·beta.
  exponent_cap,
  /// Warm start: the top eigenvalue fell below its target.
  converged,
  /// Warm start: eigenvalue above target but the threshold scores carry too
  /// little mass for a filter step to make progress.
  no_scores,
  /// Warm start: t_max rounds without convergence.
  iteration_cap,
};

const char* to_string(FilterStop stop);

/// Inlier/outlier weight removed by one filter call (labels required).
struct FilterCall {
  double inlier = 0.0;
  double outlier = 0.0;
};

struct FilterOutcome {
  WeightVector w_after;
  long steps_taken = 0;
  double mass_removed_total = 0.0;
  std::optional<double> mass_removed_inlier;
  std::optional<double> mass_removed_outlier;
  FilterStop stop_reason = FilterStop::threshold_met;
  /// Parameters of the (last) down-weighting call.
  double r = 0.0;
  double T = 0.0;
  double beta = 0.0;
  /// E_P[w'·tau] after the call.
  double score_mass_after = 0.0;
  /// Warm start only: rounds executed and final eigenvalue estimate.
  int rounds = 0;
  double lambda_final = 0.0;
  /// Warm start only: per-round mass removed (labels required).
  std::vector<FilterCall> calls;
};

/// Multiplicative schedule w_l = w·(1 - tau/r)^l with the minimal
/// l in [0, l_max], l_max = ceil(r/(e·T)) + 1, such that
/// E_P[w_l·tau] <= T·beta. Expectations are Σ(·)/reference_mass
/// (reference_mass <= 0 means n).
FilterOutcome downweight(const Dataset& data, const WeightVector& w, const Vector& tau, double r, double T,
                         double beta, double reference_mass = 0.0);

/// Scores g = ‖U(x - mu_w)‖², tau = g·1(g > 100·frob_sq), T = kappa_T·(eps/ln(1/eps))·frob_sq.
FilterOutcome multidirectional_filter(const Dataset& data, const WeightVector& w, double eps, const SketchMatrix& U,
                                      const ResolvedParams& params, double reference_mass = 0.0);

/// Single-direction preprocessing filter run until the top eigenvalue of
/// W²Σ_w − (1 − c1·eps)I is at most kappa_pre·eps·ln²(1/eps).
/// `initial` restricts the run to a weighted subset (defaults to all ones).
FilterOutcome warm_start(const Dataset& data, double eps, const ResolvedParams& params, Rng& rng,
                         const WeightVector* initial = nullptr, double reference_mass = 0.0);

}  // namespace huberfilt
