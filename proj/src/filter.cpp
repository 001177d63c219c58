#include "huberfilt/filter.hpp"

#include <cmath>
#include <numbers>

namespace huberfilt {

const char* to_string(FilterStop stop) {
  switch (stop) {
    case FilterStop::threshold_met: return "threshold_met";
    case FilterStop::exponent_cap: return "exponent_cap";
    case FilterStop::converged: return "converged";
    case FilterStop::no_scores: return "no_scores";
    case FilterStop::iteration_cap: return "iteration_cap";
  }
  return "threshold_met";
}

namespace {

void account_mass(const Dataset& data, const WeightVector& before, FilterOutcome& out) {
  const Vector delta = before - out.w_after;
  out.mass_removed_total = delta.sum();
  if (!data.has_labels()) return;
  double inlier = 0.0;
  double outlier = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) (data.is_inlier(i) ? inlier : outlier) += delta[i];
  out.mass_removed_inlier = inlier;
  out.mass_removed_outlier = outlier;
}

}  // namespace

FilterOutcome downweight(const Dataset& data, const WeightVector& w, const Vector& tau, double r, double T,
                         double beta, double reference_mass) {
  if (!(T > 0.0)) throw std::invalid_argument("filter threshold T must be positive");
  if (!(beta > 1.0)) throw std::invalid_argument("filter beta must exceed 1");
  if (!(r > 0.0)) throw std::invalid_argument("score cap r must be positive");
  if (tau.size() != w.size() || w.size() != data.n()) throw std::invalid_argument("score/weight length mismatch");
  const double ref = reference_mass > 0.0 ? reference_mass : static_cast<double>(data.n());

  // Only points carrying both weight and score move.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0 && tau[i] > r) throw NumericalError(ErrorKind::score_exceeds_cap, "a supported score exceeds r");
    if (w[i] > 0.0 && tau[i] > 0.0) active.push_back(i);
  }
  const auto score_mass = [&](long ell) {
    double s = 0.0;
    for (const auto i : active) s += w[i] * std::pow(1.0 - tau[i] / r, static_cast<double>(ell)) * tau[i];
    return s / ref;
  };
  const double target = T * beta;
  const long ell_max = static_cast<long>(std::ceil(r / (std::numbers::e * T))) + 1;

  FilterOutcome out;
  out.r = r;
  out.T = T;
  out.beta = beta;
  long ell = 0;
  if (score_mass(0) > target) {
    if (score_mass(ell_max) > target) {
      ell = ell_max;
      out.stop_reason = FilterStop::exponent_cap;
    } else {
      // Invariant: mass(lo) > target >= mass(hi).
      long lo = 0;
      long hi = ell_max;
      while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (score_mass(mid) > target ? lo : hi) = mid;
      }
      ell = hi;
    }
  }
  out.steps_taken = ell;
  out.w_after = w;
  if (ell > 0)
    for (const auto i : active) out.w_after[i] = w[i] * std::pow(1.0 - tau[i] / r, static_cast<double>(ell));
  out.score_mass_after = score_mass(ell);
  account_mass(data, w, out);
  return out;
}

FilterOutcome multidirectional_filter(const Dataset& data, const WeightVector& w, double eps, const SketchMatrix& U,
                                      const ResolvedParams& params, double reference_mass) {
  const ExecOptions exec{params.chunk_rows, configured_threads()};
  const Vector mu = weighted_mean(data, w, exec);
  const Vector g = quadratic_scores(data, U.rows, mu, exec);
  const double cutoff = 100.0 * U.frob_sq;
  Vector tau = (g.array() > cutoff).select(g, 0.0);
  double r = 0.0;
  for (Eigen::Index i = 0; i < tau.size(); ++i)
    if (w[i] > 0.0) r = std::max(r, tau[i]);
  const double T = params.kappa_T * (eps / std::log(1.0 / eps)) * U.frob_sq;
  if (r <= 0.0) {
    FilterOutcome out;
    out.w_after = w;
    out.T = T;
    out.beta = params.beta_filter;
    account_mass(data, w, out);
    return out;
  }
  return downweight(data, w, tau, r, T, params.beta_filter, reference_mass);
}

FilterOutcome warm_start(const Dataset& data, double eps, const ResolvedParams& params, Rng& rng,
                         const WeightVector* initial, double reference_mass) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  const ExecOptions exec{params.chunk_rows, configured_threads()};
  const WeightVector start = initial ? *initial : WeightVector::Ones(data.n());
  WeightVector w = start;
  const double ln_inv = std::log(1.0 / eps);
  const double target = params.kappa_pre * eps * ln_inv * ln_inv;
  const SubspaceBasis empty(data.d());

  FilterOutcome out;
  out.stop_reason = FilterStop::iteration_cap;
  for (int t = 0; t < params.t_max; ++t) {
    const MomentOperatorState state = build_moment_state(data, w, empty, eps, params.c1, reference_mass, exec);
    Rng round_rng = rng.split(static_cast<std::uint64_t>(t));
    const TopEigen top = estimate_top_eigenvalue(as_operator(state), params.p_prime, params.power_trials, round_rng);
    out.rounds = t + 1;
    out.lambda_final = top.lambda_hat;
    if (top.lambda_hat <= target) {
      out.stop_reason = FilterStop::converged;
      break;
    }
    const Vector proj = quadratic_scores(data, top.witness.transpose(), state.mu_full, exec);
    const Vector tau = (proj.array() > 100.0).select(proj, 0.0);
    double r = 0.0;
    for (Eigen::Index i = 0; i < tau.size(); ++i)
      if (w[i] > 0.0) r = std::max(r, tau[i]);
    if (r <= 0.0) {
      out.stop_reason = FilterStop::no_scores;
      break;
    }
    // Same threshold as the multi-directional filter with the one-row sketch v.
    const double T = params.kappa_T * eps / ln_inv;
    const FilterOutcome step = downweight(data, w, tau, r, T, params.beta_filter, reference_mass);
    out.steps_taken += step.steps_taken;
    out.r = step.r;
    out.T = step.T;
    out.beta = step.beta;
    out.score_mass_after = step.score_mass_after;
    if (step.mass_removed_inlier)
      out.calls.push_back({*step.mass_removed_inlier, step.mass_removed_outlier.value_or(0.0)});
    w = step.w_after;
    if (step.steps_taken == 0) {
      // Score mass already within T·beta: further rounds would repeat this one.
      out.stop_reason = FilterStop::no_scores;
      break;
    }
  }
  out.w_after = std::move(w);
  account_mass(data, start, out);
  return out;
}

}  // namespace huberfilt
