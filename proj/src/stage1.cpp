#include "huberfilt/stage1.hpp"

#include <cmath>

namespace huberfilt {

const char* to_string(IterationCase c) {
  switch (c) {
    case IterationCase::terminate: return "terminate";
    case IterationCase::filter: return "filter";
    case IterationCase::grow: return "grow";
    case IterationCase::fallback_grow: return "fallback_grow";
  }
  return "terminate";
}

const char* to_string(Stage1Stop s) {
  switch (s) {
    case Stage1Stop::terminated: return "terminated";
    case Stage1Stop::exhausted: return "exhausted";
    case Stage1Stop::stalled: return "stalled";
  }
  return "exhausted";
}

namespace {

// Sub-stream ids within one iteration.
enum : std::uint64_t { kEigenStream = 1, kAlignStream = 2, kSketchStream = 3, kPotentialStream = 4 };

}  // namespace

Stage1Output run_stage1(const Dataset& data, double eps, const ResolvedParams& params, Rng& rng,
                        const WeightVector* initial) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  const ExecOptions exec{params.chunk_rows, configured_threads()};
  Stage1Output out;
  out.w = initial ? *initial : WeightVector::Ones(data.n());
  validate_weights(out.w, data.n());
  out.reference_mass = out.w.sum();
  out.basis = SubspaceBasis(data.d());
  const int k = params.k_sketch;
  const double q_threshold = 1.0 / (static_cast<double>(k) * k * params.t_max);

  for (int t = 1; t <= params.t_max; ++t) {
    const Rng iter_rng = rng.split(static_cast<std::uint64_t>(t));
    const MomentOperatorState state =
        build_moment_state(data, out.w, out.basis, eps, params.c1, out.reference_mass, exec);
    const SymmetricOperator op = as_operator(state);

    IterationRecord rec;
    rec.t = t;
    Rng eig_rng = iter_rng.split(kEigenStream);
    const TopEigen top = estimate_top_eigenvalue(op, params.p_prime, params.power_trials, eig_rng);
    rec.lambda_hat = top.lambda_hat;
    out.lambda_final = top.lambda_hat;
    if (top.lambda_hat <= params.c_stop * eps) {
      rec.kind = IterationCase::terminate;
      rec.dim_V = static_cast<int>(out.basis.size());
      out.trace.push_back(rec);
      out.stop = Stage1Stop::terminated;
      break;
    }

    Rng align_rng = iter_rng.split(kAlignStream);
    const AlignmentEstimate q = estimate_alignment_probability(
        op, params.p, k, params.qt_pairs, align_rng, {q_threshold, params.qt_batch, params.qt_confidence});
    rec.q_hat = q.q_hat;
    rec.qt_pairs_used = q.pairs_used;

    WeightVector w_next = out.w;
    SubspaceBasis basis_next = out.basis;
    bool grow = q.q_hat > q_threshold;
    if (!grow) {
      Rng sketch_rng = iter_rng.split(kSketchStream);
      const SketchMatrix U = gaussian_sketch(op, k, params.p, sketch_rng);
      bool certified = false;
      try {
        certified = near_orthogonality_check(U, k);
      } catch (const NumericalError&) {
        certified = false;  // a zero row cannot certify anything
      }
      if (certified) {
        const FilterOutcome f = multidirectional_filter(data, out.w, eps, U, params, out.reference_mass);
        rec.kind = IterationCase::filter;
        rec.mass_removed = f.mass_removed_total;
        rec.inlier_mass_removed = f.mass_removed_inlier;
        rec.outlier_mass_removed = f.mass_removed_outlier;
        rec.filter_steps = f.steps_taken;
        rec.filter_stop = f.stop_reason;
        w_next = f.w_after;
      } else {
        rec.kind = IterationCase::fallback_grow;
        grow = true;
      }
    } else {
      rec.kind = IterationCase::grow;
    }

    if (grow) {
      // The power-iteration witness from step (a) is the approximate top
      // eigenvector; it lies in V⊥ because B⊥ annihilates V.
      const ExtendResult ext = extend_basis(out.basis, top.witness);
      if (ext.already_spanned) {
        rec.dim_V = static_cast<int>(out.basis.size());
        out.trace.push_back(rec);
        out.stop = Stage1Stop::stalled;
        break;
      }
      basis_next = ext.basis;
    }

    if (params.track_potential) {
      // Same probes before and after, so the comparison is paired.
      Rng probe_rng = iter_rng.split(kPotentialStream);
      Matrix Z = probe_rng.normal_matrix(data.d(), params.hutchinson_probes);
      if (grow) {
        Z.conservativeResize(Eigen::NoChange, Z.cols() + 1);
        Z.col(Z.cols() - 1) = top.witness;
      }
      const Matrix before = power_apply(op, Z, params.p);
      rec.phi_hat_before = before.leftCols(params.hutchinson_probes).colwise().squaredNorm().sum() /
                           params.hutchinson_probes;
      if (grow) rec.direction_energy = before.col(before.cols() - 1).squaredNorm();
      const MomentOperatorState next =
          build_moment_state(data, w_next, basis_next, eps, params.c1, out.reference_mass, exec);
      const Matrix after = power_apply(as_operator(next), Z.leftCols(params.hutchinson_probes), params.p);
      rec.phi_hat_after = after.colwise().squaredNorm().sum() / params.hutchinson_probes;
    }

    out.w = std::move(w_next);
    out.basis = std::move(basis_next);
    rec.dim_V = static_cast<int>(out.basis.size());
    out.trace.push_back(rec);
  }
  out.mu_full = weighted_mean(data, out.w, exec);
  return out;
}

}  // namespace huberfilt
