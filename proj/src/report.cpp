#include "huberfilt/report.hpp"

#include <charconv>
#include <ostream>

namespace huberfilt {

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json vector_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json to_json(const ResolvedParams& p) {
  return Json{{"eps", p.eps},
              {"c", p.c},
              {"k_sketch", p.k_sketch},
              {"t_max", p.t_max},
              {"p", p.p},
              {"p_prime", p.p_prime},
              {"qt_pairs", p.qt_pairs},
              {"qt_pairs_capped", p.qt_pairs_capped},
              {"c1", p.c1},
              {"c_stop", p.c_stop},
              {"kappa_T", p.kappa_T},
              {"beta_filter", p.beta_filter},
              {"hutchinson_probes", p.hutchinson_probes},
              {"kappa_trim", p.kappa_trim},
              {"kappa_pre", p.kappa_pre},
              {"power_trials", p.power_trials},
              {"qt_batch", p.qt_batch},
              {"qt_confidence", p.qt_confidence},
              {"kappa_R", p.kappa_R},
              {"kappa_gamma", p.kappa_gamma},
              {"kappa_iter", p.kappa_iter},
              {"kappa_2", p.kappa_2},
              {"kappa_min", p.kappa_min},
              {"lowdim_score_mult", p.lowdim_score_mult},
              {"inner_eps_cap", p.inner_eps_cap},
              {"trim_consistency", p.trim_consistency},
              {"track_potential", p.track_potential},
              {"chunk_rows", p.chunk_rows},
              {"seed", p.seed}};
}

Json to_json(const FilterOutcome& f, bool with_weights) {
  Json j{{"steps_taken", f.steps_taken},
         {"mass_removed_total", f.mass_removed_total},
         {"mass_removed_inlier", optional_json(f.mass_removed_inlier)},
         {"mass_removed_outlier", optional_json(f.mass_removed_outlier)},
         {"stop_reason", to_string(f.stop_reason)},
         {"r", f.r},
         {"T", f.T},
         {"beta", f.beta},
         {"score_mass_after", f.score_mass_after},
         {"rounds", f.rounds},
         {"lambda_final", f.lambda_final}};
  if (with_weights) j["w_after"] = vector_json(f.w_after);
  return j;
}

Json to_json(const IterationRecord& r) {
  return Json{{"t", r.t},
              {"lambda_hat", r.lambda_hat},
              {"q_hat", optional_json(r.q_hat)},
              {"qt_pairs_used", r.qt_pairs_used},
              {"case", to_string(r.kind)},
              {"phi_hat_before", optional_json(r.phi_hat_before)},
              {"phi_hat_after", optional_json(r.phi_hat_after)},
              {"direction_energy", optional_json(r.direction_energy)},
              {"mass_removed", r.mass_removed},
              {"inlier_mass_removed", optional_json(r.inlier_mass_removed)},
              {"outlier_mass_removed", optional_json(r.outlier_mass_removed)},
              {"dim_V", r.dim_V},
              {"filter_steps", r.filter_steps},
              {"filter_stop", r.filter_stop ? Json(to_string(*r.filter_stop)) : Json(nullptr)}};
}

Json to_json(const MeanReport& r, const ReportOptions& opt) {
  Json trace = Json::array();
  if (opt.trace)
    for (const auto& rec : r.stage1.trace) trace.push_back(to_json(rec));
  Json j{{"mu_hat", vector_json(r.mu_hat)},
         {"dim_V", r.dim_V},
         {"n1", r.n1},
         {"n2", r.n2},
         {"stage1_stop", to_string(r.stage1.stop)},
         {"stage1_iterations", r.stage1.trace.size()},
         {"stage1_lambda_final", r.stage1.lambda_final},
         {"lowdim_ran", r.lowdim_ran},
         {"lowdim_gamma_used", r.lowdim_gamma_used},
         {"lowdim_gamma_doubled", r.lowdim_gamma_doubled},
         {"lowdim_k", r.lowdim_k},
         {"lowdim_cover_size", r.lowdim_cover_size},
         {"inlier_mass_removed", optional_json(r.inlier_mass_removed)},
         {"outlier_mass_removed", optional_json(r.outlier_mass_removed)},
         {"warm_start", to_json(r.warm)},
         {"params", to_json(r.params)},
         {"wall_ms", opt.timing ? r.wall_ms : 0.0},
         {"seed", r.seed},
         {"threads", r.threads},
         {"warnings", r.warnings}};
  if (opt.trace) j["stage1_trace"] = std::move(trace);
  return j;
}

Json to_json(const RegressionReport& r, const ReportOptions& opt) {
  return Json{{"beta_hat", vector_json(r.beta_hat)},
              {"sigma_y_hat", r.sigma_y_hat},
              {"interval_center", r.interval_center},
              {"interval_half_length", r.interval_half_length},
              {"kept_count", r.kept_count},
              {"retries", r.retries},
              {"inner_eps", r.inner_eps},
              {"wall_ms", opt.timing ? r.wall_ms : 0.0},
              {"inner", to_json(r.inner, opt)}};
}

void write_trace_jsonl(std::ostream& out, const std::vector<IterationRecord>& trace) {
  for (const auto& rec : trace) out << to_json(rec).dump() << '\n';
}

}  // namespace huberfilt
