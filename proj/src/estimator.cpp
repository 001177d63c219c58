#include "huberfilt/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace huberfilt {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// Stream ids for the pipeline stages.
enum : std::uint64_t { kSplitStream = 11, kWarmStream = 12, kStage1Stream = 13, kLowdimStream = 14 };

}  // namespace

double trimmed_mean(std::vector<double> values, double eps, double kappa_trim) {
  if (values.empty()) throw std::invalid_argument("trimmed mean of an empty sequence");
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  const auto n = values.size();
  const auto drop = static_cast<std::size_t>(std::ceil(kappa_trim * eps * static_cast<double>(n)));
  if (2 * drop >= n) throw NumericalError(ErrorKind::all_trimmed, "trimming removes every value");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = drop; i < n - drop; ++i) sum += values[i];
  return sum / static_cast<double>(n - 2 * drop);
}

double trimmed_chi2_mean(double alpha) {
  if (!(alpha >= 0.0 && alpha < 0.5)) throw std::invalid_argument("trim fraction must lie in [0, 1/2)");
  if (alpha == 0.0) return 1.0;
  const boost::math::normal_distribution<double> z;
  // Z² between its alpha and 1-alpha quantiles <=> |Z| in [a, b].
  const double a = boost::math::quantile(z, 0.5 + 0.5 * alpha);
  const double b = boost::math::quantile(z, 1.0 - 0.5 * alpha);
  const double mass = (a * boost::math::pdf(z, a) - b * boost::math::pdf(z, b)) + boost::math::cdf(z, b) -
                      boost::math::cdf(z, a);
  return 2.0 * mass / (1.0 - 2.0 * alpha);
}

MeanReport robust_mean(const Dataset& samples, double eps, double c, const AlgorithmParams& params, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  AlgorithmParams local = params;
  local.eps = eps;
  local.c = c;
  MeanReport rep;
  rep.params = resolve(local, samples.n(), samples.d());
  rep.seed = rng.key();
  rep.threads = configured_threads();
  const ResolvedParams& rp = rep.params;
  const Eigen::Index n = samples.n();
  const Eigen::Index d = samples.d();
  if (static_cast<double>(n) < static_cast<double>(d) / (eps * eps))
    rep.warnings.push_back("n below d/eps^2; guarantees are not expected to hold");

  // S2 is a seeded random subset; S1 is the rest, represented by an
  // indicator weight vector over the full dataset so nothing is copied.
  const double s2_target =
      std::ceil(rp.kappa_2 * (rp.t_max + std::log(1.0 / 0.01)) / (eps * eps));
  const auto n2 = static_cast<Eigen::Index>(std::min<double>(static_cast<double>(n / 2), s2_target));
  std::vector<Eigen::Index> s2_rows;
  WeightVector s1_indicator = WeightVector::Ones(n);
  if (n2 > 0) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng split = rng.split(kSplitStream);
    for (Eigen::Index i = 0; i < n2; ++i) {
      const auto j = i + static_cast<Eigen::Index>(split.below(static_cast<std::uint64_t>(n - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    s2_rows.assign(order.begin(), order.begin() + n2);
    std::sort(s2_rows.begin(), s2_rows.end());
    for (const auto i : s2_rows) s1_indicator[i] = 0.0;
  }
  rep.n2 = n2;
  rep.n1 = n - n2;

  Rng warm_rng = rng.split(kWarmStream);
  rep.warm = warm_start(samples, eps, rp, warm_rng, &s1_indicator, static_cast<double>(rep.n1));
  Rng stage_rng = rng.split(kStage1Stream);
  rep.stage1 = run_stage1(samples, eps, rp, stage_rng, &rep.warm.w_after);
  rep.dim_V = static_cast<int>(rep.stage1.basis.size());

  if (samples.has_labels()) {
    double inl = 0.0;
    double out = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double removed = s1_indicator[i] - rep.stage1.w[i];
      (samples.is_inlier(i) ? inl : out) += removed;
    }
    rep.inlier_mass_removed = inl;
    rep.outlier_mass_removed = out;
  }

  const Vector& mu_full = rep.stage1.mu_full;
  if (rep.stage1.basis.empty() || n2 == 0) {
    rep.mu_hat = mu_full;
  } else {
    const Dataset s2 = samples.subset(s2_rows);
    const Dataset coords = project_points(s2, rep.stage1.basis, ProjectionMode::span_coordinates);
    Rng low_rng = rng.split(kLowdimStream);
    const LowdimResult low = run_lowdim(coords, eps, c, rp, low_rng);
    rep.lowdim_ran = true;
    rep.lowdim_gamma_used = low.gamma_used;
    rep.lowdim_gamma_doubled = low.gamma_doubled;
    rep.lowdim_k = low.k;
    rep.lowdim_cover_size = low.cover_size;
    rep.mu_hat = rep.stage1.basis.project_complement(mu_full) + rep.stage1.basis.lift(low.mu);
  }
  // Drop the per-point weights of the warm start; stage 1 keeps the final ones.
  rep.warm.w_after.resize(0);
  rep.wall_ms = elapsed_ms(start);
  return rep;
}

RegressionReport robust_regression(const RegressionInstance& pairs, double eps, double c,
                                   const AlgorithmParams& params, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  if (pairs.ys.size() != pairs.n()) throw std::invalid_argument("label count does not match design rows");
  RegressionReport rep;
  std::vector<double> sq(static_cast<std::size_t>(pairs.n()));
  for (Eigen::Index i = 0; i < pairs.n(); ++i) sq[static_cast<std::size_t>(i)] = pairs.ys[i] * pairs.ys[i];
  double sigma_sq = trimmed_mean(std::move(sq), eps, params.kappa_trim);
  if (params.trim_consistency) {
    const double alpha = std::ceil(params.kappa_trim * eps * pairs.n()) / static_cast<double>(pairs.n());
    sigma_sq /= trimmed_chi2_mean(alpha);
  }
  if (!(sigma_sq > 0.0)) throw NumericalError(ErrorKind::degenerate_weights, "label scale estimate is zero");
  rep.sigma_y_hat = std::sqrt(sigma_sq);
  rep.interval_half_length = rep.sigma_y_hat / std::log(1.0 / eps);
  rep.inner_eps = std::min(10.0 * eps, params.inner_eps_cap);
  const double min_kept = params.kappa_min / (eps * eps);

  Rng interval_rng = rng.split(21);
  std::vector<Eigen::Index> kept;
  for (int attempt = 0;; ++attempt) {
    double a = 0.0;
    do {
      a = interval_rng.uniform(-rep.sigma_y_hat, rep.sigma_y_hat);
    } while (std::abs(a) <= 0.05 * rep.sigma_y_hat);
    rep.interval_center = a;
    kept.clear();
    for (Eigen::Index i = 0; i < pairs.n(); ++i)
      if (std::abs(pairs.ys[i] - a) <= rep.interval_half_length) kept.push_back(i);
    rep.kept_count = static_cast<Eigen::Index>(kept.size());
    if (static_cast<double>(kept.size()) >= min_kept) break;
    if (attempt >= 5)
      throw NumericalError(ErrorKind::interval_starved,
                           "kept " + std::to_string(kept.size()) + " points, need " +
                               std::to_string(static_cast<long>(std::ceil(min_kept))));
    ++rep.retries;
  }

  RowMatrix xs(static_cast<Eigen::Index>(kept.size()), pairs.d());
  std::vector<std::uint8_t> labels;
  for (std::size_t r = 0; r < kept.size(); ++r) {
    xs.row(static_cast<Eigen::Index>(r)) = pairs.xs.row(kept[r]);
    if (!pairs.labels.empty()) labels.push_back(pairs.labels[static_cast<std::size_t>(kept[r])]);
  }
  const Dataset conditional(std::move(xs), std::move(labels));
  Rng inner_rng = rng.split(22);
  rep.inner = robust_mean(conditional, rep.inner_eps, c, params, inner_rng);
  rep.beta_hat = (sigma_sq / rep.interval_center) * rep.inner.mu_hat;
  rep.wall_ms = elapsed_ms(start);
  return rep;
}

RegressionReport robust_regression_repeated(const RegressionInstance& pairs, double eps, double c,
                                            const AlgorithmParams& params, Rng& rng, int repeats) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  std::vector<RegressionReport> runs;
  for (int r = 0; r < repeats; ++r) {
    Rng stream = rng.split(1000 + static_cast<std::uint64_t>(r));
    runs.push_back(robust_regression(pairs, eps, c, params, stream));
  }
  RegressionReport out = runs.front();
  std::vector<double> coord(static_cast<std::size_t>(repeats));
  for (Eigen::Index j = 0; j < pairs.d(); ++j) {
    for (int r = 0; r < repeats; ++r) coord[static_cast<std::size_t>(r)] = runs[static_cast<std::size_t>(r)].beta_hat[j];
    std::sort(coord.begin(), coord.end());
    const auto m = coord.size();
    out.beta_hat[j] = m % 2 ? coord[m / 2] : 0.5 * (coord[m / 2 - 1] + coord[m / 2]);
  }
  return out;
}

Vector baseline_center_regressor(const RegressionInstance& pairs, double eps, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  const Eigen::Index n = pairs.n();
  const Eigen::Index d = pairs.d();
  const auto drop = std::min<Eigen::Index>(n - d, static_cast<Eigen::Index>(std::ceil(2.0 * eps * n)));
  std::vector<Eigen::Index> keep(static_cast<std::size_t>(n));
  std::iota(keep.begin(), keep.end(), Eigen::Index{0});
  Vector beta = Vector::Zero(d);
  for (int round = 0; round < rounds; ++round) {
    Matrix X(static_cast<Eigen::Index>(keep.size()), d);
    Vector y(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      X.row(static_cast<Eigen::Index>(r)) = pairs.xs.row(keep[r]);
      y[static_cast<Eigen::Index>(r)] = pairs.ys[keep[r]];
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < d) throw NumericalError(ErrorKind::rank_deficient, "design matrix has rank below d");
    beta = qr.solve(y);
    if (drop <= 0 || round + 1 == rounds) break;
    const Vector resid = (pairs.ys - pairs.xs * beta).cwiseAbs();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return resid[a] < resid[b]; });
    keep.assign(order.begin(), order.end() - drop);
    std::sort(keep.begin(), keep.end());
  }
  return beta;
}

RegressionInstance recenter(const RegressionInstance& pairs, const Vector& beta0) {
  RegressionInstance out = pairs;
  out.ys = pairs.ys - pairs.xs * beta0;
  if (out.beta) *out.beta = *pairs.beta - beta0;
  return out;
}

Vector sample_mean(const Dataset& data) { return data.points().colwise().mean().transpose(); }

Vector single_direction_mean(const Dataset& data, double eps, const AlgorithmParams& params, Rng& rng,
                             FilterOutcome* outcome) {
  AlgorithmParams local = params;
  local.eps = eps;
  const ResolvedParams rp = resolve(local, data.n(), data.d());
  FilterOutcome warm = warm_start(data, eps, rp, rng);
  const ExecOptions exec{rp.chunk_rows, configured_threads()};
  Vector mu = weighted_mean(data, warm.w_after, exec);
  if (outcome) *outcome = std::move(warm);
  return mu;
}

}  // namespace huberfilt
