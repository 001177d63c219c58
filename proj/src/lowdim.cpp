#include "huberfilt/lowdim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace huberfilt {

namespace {

double full_lower_median(std::vector<double>& values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

// Exact lower median. Large inputs first bracket the median between two
// quantiles of a strided subsample, then select inside the bracket only; the
// full selection is the fallback when the bracket misses the target rank.
double lower_median(std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 4096) return full_lower_median(values);
  const std::size_t stride = n / 1024;
  // Per-thread scratch: buffers this size would otherwise be mapped and
  // unmapped on every call, which costs more than the selection itself.
  thread_local std::vector<double> pilot, window;
  pilot.clear();
  for (std::size_t i = 0; i < n; i += stride) pilot.push_back(values[i]);
  const std::size_t m = pilot.size();
  const auto half_width = static_cast<std::size_t>(2.0 * std::sqrt(static_cast<double>(m)));
  const std::size_t lo_rank = m / 2 > half_width ? m / 2 - half_width : 0;
  const std::size_t hi_rank = std::min(m - 1, m / 2 + half_width);
  std::nth_element(pilot.begin(), pilot.begin() + static_cast<std::ptrdiff_t>(lo_rank), pilot.end());
  const double lo = pilot[lo_rank];
  std::nth_element(pilot.begin(), pilot.begin() + static_cast<std::ptrdiff_t>(hi_rank), pilot.end());
  const double hi = pilot[hi_rank];

  // Branch-free partition pass: the comparisons are coin flips near the
  // median, so branches would mispredict about half the time.
  window.resize(n);
  std::size_t below = 0, kept = 0;
  for (const double v : values) {
    below += static_cast<std::size_t>(v < lo);
    window[kept] = v;
    kept += static_cast<std::size_t>((v >= lo) & (v <= hi));
  }
  const std::size_t target = (n - 1) / 2;
  if (target < below || target >= below + kept) return full_lower_median(values);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(target - below);
  std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(kept));
  return *mid;
}

constexpr double kCoverCap = 1e7;

// out = X·u for a tall, narrow row-major X. Accumulating one column at a time
// keeps the inner loop long and vectorizable; a row-major GEMV would run
// length-k' dot products instead.
void project_narrow(const RowMatrix& X, const Vector& u, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(X.rows()));
  Eigen::Map<Vector> dst(out.data(), X.rows());
  dst = X.col(0) * u[0];
  for (Eigen::Index j = 1; j < X.cols(); ++j) dst += X.col(j) * u[j];
}

}  // namespace

Vector coordinate_median(const Dataset& data) {
  Vector out(data.d());
  std::vector<double> col(static_cast<std::size_t>(data.n()));
  for (Eigen::Index j = 0; j < data.d(); ++j) {
    for (Eigen::Index i = 0; i < data.n(); ++i) col[static_cast<std::size_t>(i)] = data.points()(i, j);
    out[j] = lower_median(col);
  }
  return out;
}

NaiveCenter naive_center(const Dataset& data, double eps, double kappa_R) {
  NaiveCenter nc;
  nc.center = coordinate_median(data);
  nc.radius = kappa_R * std::sqrt(static_cast<double>(data.d()) * std::log(1.0 / eps));
  const Vector dist = (data.points().rowwise() - nc.center.transpose()).rowwise().norm();
  nc.w0 = (dist.array() <= 2.0 * nc.radius).cast<double>();
  return nc;
}

TopkResult topk_filter_loop(const Dataset& data, const WeightVector& w0, double eps, double r,
                            const ResolvedParams& params) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0, 1)");
  const ExecOptions exec{params.chunk_rows, configured_threads()};
  const Eigen::Index dp = data.d();
  const int k = static_cast<int>(std::min<Eigen::Index>(
      dp, std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(r * std::log(1.0 / eps))))));
  const double stop_level = 1.0 + params.c_stop * eps / r;
  const double score_cut = params.lowdim_score_mult / r;
  const double T = params.kappa_T * eps / std::log(1.0 / eps);
  const long cap = static_cast<long>(
      std::ceil(params.kappa_iter * static_cast<double>(dp) * std::log(std::max(2.0, static_cast<double>(dp) / eps))));

  TopkResult res;
  res.w = w0;
  res.cap_reached = true;
  for (long it = 0; it < cap; ++it) {
    res.mu_w = weighted_mean(data, res.w, exec);
    const Matrix cov = weighted_covariance(data, res.w, res.mu_w, exec);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    // Eigen sorts ascending; the top k are the last k columns.
    const Matrix top = eig.eigenvectors().rightCols(k).rowwise().reverse();
    const double avg_top = eig.eigenvalues().tail(k).sum() / k;
    res.top_dirs = SubspaceBasis::from_columns(top);
    res.iterations = static_cast<int>(it + 1);
    if (avg_top < stop_level) {
      res.cap_reached = false;
      return res;
    }
    const Matrix U = top.transpose() / std::sqrt(static_cast<double>(k));
    const Vector g = quadratic_scores(data, U, res.mu_w, exec);
    const Vector tau = (g.array() > score_cut).select(g, 0.0);
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < tau.size(); ++i)
      if (res.w[i] > 0.0) rmax = std::max(rmax, tau[i]);
    if (rmax <= 0.0) {
      res.cap_reached = false;
      res.stalled = true;
      return res;
    }
    FilterOutcome f = downweight(data, res.w, tau, rmax, T, params.beta_filter);
    res.inlier_mass_removed += f.mass_removed_inlier.value_or(0.0);
    res.outlier_mass_removed += f.mass_removed_outlier.value_or(0.0);
    const bool progressed = f.steps_taken > 0;
    res.w = f.w_after;
    f.w_after.resize(0);  // keep the call log light
    res.calls.push_back(std::move(f));
    if (!progressed) {
      res.cap_reached = false;
      res.stalled = true;
      res.mu_w = weighted_mean(data, res.w, exec);
      return res;
    }
  }
  res.mu_w = weighted_mean(data, res.w, exec);
  return res;
}

CoverSet sphere_cover(int k_prime, double eta, Rng& rng) {
  if (k_prime < 1) throw std::invalid_argument("cover dimension must be at least 1");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  CoverSet cover;
  cover.eta = eta;
  if (k_prime == 1) {
    cover.directions = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
    return cover;
  }
  const double m0 = std::pow(1.0 + 2.0 / eta, k_prime);
  const double m = std::ceil(4.0 * m0 * std::log(m0 / 0.01));
  if (m > kCoverCap) throw NumericalError(ErrorKind::cover_too_large, "cover needs " + std::to_string(m) + " directions");
  const auto count = static_cast<std::size_t>(m);
  cover.directions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector v = rng.normal_vector(k_prime);
    const double nrm = v.norm();
    if (nrm > 0.0) cover.directions.push_back(v / nrm);
  }
  // Exact duplicates carry no extra constraint.
  std::sort(cover.directions.begin(), cover.directions.end(), [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  cover.directions.erase(std::unique(cover.directions.begin(), cover.directions.end(),
                                     [](const Vector& a, const Vector& b) { return a == b; }),
                         cover.directions.end());
  return cover;
}

double directional_median(const Dataset& data, const Vector& u) {
  thread_local std::vector<double> vals;
  project_narrow(data.points(), u, vals);
  return lower_median(vals);
}

Vector feasible_point(const std::vector<SlabConstraint>& constraints, double tol, long max_iters, const Vector* start) {
  if (constraints.empty()) throw std::invalid_argument("no constraints");
  const Eigen::Index dim = constraints.front().u.size();
  for (const auto& c : constraints)
    if (!(c.slack > 0.0)) throw std::invalid_argument("slab slack must be positive");
  Vector x = start ? *start : Vector::Zero(dim);
  const auto satisfied = [&](const Vector& p) {
    for (const auto& c : constraints)
      if (std::abs(c.u.dot(p) - c.center) > c.slack + tol) return false;
    return true;
  };
  for (long sweep = 0; sweep < max_iters; ++sweep) {
    if (satisfied(x)) return x;
    const Vector before = x;
    for (const auto& c : constraints) {
      const double unorm2 = c.u.squaredNorm();
      const double v = c.u.dot(x) - c.center;
      if (v > c.slack) x -= ((v - c.slack) / unorm2) * c.u;
      else if (v < -c.slack) x -= ((v + c.slack) / unorm2) * c.u;
    }
    // Inconsistent slabs drive cyclic projections to a fixed cycle: the
    // sweep-to-sweep displacement vanishes while constraints stay violated.
    if ((x - before).norm() <= 1e-15 * std::max(1.0, x.norm()) && !satisfied(x)) break;
  }
  if (satisfied(x)) return x;
  throw NumericalError(ErrorKind::infeasible, "slab system has no point within tolerance");
}

Vector brute_force_mean(const Dataset& coords, double eps, double gamma, Rng& rng, std::size_t* cover_size) {
  (void)eps;
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const CoverSet cover = sphere_cover(static_cast<int>(coords.d()), 0.25, rng);
  if (cover_size) *cover_size = cover.directions.size();
  std::vector<SlabConstraint> slabs;
  slabs.reserve(cover.directions.size());
  // One projection per direction into a reused buffer: with k' columns a
  // blocked product is memory-bound, while a single n-vector stays in cache.
  std::vector<double> vals;
  for (const Vector& u : cover.directions) {
    project_narrow(coords.points(), u, vals);
    slabs.push_back({u, lower_median(vals), 2.0 * gamma});
  }
  const Vector start = coordinate_median(coords);
  return feasible_point(slabs, 1e-9, 100000, &start);
}

LowdimResult run_lowdim(const Dataset& coords, double eps, double r, const ResolvedParams& params, Rng& rng) {
  const Eigen::Index n = coords.n();
  if (n < 2) throw std::invalid_argument("low-dimensional stage needs at least two points");
  // Seeded 50/50 split into the filtering half and the brute-force half.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng split_rng = rng.split(1);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<std::size_t>(split_rng.below(i + 1))]);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<Eigen::Index> first(order.begin(), order.begin() + half);
  std::vector<Eigen::Index> second(order.begin() + half, order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  const Dataset s1 = coords.subset(first);
  const Dataset s2 = coords.subset(second);

  LowdimResult res;
  const NaiveCenter nc = naive_center(s1, eps, params.kappa_R);
  WeightVector w0 = nc.w0;
  if (!(w0.sum() > 0.0)) w0.setOnes();
  res.topk = topk_filter_loop(s1, w0, eps, r, params);
  res.k = static_cast<int>(res.topk.top_dirs.size());
  const Vector mu1 = res.topk.top_dirs.project_complement(res.topk.mu_w);

  const Dataset s2_coords = project_points(s2, res.topk.top_dirs, ProjectionMode::span_coordinates);
  res.gamma_used = params.kappa_gamma * eps;
  Rng cover_rng = rng.split(2);
  Vector mu2;
  try {
    Rng attempt = cover_rng;
    mu2 = brute_force_mean(s2_coords, eps, res.gamma_used, attempt, &res.cover_size);
  } catch (const NumericalError& e) {
    if (e.kind() != ErrorKind::infeasible) throw;
    res.gamma_used *= 2.0;
    res.gamma_doubled = true;
    Rng attempt = cover_rng;
    mu2 = brute_force_mean(s2_coords, eps, res.gamma_used, attempt, &res.cover_size);
  }
  res.mu = mu1 + res.topk.top_dirs.lift(mu2);
  return res;
}

}  // namespace huberfilt
