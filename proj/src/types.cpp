#include "huberfilt/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace huberfilt {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::degenerate_weights: return "degenerate weights";
    case ErrorKind::score_exceeds_cap: return "score exceeds cap";
    case ErrorKind::full_space: return "full space";
    case ErrorKind::degenerate_sketch: return "degenerate sketch";
    case ErrorKind::cover_too_large: return "cover too large";
    case ErrorKind::infeasible: return "infeasible within tolerance";
    case ErrorKind::interval_starved: return "interval starved";
    case ErrorKind::rank_deficient: return "rank-deficient design";
    case ErrorKind::all_trimmed: return "all values trimmed";
  }
  return "numerical error";
}

Dataset::Dataset(RowMatrix points, std::vector<std::uint8_t> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.rows() < 1 || points_.cols() < 1) throw std::invalid_argument("dataset needs n >= 1 and d >= 1");
  if (!points_.allFinite()) throw std::invalid_argument("dataset contains non-finite entries");
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != points_.rows())
    throw std::invalid_argument("label count does not match point count");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), d());
  std::vector<std::uint8_t> lab;
  if (has_labels()) lab.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = points_.row(rows[r]);
    if (has_labels()) lab.push_back(labels_[static_cast<std::size_t>(rows[r])]);
  }
  return Dataset(std::move(out), std::move(lab));
}

void validate_weights(const WeightVector& w, Eigen::Index n) {
  if (w.size() != n) throw std::invalid_argument("weight vector length does not match dataset");
  if (!w.allFinite() || (w.array() < 0.0).any() || (w.array() > 1.0).any())
    throw std::invalid_argument("weights must lie in [0, 1]");
  if (!(w.sum() > 0.0)) throw NumericalError(ErrorKind::degenerate_weights, "sum of weights is zero");
}

SubspaceBasis SubspaceBasis::from_columns(const Matrix& columns) {
  SubspaceBasis b;
  b.vectors_ = columns;
  const auto [cross, norm] = b.orthonormality_defect();
  if (cross > 1e-9 || norm > 1e-12 || columns.cols() > columns.rows())
    throw std::invalid_argument("basis vectors are not orthonormal");
  return b;
}

Matrix SubspaceBasis::project_complement(const Matrix& z) const {
  if (empty()) return z;
  return z - vectors_ * (vectors_.transpose() * z);
}

Vector SubspaceBasis::project_complement(const Vector& z) const {
  if (empty()) return z;
  return z - vectors_ * (vectors_.transpose() * z);
}

Vector SubspaceBasis::project_span(const Vector& z) const {
  if (empty()) return Vector::Zero(z.size());
  return vectors_ * (vectors_.transpose() * z);
}

Vector SubspaceBasis::coordinates(const Vector& z) const { return vectors_.transpose() * z; }

Vector SubspaceBasis::lift(const Vector& coords) const {
  if (empty()) return Vector::Zero(ambient_dim());
  return vectors_ * coords;
}

void SubspaceBasis::append_unchecked(const Vector& unit) {
  vectors_.conservativeResize(Eigen::NoChange, vectors_.cols() + 1);
  vectors_.col(vectors_.cols() - 1) = unit;
}

std::pair<double, double> SubspaceBasis::orthonormality_defect() const {
  if (empty()) return {0.0, 0.0};
  const Matrix gram = vectors_.transpose() * vectors_;
  double cross = 0.0;
  double norm = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    norm = std::max(norm, std::abs(std::sqrt(gram(i, i)) - 1.0));
    for (Eigen::Index j = 0; j < gram.cols(); ++j)
      if (i != j) cross = std::max(cross, std::abs(gram(i, j)));
  }
  return {cross, norm};
}

namespace {

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("parameter '" + key + "' expects a real number, got '" + text + "'");
  }
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument("parameter '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw std::invalid_argument("parameter '" + key + "' expects a boolean, got '" + text + "'");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> AlgorithmParams::keys() {
  return {"eps",           "c",           "k_sketch",      "t_max",        "p",
          "p_prime",       "qt_pairs",    "c1",            "c_stop",       "kappa_T",
          "beta_filter",   "hutchinson_probes", "kappa_trim", "kappa_pre",  "power_trials",
          "qt_batch",      "qt_confidence", "kappa_R",     "kappa_gamma",  "kappa_iter",
          "kappa_2",       "kappa_min",   "lowdim_score_mult", "inner_eps_cap", "trim_consistency",
          "track_potential", "chunk_rows", "seed"};
}

void AlgorithmParams::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  auto as_int = [&] { return static_cast<int>(parse_long(key, value)); };
  if (key == "eps") eps = parse_double(key, value);
  else if (key == "c") c = parse_double(key, value);
  else if (key == "k_sketch") k_sketch = as_int();
  else if (key == "t_max") t_max = as_int();
  else if (key == "p") p = as_int();
  else if (key == "p_prime") p_prime = as_int();
  else if (key == "qt_pairs") qt_pairs = parse_long(key, value);
  else if (key == "c1") c1 = parse_double(key, value);
  else if (key == "c_stop") c_stop = parse_double(key, value);
  else if (key == "kappa_T") kappa_T = parse_double(key, value);
  else if (key == "beta_filter") beta_filter = parse_double(key, value);
  else if (key == "hutchinson_probes") hutchinson_probes = as_int();
  else if (key == "kappa_trim") kappa_trim = parse_double(key, value);
  else if (key == "kappa_pre") kappa_pre = parse_double(key, value);
  else if (key == "power_trials") power_trials = as_int();
  else if (key == "qt_batch") qt_batch = as_int();
  else if (key == "qt_confidence") qt_confidence = parse_double(key, value);
  else if (key == "kappa_R") kappa_R = parse_double(key, value);
  else if (key == "kappa_gamma") kappa_gamma = parse_double(key, value);
  else if (key == "kappa_iter") kappa_iter = parse_double(key, value);
  else if (key == "kappa_2") kappa_2 = parse_double(key, value);
  else if (key == "kappa_min") kappa_min = parse_double(key, value);
  else if (key == "lowdim_score_mult") lowdim_score_mult = parse_double(key, value);
  else if (key == "inner_eps_cap") inner_eps_cap = parse_double(key, value);
  else if (key == "trim_consistency") trim_consistency = parse_bool(key, value);
  else if (key == "track_potential") track_potential = parse_bool(key, value);
  else if (key == "chunk_rows") chunk_rows = as_int();
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
  else throw std::invalid_argument("unknown parameter '" + key + "'");
}

void AlgorithmParams::apply_overrides(const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + item + "'");
    set(item.substr(0, eq), item.substr(eq + 1));
  }
}

void AlgorithmParams::validate() const {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  if (k_sketch) positive("k_sketch", *k_sketch);
  if (t_max) positive("t_max", *t_max);
  if (p) positive("p", *p);
  if (p_prime) positive("p_prime", *p_prime);
  if (qt_pairs) positive("qt_pairs", static_cast<double>(*qt_pairs));
  if (beta_filter && !(*beta_filter > 1.0)) throw std::invalid_argument("beta_filter must exceed 1");
  positive("c1", c1);
  positive("c_stop", c_stop);
  positive("kappa_T", kappa_T);
  positive("hutchinson_probes", hutchinson_probes);
  positive("kappa_trim", kappa_trim);
  positive("kappa_pre", kappa_pre);
  positive("power_trials", power_trials);
  positive("qt_batch", qt_batch);
  positive("kappa_R", kappa_R);
  positive("kappa_gamma", kappa_gamma);
  positive("kappa_iter", kappa_iter);
  positive("kappa_2", kappa_2);
  positive("kappa_min", kappa_min);
  positive("lowdim_score_mult", lowdim_score_mult);
  positive("chunk_rows", chunk_rows);
  if (!(qt_confidence > 0.0 && qt_confidence < 1.0)) throw std::invalid_argument("qt_confidence must lie in (0, 1)");
  if (!(inner_eps_cap > 0.0 && inner_eps_cap < 0.25)) throw std::invalid_argument("inner_eps_cap must lie in (0, 1/4)");
}

ResolvedParams resolve(const AlgorithmParams& in, Eigen::Index n, Eigen::Index d) {
  in.validate();
  ResolvedParams r;
  const double eps = in.eps;
  const double dd = static_cast<double>(d);
  const double ln_nd = std::log(static_cast<double>(n + d));
  r.eps = eps;
  r.c = in.c;
  r.k_sketch = in.k_sketch.value_or(
      static_cast<int>(std::min<double>(dd, std::max(8.0, std::ceil(4.0 * ln_nd * ln_nd)))));
  r.k_sketch = std::max(1, std::min<int>(r.k_sketch, static_cast<int>(d)));
  const double ln_t = std::log(std::max(dd / eps, 16.0));
  r.t_max = in.t_max.value_or(static_cast<int>(std::ceil(ln_t * ln_t)));
  r.p = in.p.value_or(std::max(2, static_cast<int>(std::ceil(std::log2(dd)))));
  const double ln_p = std::log(dd * r.t_max);
  r.p_prime = in.p_prime.value_or(std::max(2 * r.p, static_cast<int>(std::ceil(0.25 * ln_p * ln_p))));
  const double k4 = std::pow(static_cast<double>(r.k_sketch), 4.0);
  const double raw_pairs = std::ceil(10.0 * k4 * static_cast<double>(r.t_max) * r.t_max);
  r.qt_pairs_capped = !in.qt_pairs && raw_pairs > 1e6;
  r.qt_pairs = in.qt_pairs.value_or(static_cast<long>(std::min(raw_pairs, 1e6)));
  r.c1 = in.c1;
  r.c_stop = in.c_stop;
  r.kappa_T = in.kappa_T;
  r.beta_filter = in.beta_filter.value_or(std::log(1.0 / eps));
  r.hutchinson_probes = in.hutchinson_probes;
  r.kappa_trim = in.kappa_trim;
  r.kappa_pre = in.kappa_pre;
  r.power_trials = in.power_trials;
  r.qt_batch = in.qt_batch;
  r.qt_confidence = in.qt_confidence;
  r.kappa_R = in.kappa_R;
  r.kappa_gamma = in.kappa_gamma;
  r.kappa_iter = in.kappa_iter;
  r.kappa_2 = in.kappa_2;
  r.kappa_min = in.kappa_min;
  r.lowdim_score_mult = in.lowdim_score_mult;
  r.inner_eps_cap = in.inner_eps_cap;
  r.trim_consistency = in.trim_consistency;
  r.track_potential = in.track_potential;
  r.chunk_rows = in.chunk_rows;
  r.seed = in.seed;
  return r;
}

int configured_threads() {
  const char* env = std::getenv("HUBERFILT_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 256));
}

}  // namespace huberfilt
