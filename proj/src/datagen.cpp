#include "huberfilt/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace huberfilt {

const char* to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::none: return "none";
    case AdversaryKind::point_mass: return "point_mass";
    case AdversaryKind::cluster: return "cluster";
    case AdversaryKind::subspace_spread: return "subspace_spread";
    case AdversaryKind::mirrored_pair: return "mirrored_pair";
    case AdversaryKind::regression_hinge: return "regression_hinge";
    case AdversaryKind::regression_label_flip: return "regression_label_flip";
  }
  return "none";
}

AdversaryKind parse_adversary_kind(const std::string& text) {
  for (auto k : {AdversaryKind::none, AdversaryKind::point_mass, AdversaryKind::cluster,
                 AdversaryKind::subspace_spread, AdversaryKind::mirrored_pair, AdversaryKind::regression_hinge,
                 AdversaryKind::regression_label_flip})
    if (text == to_string(k)) return k;
  throw std::invalid_argument("unknown adversary '" + text + "'");
}

void ContaminationSpec::validate() const {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) throw std::invalid_argument("magnitude must be >= 0");
  if (spread_count < 1) throw std::invalid_argument("spread_count must be >= 1");
  if (!(band_lo <= band_hi)) throw std::invalid_argument("hinge band must satisfy band_lo <= band_hi");
}

ContaminationSpec ContaminationSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty() || parts.size() > 3) throw std::invalid_argument("malformed adversary '" + text + "'");
  ContaminationSpec spec;
  spec.kind = parse_adversary_kind(parts[0]);
  try {
    if (parts.size() > 1) spec.magnitude = std::stod(parts[1]);
    if (parts.size() > 2) spec.spread_count = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed adversary '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::string ContaminationSpec::to_string() const {
  std::ostringstream os;
  os << huberfilt::to_string(kind);
  if (kind != AdversaryKind::none) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", magnitude);
    os << ':' << buf;
    if (kind == AdversaryKind::subspace_spread) os << ':' << spread_count;
  }
  return os.str();
}

Matrix adversary_directions(Eigen::Index d, int count, std::uint64_t seed) {
  if (count > d) throw std::invalid_argument("more adversary directions than dimensions");
  Rng rng(seed);
  Rng stream = rng.split(0xD1EC7105ull);
  const Matrix G = stream.normal_matrix(d, count);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, count);
  // Fix signs so each direction has positive overlap with its Gaussian draw.
  for (int j = 0; j < count; ++j)
    if (Q.col(j).dot(G.col(j)) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

Dataset gen_mean_instance(Eigen::Index d, Eigen::Index n, double eps, const Vector& mu, const ContaminationSpec& spec,
                          Rng& rng) {
  if (!(eps >= 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in [0, 1/2)");
  if (n < 1 || d < 1) throw std::invalid_argument("need n >= 1 and d >= 1");
  if (mu.size() != d) throw std::invalid_argument("mu has the wrong dimension");
  spec.validate();
  if (spec.kind == AdversaryKind::regression_hinge || spec.kind == AdversaryKind::regression_label_flip)
    throw std::invalid_argument("regression adversaries do not apply to mean instances");
  const int dirs = spec.kind == AdversaryKind::subspace_spread ? spec.spread_count : 1;
  if (dirs > d) throw std::invalid_argument("spread_count exceeds the dimension");
  const Matrix V = spec.kind == AdversaryKind::none ? Matrix(d, 0) : adversary_directions(d, dirs, spec.direction_seed);

  RowMatrix X(n, d);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = X.row(i);
    const bool outlier = spec.kind != AdversaryKind::none && rng.bernoulli(eps);
    if (!outlier) {
      for (Eigen::Index j = 0; j < d; ++j) row[j] = mu[j] + rng.normal();
      continue;
    }
    labels[static_cast<std::size_t>(i)] = 0;
    switch (spec.kind) {
      case AdversaryKind::point_mass:
        row = (mu + spec.magnitude * V.col(0)).transpose();
        break;
      case AdversaryKind::cluster:
        for (Eigen::Index j = 0; j < d; ++j) row[j] = mu[j] + spec.magnitude * V(j, 0) + 0.1 * rng.normal();
        break;
      case AdversaryKind::subspace_spread: {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(dirs)));
        row = (mu + spec.magnitude * V.col(j)).transpose();
        break;
      }
      case AdversaryKind::mirrored_pair: {
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        row = (mu + sign * spec.magnitude * V.col(0)).transpose();
        break;
      }
      default:
        break;
    }
  }
  return Dataset(std::move(X), std::move(labels));
}

RegressionInstance gen_regression_instance(Eigen::Index d, Eigen::Index n, double eps, const Vector& beta,
                                           double sigma, const ContaminationSpec& spec, Rng& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(eps >= 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in [0, 1/2)");
  if (n < 1 || d < 1) throw std::invalid_argument("need n >= 1 and d >= 1");
  if (beta.size() != d || !beta.allFinite()) throw std::invalid_argument("beta has the wrong dimension");
  spec.validate();
  const bool regression_kind =
      spec.kind == AdversaryKind::regression_hinge || spec.kind == AdversaryKind::regression_label_flip;
  if (spec.kind != AdversaryKind::none && !regression_kind)
    throw std::invalid_argument("mean adversaries do not apply to regression instances");
  const double sigma_y = std::sqrt(sigma * sigma + beta.squaredNorm());
  const Matrix V = spec.kind == AdversaryKind::regression_hinge ? adversary_directions(d, 1, spec.direction_seed)
                                                                 : Matrix(d, 0);

  RegressionInstance inst;
  inst.xs.resize(n, d);
  inst.ys.resize(n);
  inst.labels.assign(static_cast<std::size_t>(n), 1);
  inst.beta = beta;
  inst.sigma = sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = inst.xs.row(i);
    const bool outlier = spec.kind != AdversaryKind::none && rng.bernoulli(eps);
    if (outlier) inst.labels[static_cast<std::size_t>(i)] = 0;
    if (outlier && spec.kind == AdversaryKind::regression_hinge) {
      row = (spec.magnitude * V.col(0)).transpose();
      inst.ys[i] = rng.uniform(spec.band_lo, spec.band_hi) * sigma_y;
      continue;
    }
    for (Eigen::Index j = 0; j < d; ++j) row[j] = rng.normal();
    const double signal = row.dot(beta.transpose());
    const double noise = sigma * rng.normal();
    inst.ys[i] = (outlier ? -signal : signal) + noise;
  }
  return inst;
}

Matrix ConditionalMoments::covariance() const {
  const Eigen::Index d = beta.size();
  return cov_identity * Matrix::Identity(d, d) + cov_beta_coeff * beta * beta.transpose();
}

namespace {

// Standard-normal truncated moments on [lo, hi] by adaptive Gauss-Kronrod
// quadrature: returns (mass, mean, variance).
std::tuple<double, double, double> truncated_std_normal(double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  const double tol = 1e-14;
  const double m0 = gauss_kronrod<double, 61>::integrate(pdf, lo, hi, 20, tol);
  const double m1 = gauss_kronrod<double, 61>::integrate([&](double t) { return t * pdf(t); }, lo, hi, 20, tol);
  const double m2 =
      gauss_kronrod<double, 61>::integrate([&](double t) { return t * t * pdf(t); }, lo, hi, 20, tol);
  const double mean = m1 / m0;
  return {m0, mean, std::max(0.0, m2 / m0 - mean * mean)};
}

}  // namespace

ConditionalMoments conditional_moments(const Vector& beta, double sigma, const ConditioningRegion& where) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (!(where.half_length >= 0.0)) throw std::invalid_argument("interval half-length must be non-negative");
  ConditionalMoments out;
  out.sigma_y_sq = sigma * sigma + beta.squaredNorm();
  if (!(out.sigma_y_sq > 0.0)) throw std::invalid_argument("sigma_y^2 must be positive");
  const double sy = std::sqrt(out.sigma_y_sq);
  if (where.half_length == 0.0) {
    out.y_mean = where.a;
    out.y_var = 0.0;
    out.mass = 0.0;
  } else {
    const auto [mass, m, v] = truncated_std_normal((where.a - where.half_length) / sy, (where.a + where.half_length) / sy);
    out.mass = mass;
    out.y_mean = m * sy;
    out.y_var = v * out.sigma_y_sq;
  }
  // x | y ~ N((y/σ_y²)β, I − ββᵀ/σ_y²); mixing over y adds Var[y]·ββᵀ/σ_y⁴.
  out.beta = beta;
  out.mean = (out.y_mean / out.sigma_y_sq) * beta;
  out.cov_identity = 1.0;
  out.cov_beta_coeff = -1.0 / out.sigma_y_sq + out.y_var / (out.sigma_y_sq * out.sigma_y_sq);
  return out;
}

namespace {

void write_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data, bool with_labels) {
  for (Eigen::Index j = 0; j < data.d(); ++j) out << (j ? "," : "") << 'x' << j;
  if (with_labels && data.has_labels()) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) {
      if (j) out << ',';
      write_number(out, data.points()(i, j));
    }
    if (with_labels && data.has_labels()) out << ',' << (data.is_inlier(i) ? 1 : 0);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const RegressionInstance& inst, bool with_labels) {
  for (Eigen::Index j = 0; j < inst.d(); ++j) out << 'x' << j << ',';
  out << 'y';
  if (with_labels && !inst.labels.empty()) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < inst.n(); ++i) {
    for (Eigen::Index j = 0; j < inst.d(); ++j) {
      write_number(out, inst.xs(i, j));
      out << ',';
    }
    write_number(out, inst.ys[i]);
    if (with_labels && !inst.labels.empty()) out << ',' << static_cast<int>(inst.labels[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

Dataset read_csv(std::istream& in, bool trailing_labels) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto head = line.find_first_not_of(" \t");
    if (first && head != std::string::npos && std::isalpha(static_cast<unsigned char>(line[head]))) {
      first = false;
      continue;  // header row
    }
    first = false;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric CSV cell '" + cell + "'");
      }
    }
    if (!rows.empty() && vals.size() != rows.front().size()) throw std::invalid_argument("ragged CSV input");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument("CSV input has no rows");
  const auto cols = static_cast<Eigen::Index>(rows.front().size()) - (trailing_labels ? 1 : 0);
  if (cols < 1) throw std::invalid_argument("CSV input has no coordinate columns");
  RowMatrix X(static_cast<Eigen::Index>(rows.size()), cols);
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    if (trailing_labels) labels.push_back(rows[i].back() != 0.0 ? 1 : 0);
  }
  return Dataset(std::move(X), std::move(labels));
}

}  // namespace huberfilt
