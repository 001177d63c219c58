#include "huberfilt/harness.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "huberfilt/report.hpp"

namespace huberfilt {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + text + "'");
  }
}

long to_long(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw std::invalid_argument("config key '" + key + "' expects on/off, got '" + text + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

// FNV-1a: a fixed, platform-independent hash for stream ids.
std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const char* to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::robust_mean: return "robust_mean";
    case EstimatorKind::sample_mean: return "sample_mean";
    case EstimatorKind::coord_median: return "coord_median";
    case EstimatorKind::single_direction: return "single_direction";
  }
  return "robust_mean";
}

EstimatorKind parse_estimator(const std::string& text) {
  for (auto e : {EstimatorKind::robust_mean, EstimatorKind::sample_mean, EstimatorKind::coord_median,
                 EstimatorKind::single_direction})
    if (text == to_string(e)) return e;
  throw std::invalid_argument("unknown estimator '" + text + "'");
}

BenchAdversary BenchAdversary::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(trim(item));
  if (parts.empty() || parts.size() > 3) throw std::invalid_argument("malformed adversary '" + text + "'");
  BenchAdversary a;
  a.kind = parse_adversary_kind(parts[0]);
  if (parts.size() > 1) {
    const std::string& m = parts[1];
    const auto pos = m.find("sqrtlog");
    if (pos == std::string::npos) {
      a.factor = to_double("adversaries", m);
    } else {
      a.sqrt_log = true;
      std::string head = m.substr(0, pos);
      if (!head.empty() && head.back() == '*') head.pop_back();
      a.factor = head.empty() ? 1.0 : to_double("adversaries", head);
      if (pos + 7 != m.size()) throw std::invalid_argument("malformed magnitude '" + m + "'");
    }
  }
  if (parts.size() > 2) a.spread_count = static_cast<int>(to_long("adversaries", parts[2]));
  if (a.factor < 0.0 || a.spread_count < 1) throw std::invalid_argument("malformed adversary '" + text + "'");
  return a;
}

std::string BenchAdversary::label() const {
  std::ostringstream os;
  os << huberfilt::to_string(kind);
  if (kind == AdversaryKind::none) return os.str();
  os << ':';
  if (sqrt_log) {
    if (factor != 1.0) os << format_double(factor) << '*';
    os << "sqrtlog";
  } else {
    os << format_double(factor);
  }
  if (kind == AdversaryKind::subspace_spread) os << ':' << spread_count;
  return os.str();
}

ContaminationSpec BenchAdversary::resolve(double eps, std::uint64_t direction_seed) const {
  ContaminationSpec s;
  s.kind = kind;
  s.magnitude = sqrt_log ? factor * std::sqrt(std::log(1.0 / eps)) : factor;
  s.spread_count = spread_count;
  s.direction_seed = direction_seed;
  return s;
}

void BenchConfig::validate() const {
  if (dims.empty() || epsilons.empty() || adversaries.empty() || seeds.empty() || estimators.empty())
    throw std::invalid_argument("bench config needs non-empty dims, epsilons, adversaries, seeds and estimators");
  for (const int d : dims)
    if (d < 1) throw std::invalid_argument("dims must be positive");
  for (const double e : epsilons)
    if (!(e > 0.0 && e < 0.25)) throw std::invalid_argument("epsilons must lie in (0, 1/4)");
  if (!(n_rule > 0.0) || n_cap < 2) throw std::invalid_argument("n_rule must be positive and n_cap >= 2");
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
}

void BenchConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "dims") {
    dims.clear();
    for (const auto& v : split_list(value)) dims.push_back(static_cast<int>(to_long(key, v)));
  } else if (key == "epsilons") {
    epsilons.clear();
    for (const auto& v : split_list(value)) epsilons.push_back(to_double(key, v));
  } else if (key == "adversaries") {
    adversaries.clear();
    for (const auto& v : split_list(value)) adversaries.push_back(BenchAdversary::parse(v));
  } else if (key == "seeds") {
    seeds.clear();
    for (const auto& v : split_list(value)) {
      const auto dash = v.find('-', 1);
      if (dash == std::string::npos) {
        seeds.push_back(static_cast<std::uint64_t>(to_long(key, v)));
      } else {
        const long lo = to_long(key, v.substr(0, dash));
        const long hi = to_long(key, v.substr(dash + 1));
        if (lo > hi || lo < 0) throw std::invalid_argument("bad seed range '" + v + "'");
        for (long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
  } else if (key == "estimators") {
    estimators.clear();
    for (const auto& v : split_list(value)) estimators.push_back(parse_estimator(v));
  } else if (key == "n_rule") {
    n_rule = to_double(key, value);
  } else if (key == "n_cap") {
    n_cap = to_long(key, value);
  } else if (key == "c") {
    c = to_double(key, value);
  } else if (key == "out") {
    out_path = value;
  } else if (key == "format") {
    format = value;
  } else if (key == "timing") {
    timing = to_bool(key, value);
  } else if (key == "audits") {
    audits = to_bool(key, value);
  } else if (key.rfind("param.", 0) == 0) {
    params.set(key.substr(6), value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

BenchConfig BenchConfig::parse(std::istream& in) {
  BenchConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

std::string BenchConfig::help() {
  return "Bench config: flat `key = value` lines, '#' comments.\n"
         "  dims        = 32,128                    (integers)\n"
         "  epsilons    = 0.05,0.1                  (reals in (0, 1/4))\n"
         "  adversaries = point_mass:3,cluster:sqrtlog,subspace_spread:2*sqrtlog:8\n"
         "                kind[:magnitude[:spread_count]]; magnitude is a number, sqrtlog\n"
         "                (= sqrt(ln(1/eps))) or <factor>*sqrtlog\n"
         "  seeds       = 0-9                       (list and/or a-b ranges)\n"
         "  estimators  = robust_mean,sample_mean,coord_median,single_direction\n"
         "  n_rule      = 40                        (n = ceil(n_rule*d/eps^2) ...)\n"
         "  n_cap       = 400000                    (... capped at n_cap)\n"
         "  c           = 0.5                       (error/runtime knob)\n"
         "  out         = results.csv\n"
         "  format      = csv | json\n"
         "  timing      = off | on                  (off, the default, writes wall_ms = 0)\n"
         "  audits      = on | off                  (certificate audit on robust_mean rows)\n"
         "  param.<name> = value                    (any algorithm parameter)\n";
}

const std::vector<std::string>& bench_columns() {
  static const std::vector<std::string> cols = {"estimator", "d",        "n",      "eps",
                                                "adversary", "seed",     "l2_error", "wall_ms",
                                                "dim_V",     "inlier_mass_removed", "outlier_mass_removed", "error"};
  return cols;
}

std::vector<BenchRow> bench_suite(const BenchConfig& config) {
  config.validate();
  std::vector<BenchRow> rows;
  for (const int d : config.dims) {
    for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
      const double eps = config.epsilons[ei];
      for (std::size_t ai = 0; ai < config.adversaries.size(); ++ai) {
        const BenchAdversary& adv = config.adversaries[ai];
        for (const std::uint64_t seed : config.seeds) {
          const long n = std::min<long>(config.n_cap, static_cast<long>(std::ceil(config.n_rule * d / (eps * eps))));
          // Streams depend only on (seed, d, eps, adversary, estimator), so a
          // cell reproduces regardless of what else the config contains.
          const std::string cell_key = std::to_string(d) + "|" + format_double(eps) + "|" + adv.label();
          const std::uint64_t cell_id = fnv1a(cell_key);
          const Rng cell(seed);
          const Rng cell_rng = cell.split(cell_id);
          Rng data_rng = cell_rng.split(0);
          Rng mu_rng = cell_rng.split(1);
          Vector mu(d);
          for (int j = 0; j < d; ++j) mu[j] = mu_rng.uniform(-1.0, 1.0);

          std::optional<Dataset> data;
          std::string gen_error;
          try {
            data = gen_mean_instance(d, n, eps, mu, adv.resolve(eps, seed), data_rng);
          } catch (const std::exception& e) {
            gen_error = e.what();
          }
          for (const EstimatorKind est : config.estimators) {
            BenchRow row;
            row.estimator = est;
            row.d = d;
            row.n = n;
            row.eps = eps;
            row.adversary = adv.label();
            row.seed = seed;
            if (!data) {
              row.error = gen_error;
              rows.push_back(std::move(row));
              continue;
            }
            Rng est_rng = cell_rng.split(100 + static_cast<std::uint64_t>(est));
            const auto start = std::chrono::steady_clock::now();
            try {
              Vector estimate;
              switch (est) {
                case EstimatorKind::robust_mean: {
                  MeanReport rep = robust_mean(*data, eps, config.c, config.params, est_rng);
                  estimate = rep.mu_hat;
                  row.dim_V = rep.dim_V;
                  row.inlier_mass_removed = rep.inlier_mass_removed;
                  row.outlier_mass_removed = rep.outlier_mass_removed;
                  row.filter_calls = rep.warm.calls;
                  for (const auto& call : filter_calls(rep.stage1.trace)) row.filter_calls.push_back(call);
                  row.wall_ms = elapsed_ms(start);
                  if (config.audits)
                    row.certificate = audit_certificate(*data, rep.stage1.w, rep.stage1.basis, mu, eps);
                  rep.stage1.w.resize(0);
                  row.report = std::move(rep);
                  break;
                }
                case EstimatorKind::sample_mean:
                  estimate = sample_mean(*data);
                  break;
                case EstimatorKind::coord_median:
                  estimate = coordinate_median(*data);
                  break;
                case EstimatorKind::single_direction: {
                  FilterOutcome warm;
                  estimate = single_direction_mean(*data, eps, config.params, est_rng, &warm);
                  row.dim_V = 0;
                  row.inlier_mass_removed = warm.mass_removed_inlier;
                  row.outlier_mass_removed = warm.mass_removed_outlier;
                  row.filter_calls = warm.calls;
                  break;
                }
              }
              if (est != EstimatorKind::robust_mean) row.wall_ms = elapsed_ms(start);
              row.l2_error = (estimate - mu).norm();
            } catch (const std::exception& e) {
              row.wall_ms = elapsed_ms(start);
              row.l2_error = std::nan("");
              row.error = e.what();
            }
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool timing) {
  const auto& cols = bench_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  const auto opt = [](const auto& v) { return v ? format_double(static_cast<double>(*v)) : std::string(); };
  for (const auto& r : rows) {
    out << to_string(r.estimator) << ',' << r.d << ',' << r.n << ',' << format_double(r.eps) << ','
        << csv_field(r.adversary) << ',' << r.seed << ',' << format_double(r.l2_error) << ','
        << format_double(timing ? r.wall_ms : 0.0) << ',' << (r.dim_V ? std::to_string(*r.dim_V) : std::string())
        << ',' << opt(r.inlier_mass_removed) << ',' << opt(r.outlier_mass_removed) << ',' << csv_field(r.error)
        << '\n';
  }
}

void write_bench_json(std::ostream& out, const std::vector<BenchRow>& rows, bool timing) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j{{"estimator", to_string(r.estimator)},
           {"d", r.d},
           {"n", r.n},
           {"eps", r.eps},
           {"adversary", r.adversary},
           {"seed", r.seed},
           {"l2_error", std::isfinite(r.l2_error) ? Json(r.l2_error) : Json(nullptr)},
           {"wall_ms", timing ? r.wall_ms : 0.0},
           {"dim_V", r.dim_V ? Json(*r.dim_V) : Json(nullptr)},
           {"inlier_mass_removed", r.inlier_mass_removed ? Json(*r.inlier_mass_removed) : Json(nullptr)},
           {"outlier_mass_removed", r.outlier_mass_removed ? Json(*r.outlier_mass_removed) : Json(nullptr)},
           {"error", r.error}};
    if (r.certificate) {
      j["certificate"] = Json{{"pass", r.certificate->pass},
                              {"error", r.certificate->error},
                              {"lambda", r.certificate->lambda},
                              {"bound", r.certificate->bound}};
    }
    if (!r.filter_calls.empty()) {
      Json calls = Json::array();
      for (const auto& c : r.filter_calls) calls.push_back(Json{{"inlier", c.inlier}, {"outlier", c.outlier}});
      j["filter_calls"] = std::move(calls);
    }
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

}  // namespace huberfilt
