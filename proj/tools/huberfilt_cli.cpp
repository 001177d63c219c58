// Command-line front end: single estimations, benchmarks and audits.
//
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "huberfilt/audit.hpp"
#include "huberfilt/harness.hpp"
#include "huberfilt/report.hpp"

using namespace huberfilt;

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  std::string params;
  bool timing = false;
  bool trace = false;
};

// Writes to --out when given, stdout otherwise.
void emit(const GlobalOptions& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file '" + g.out + "'");
  f << text;
}

AlgorithmParams make_params(const GlobalOptions& g) {
  AlgorithmParams p;
  p.seed = g.seed;
  p.apply_overrides(g.params);
  return p;
}

std::string vector_csv(const Vector& v, const char* prefix) {
  std::ostringstream os;
  for (Eigen::Index j = 0; j < v.size(); ++j) os << (j ? "," : "") << prefix << j;
  os << '\n';
  for (Eigen::Index j = 0; j < v.size(); ++j) os << (j ? "," : "") << format_double(v[j]);
  os << '\n';
  return os.str();
}

struct MeanOptions {
  std::string input;
  bool labels = false;
  int d = 64;
  long n = 50000;
  double eps = 0.05;
  double c = 0.5;
  std::string adversary = "none";
  bool export_data = false;
};

int run_mean(const GlobalOptions& g, const MeanOptions& o) {
  AlgorithmParams params = make_params(g);
  Rng master(g.seed);
  std::optional<Dataset> data;
  std::optional<Vector> truth;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw std::invalid_argument("cannot open input file '" + o.input + "'");
    data = read_csv(in, o.labels);
  } else {
    ContaminationSpec spec = ContaminationSpec::parse(o.adversary);
    spec.direction_seed = g.seed;
    Rng gen = master.split(0);
    truth = Vector::Zero(o.d);
    data = gen_mean_instance(o.d, o.n, o.eps, *truth, spec, gen);
  }
  if (o.export_data) {
    std::ostringstream os;
    write_csv(os, *data, true);
    emit(g, os.str());
    return 0;
  }
  Rng est = master.split(1);
  const MeanReport rep = robust_mean(*data, o.eps, o.c, params, est);
  if (g.format == "csv") {
    emit(g, vector_csv(rep.mu_hat, "mu"));
    return 0;
  }
  Json j = to_json(rep, {g.timing, g.trace});
  if (truth) j["l2_error"] = (rep.mu_hat - *truth).norm();
  emit(g, j.dump(2) + "\n");
  return 0;
}

struct RegressOptions {
  std::string input;
  bool labels = false;
  int d = 32;
  long n = 200000;
  double eps = 0.05;
  double c = 0.5;
  double sigma = 1.0;
  double beta_norm = -1.0;
  std::string adversary = "none";
  bool baseline = false;
  int repeats = 1;
};

int run_regress(const GlobalOptions& g, const RegressOptions& o) {
  AlgorithmParams params = make_params(g);
  Rng master(g.seed);
  RegressionInstance inst;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw std::invalid_argument("cannot open input file '" + o.input + "'");
    // Columns: x_0..x_{d-1}, y[, label].
    const Dataset table = read_csv(in, o.labels);
    if (table.d() < 2) throw std::invalid_argument("regression input needs at least one feature and a label");
    inst.xs = table.points().leftCols(table.d() - 1);
    inst.ys = table.points().col(table.d() - 1);
    inst.labels = table.labels();
  } else {
    ContaminationSpec spec = ContaminationSpec::parse(o.adversary);
    spec.direction_seed = g.seed;
    const double norm = o.beta_norm >= 0.0 ? o.beta_norm : o.sigma * o.eps * std::log(1.0 / o.eps);
    Rng dir = master.split(2);
    Vector beta = dir.normal_vector(o.d);
    beta *= norm / beta.norm();
    Rng gen = master.split(0);
    inst = gen_regression_instance(o.d, o.n, o.eps, beta, o.sigma, spec, gen);
  }
  Vector beta0 = Vector::Zero(inst.d());
  if (o.baseline) beta0 = baseline_center_regressor(inst, o.eps);
  const RegressionInstance centered = o.baseline ? recenter(inst, beta0) : inst;
  Rng est = master.split(1);
  RegressionReport rep = o.repeats > 1 ? robust_regression_repeated(centered, o.eps, o.c, params, est, o.repeats)
                                       : robust_regression(centered, o.eps, o.c, params, est);
  rep.beta_hat += beta0;
  if (g.format == "csv") {
    emit(g, vector_csv(rep.beta_hat, "beta"));
    return 0;
  }
  Json j = to_json(rep, {g.timing, g.trace});
  if (o.baseline) j["baseline_beta"] = vector_json(beta0);
  if (inst.beta) j["l2_error"] = (rep.beta_hat - *inst.beta).norm();
  emit(g, j.dump(2) + "\n");
  return 0;
}

struct BenchOptions {
  std::string config;
  std::vector<std::string> overrides;
};

int run_bench(const GlobalOptions& g, const BenchOptions& o) {
  BenchConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::invalid_argument("cannot open config file '" + o.config + "'");
    cfg = BenchConfig::parse(in);
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.params.apply_overrides(g.params);
  if (g.timing) cfg.timing = true;
  GlobalOptions sink = g;
  if (!g.out.empty()) sink.out = g.out;
  else if (!cfg.out_path.empty()) sink.out = cfg.out_path;
  // --format only overrides the config when given explicitly (json is the
  // global default for single reports).
  const std::string format = g.format == "csv" || g.format == "json" ? g.format : cfg.format;
  cfg.validate();
  const std::vector<BenchRow> rows = bench_suite(cfg);
  std::ostringstream os;
  if (format == "json") write_bench_json(os, rows, cfg.timing);
  else write_bench_csv(os, rows, cfg.timing);
  emit(sink, os.str());
  return 0;
}

struct AuditOptions {
  std::string suite = "goodness";
  int d = 64;
  long n = 100000;
  double eps = 0.05;
  double alpha = 0.05;
  int k = 8;
  int trials = 20;
  std::string law = "gaussian";
  std::string adversary = "point_mass:3";
  double sigma = 1.0;
  double beta_norm = 0.1;
  double a = 0.5;
  double half_length = 1.0 / 3.0;
  long kept = 200000;
};

int run_audit(const GlobalOptions& g, const AuditOptions& o) {
  AlgorithmParams params = make_params(g);
  Rng master(g.seed);
  Json j;
  if (o.suite == "goodness") {
    Rng gen = master.split(0);
    RowMatrix X(o.n, o.d);
    for (Eigen::Index i = 0; i < o.n; ++i)
      for (Eigen::Index c = 0; c < o.d; ++c) {
        const double z = gen.normal();
        X(i, c) = o.law == "cauchy" ? z / gen.normal() : z;
      }
    if (o.law != "gaussian" && o.law != "cauchy") throw std::invalid_argument("law must be gaussian or cauchy");
    const Dataset data(std::move(X));
    Rng rng = master.split(1);
    const GoodnessAudit a = audit_goodness(data, Vector::Zero(o.d), o.eps, o.alpha, o.k, o.trials, rng);
    j = Json{{"suite", "goodness"},       {"law", o.law},
             {"pass", a.all_ok()},        {"median_ok", a.median_ok},
             {"mean_ok", a.mean_ok},      {"covariance_ok", a.covariance_ok},
             {"tail_ok", a.tail_ok},      {"worst_median_gap", a.worst_median_gap},
             {"median_bound", a.median_bound}, {"worst_mean_shift", a.worst_mean_shift},
             {"mean_bound", a.mean_bound}, {"worst_cov_shift", a.worst_cov_shift},
             {"cov_bound", a.cov_bound},  {"worst_tail_mass", a.worst_tail_mass},
             {"tail_bound", a.tail_bound}};
  } else if (o.suite == "conditional") {
    Rng dir = master.split(2);
    Vector beta = dir.normal_vector(o.d);
    beta *= o.beta_norm * o.sigma / beta.norm();
    const double sy = std::sqrt(o.sigma * o.sigma + beta.squaredNorm());
    Rng rng = master.split(1);
    const ConditionalAudit a = audit_conditional(beta, o.sigma, {o.a * sy, o.half_length * sy}, o.kept, rng);
    j = Json{{"suite", "conditional"},
             {"pass", a.pass},
             {"kept", a.kept},
             {"drawn", a.drawn},
             {"kept_fraction", a.kept_fraction},
             {"kept_fraction_floor", a.kept_fraction_floor},
             {"mean_gap_point", a.mean_gap_point},
             {"mean_bound_point", a.mean_bound_point},
             {"mean_gap_interval", a.mean_gap_interval},
             {"mean_stderr", a.mean_stderr},
             {"cov_dev", a.cov_dev},
             {"cov_bound", a.cov_bound},
             {"cov_gap_interval", a.cov_gap_interval},
             {"cov_stderr", a.cov_stderr}};
  } else if (o.suite == "certificate" || o.suite == "filter_mass") {
    ContaminationSpec spec = ContaminationSpec::parse(o.adversary);
    spec.direction_seed = g.seed;
    Rng gen = master.split(0);
    const Vector mu = Vector::Zero(o.d);
    const Dataset data = gen_mean_instance(o.d, o.n, o.eps, mu, spec, gen);
    Rng est = master.split(1);
    AlgorithmParams local = params;
    local.eps = o.eps;
    const ResolvedParams rp = resolve(local, data.n(), data.d());
    Rng warm_rng = est.split(0);
    const FilterOutcome warm = warm_start(data, o.eps, rp, warm_rng);
    Rng stage_rng = est.split(1);
    const Stage1Output s1 = run_stage1(data, o.eps, rp, stage_rng, &warm.w_after);
    if (o.suite == "certificate") {
      const CertificateAudit a = audit_certificate(data, s1.w, s1.basis, mu, o.eps);
      j = Json{{"suite", "certificate"}, {"pass", a.pass},     {"error", a.error}, {"lambda", a.lambda},
               {"bound", a.bound},       {"margin", a.margin}, {"dim_V", s1.basis.size()},
               {"stage1_stop", to_string(s1.stop)}};
    } else {
      std::vector<FilterCall> calls = warm.calls;
      for (const auto& c : filter_calls(s1.trace)) calls.push_back(c);
      const FilterMassAudit a = audit_filter_mass(calls, o.eps, static_cast<double>(o.n));
      j = Json{{"suite", "filter_mass"},   {"pass", a.pass_rate >= 0.9}, {"calls", a.calls},
               {"passes", a.passes},       {"pass_rate", a.pass_rate},   {"inlier_total", a.inlier_total},
               {"outlier_total", a.outlier_total}, {"violations", a.violations}};
    }
  } else {
    throw std::invalid_argument("unknown audit suite '" + o.suite + "'");
  }
  emit(g, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust mean and regression estimation under Huber contamination"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--params", g.params, "Algorithm parameter overrides, k=v,k=v (" +
                                           std::to_string(AlgorithmParams::keys().size()) + " keys)");
  app.add_flag("--timing", g.timing, "Record wall-clock times (otherwise written as 0)");
  app.add_flag("--trace", g.trace, "Include the stage-1 iteration trace in JSON reports");

  MeanOptions mo;
  auto* mean = app.add_subcommand("mean", "Estimate a mean from a CSV file or a generated instance");
  mean->add_option("--input", mo.input, "Headerless or headed numeric CSV, one point per row");
  mean->add_flag("--labels", mo.labels, "Input CSV has a trailing 0/1 inlier column");
  mean->add_option("--d", mo.d, "Dimension of a generated instance")->check(CLI::PositiveNumber);
  mean->add_option("--n", mo.n, "Sample size of a generated instance")->check(CLI::PositiveNumber);
  mean->add_option("--eps", mo.eps, "Contamination fraction");
  mean->add_option("--c", mo.c, "Error/runtime knob in (0,1)");
  mean->add_option("--adversary", mo.adversary, "kind[:magnitude[:spread_count]]");
  mean->add_flag("--export-data", mo.export_data, "Write the generated instance as CSV instead of estimating");

  RegressOptions ro;
  auto* regress = app.add_subcommand("regress", "Robust linear regression");
  regress->add_option("--input", ro.input, "CSV with columns x_0..x_{d-1}, y");
  regress->add_flag("--labels", ro.labels, "Input CSV has a trailing 0/1 inlier column");
  regress->add_option("--d", ro.d, "Dimension of a generated instance")->check(CLI::PositiveNumber);
  regress->add_option("--n", ro.n, "Sample size of a generated instance")->check(CLI::PositiveNumber);
  regress->add_option("--eps", ro.eps, "Contamination fraction");
  regress->add_option("--c", ro.c, "Error/runtime knob in (0,1)");
  regress->add_option("--sigma", ro.sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
  regress->add_option("--beta-norm", ro.beta_norm, "‖beta‖ (default sigma·eps·ln(1/eps))");
  regress->add_option("--adversary", ro.adversary, "none, regression_hinge[:m] or regression_label_flip");
  regress->add_flag("--baseline", ro.baseline, "Re-center by the trimmed least-squares baseline first");
  regress->add_option("--repeats", ro.repeats, "Independent repeats, coordinatewise median")->check(CLI::PositiveNumber);

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Run a benchmark grid");
  bench->footer(BenchConfig::help());
  bench->add_option("--config", bo.config, "Config file (key = value lines)");
  bench->add_option("--set", bo.overrides, "Config override key=value (repeatable)");

  AuditOptions ao;
  auto* audit = app.add_subcommand("audit", "Statistical audits");
  audit->add_option("--suite", ao.suite, "Audit to run")
      ->check(CLI::IsMember({"goodness", "conditional", "certificate", "filter_mass"}));
  audit->add_option("--d", ao.d, "Dimension")->check(CLI::PositiveNumber);
  audit->add_option("--n", ao.n, "Sample size")->check(CLI::PositiveNumber);
  audit->add_option("--eps", ao.eps, "Contamination fraction");
  audit->add_option("--alpha", ao.alpha, "Deletion fraction (goodness)");
  audit->add_option("--k", ao.k, "Sketch rows (goodness)");
  audit->add_option("--trials", ao.trials, "Random directions (goodness)");
  audit->add_option("--law", ao.law, "Inlier law for goodness: gaussian or cauchy");
  audit->add_option("--adversary", ao.adversary, "Adversary for certificate/filter_mass");
  audit->add_option("--sigma", ao.sigma, "Noise level (conditional)");
  audit->add_option("--beta-norm", ao.beta_norm, "‖beta‖/sigma (conditional)");
  audit->add_option("--a", ao.a, "Interval center in units of sigma_y (conditional)");
  audit->add_option("--half-length", ao.half_length, "Interval half-length in units of sigma_y (conditional)");
  audit->add_option("--kept", ao.kept, "Accepted samples (conditional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  bool explicit_format = app.count("--format") > 0;
  if (!explicit_format && *bench) g.format = "";
  try {
    if (*mean) return run_mean(g, mo);
    if (*regress) return run_regress(g, ro);
    if (*bench) return run_bench(g, bo);
    if (*audit) return run_audit(g, ao);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumericalError;
  }
  return kUsageError;
}
