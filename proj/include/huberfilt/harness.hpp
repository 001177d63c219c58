#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "huberfilt/audit.hpp"
#include "huberfilt/estimator.hpp"

namespace huberfilt {

enum class EstimatorKind { robust_mean, sample_mean, coord_median, single_direction };

const char* to_string(EstimatorKind e);
EstimatorKind parse_estimator(const std::string& text);

/// Adversary whose magnitude may scale with eps: magnitude = factor, or
/// factor·sqrt(ln(1/eps)) when `sqrt_log` is set. Text form
/// "kind[:magnitude[:spread_count]]" where magnitude is a number, "sqrtlog",
/// or "<factor>*sqrtlog".
struct BenchAdversary {
  AdversaryKind kind = AdversaryKind::none;
  double factor = 0.0;
  bool sqrt_log = false;
  int spread_count = 1;

  static BenchAdversary parse(const std::string& text);
  std::string label() const;
  ContaminationSpec resolve(double eps, std::uint64_t direction_seed) const;
};

struct BenchConfig {
  std::vector<int> dims;
  std::vector<double> epsilons;
  std::vector<BenchAdversary> adversaries;
  std::vector<std::uint64_t> seeds;
  std::vector<EstimatorKind> estimators;
  /// n = min(ceil(n_rule·d/eps²), n_cap).
  double n_rule = 40.0;
  long n_cap = 400000;
  double c = 0.5;
  AlgorithmParams params;
  std::string out_path;
  std::string format = "csv";
  /// When false (default), wall_ms is written as 0 so reruns are
  /// byte-identical.
  bool timing = false;
  /// Run the certificate audit on robust_mean rows.
  bool audits = true;

  void validate() const;
  /// Flat `key = value` text; '#' starts a comment. Keys: dims, epsilons,
  /// adversaries, seeds (list or a-b range), estimators, n_rule, n_cap, c,
  /// out, format, timing, audits, and param.<name> for AlgorithmParams.
  static BenchConfig parse(std::istream& in);
  void set(const std::string& key, const std::string& value);
  static std::string help();
};

struct BenchRow {
  EstimatorKind estimator = EstimatorKind::robust_mean;
  int d = 0;
  long n = 0;
  double eps = 0.0;
  std::string adversary;
  std::uint64_t seed = 0;
  double l2_error = 0.0;
  double wall_ms = 0.0;
  std::optional<int> dim_V;
  std::optional<double> inlier_mass_removed;
  std::optional<double> outlier_mass_removed;
  std::string error;

  /// robust_mean rows: the full report (per-point weights dropped) and the
  /// certificate audit on the final stage-1 state.
  std::optional<MeanReport> report;
  std::optional<CertificateAudit> certificate;
  /// Per-call inlier/outlier mass of every filter call (warm start rounds
  /// and stage-1 filter iterations).
  std::vector<FilterCall> filter_calls;
};

/// Runs every (d, eps, adversary, seed) cell; each instance is generated
/// once and shared by all estimators. Rows come out in deterministic order:
/// d, eps, adversary, seed, estimator.
std::vector<BenchRow> bench_suite(const BenchConfig& config);

/// Column list of the CSV output.
const std::vector<std::string>& bench_columns();
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool timing);
void write_bench_json(std::ostream& out, const std::vector<BenchRow>& rows, bool timing);

}  // namespace huberfilt
