#pragma once

#include <iosfwd>

#include <json.hpp>

#include "huberfilt/estimator.hpp"

namespace huberfilt {

using Json = nlohmann::ordered_json;

/// Emission options shared by every report writer.
struct ReportOptions {
  /// When false, wall-clock fields are written as 0 so repeated runs are
  /// byte-identical.
  bool timing = true;
  /// Include the per-iteration stage-1 trace.
  bool trace = true;
};

Json vector_json(const Vector& v);
Json to_json(const ResolvedParams& p);
Json to_json(const FilterOutcome& f, bool with_weights = false);
Json to_json(const IterationRecord& r);
Json to_json(const MeanReport& r, const ReportOptions& opt = {});
Json to_json(const RegressionReport& r, const ReportOptions& opt = {});

/// One IterationRecord per line.
void write_trace_jsonl(std::ostream& out, const std::vector<IterationRecord>& trace);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace huberfilt
