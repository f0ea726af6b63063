#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <json.hpp>

namespace sepvar {

struct TraceRecord {
  std::int64_t iteration = 0;
  double proposal_hsd = 0.0;
  double best_hsd = 0.0;
  double wall_seconds = 0.0;
  std::int64_t evaluations = 0;
  std::int64_t estimator_calls = 0;
};

/// Iteration-indexed optimizer history plus free-form run metadata.
class OptimizationTrace {
 public:
  /// Throws std::invalid_argument unless record.iteration exceeds the last one.
  void append(const TraceRecord& record);

  const std::vector<TraceRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  const TraceRecord& back() const { return records_.back(); }

  /// Number of records where the best-so-far value went down.
  std::int64_t improvements() const;

  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }

  static constexpr const char* kCsvHeader =
      "iteration,evaluations,estimator_calls,proposal_hsd,best_hsd,wall_seconds";

  /// One CSV row per record, no header.
  void write_csv_rows(std::ostream& out) const;

 private:
  std::vector<TraceRecord> records_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

}  // namespace sepvar
