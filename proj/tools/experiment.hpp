#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepvar/qstate.hpp"

namespace sepvar::cli {

/// Thrown for invalid user input; mapped to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolved settings of one CLI run. The JSON form doubles as the --config
/// file format and is embedded in every output file.
struct ExperimentConfig {
  std::string command;  // "vsv run", "qga run", "reference table", "witness build"
  std::string state = "ghz";
  std::string state_file;
  int n = 2;
  std::optional<double> gamma;
  std::string gamma_range;
  std::string n_range = "2:9";
  std::string mode = "exact";
  std::int64_t shots = 8192;
  std::uint64_t seed = 0;
  std::int64_t budget = 5000;
  std::int64_t s_components = 0;  // 0: 2^n
  std::string optimizer = "sinusoidal";
  std::int64_t trials = 10000;
  std::string out = "out";
  std::string tag;

  nlohmann::json to_json() const;
  /// Overwrites the fields present in `j`; unknown keys are a UsageError.
  void merge_json(const nlohmann::json& j);
  /// Range and consistency checks for `command`.
  void validate() const;
};

/// Inclusive "a:b:step" list; the end point is kept when it lies within
/// step/2 of the last grid point.
std::vector<double> parse_range(const std::string& text);

/// Gamma values of the run: the range, else the single value, else {0.5}
/// for X-MEMS and a single empty point for other states.
std::vector<std::optional<double>> sweep_points(const ExperimentConfig& cfg);

/// {"n": int, "re": [...], "im": [...]} with row-major entries.
DensityMatrix load_density_matrix(const std::filesystem::path& path);

/// Test state of a sweep point.
DensityMatrix make_state(const ExperimentConfig& cfg, std::optional<double> gamma);

/// Known HSE of the state, when one exists.
std::optional<double> reference_hse(const ExperimentConfig& cfg, std::optional<double> gamma);

/// Collects output files and publishes them together: every file is written
/// to a temporary name first and renamed only once all writes succeeded. If a
/// rename fails, the files already published by this commit are removed again.
class AtomicOutputs {
 public:
  explicit AtomicOutputs(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string content);
  void commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

void cmd_vsv_run(const ExperimentConfig& cfg, std::ostream& log);
void cmd_qga_run(const ExperimentConfig& cfg, std::ostream& log);
void cmd_reference_table(const ExperimentConfig& cfg, std::ostream& log);
void cmd_witness_build(const ExperimentConfig& cfg, std::ostream& log);

/// Full command-line entry point. Returns 0 on success, 1 on usage errors and
/// 2 on numeric failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sepvar::cli
