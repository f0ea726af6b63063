#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sepvar/ensemble.hpp"
#include "sepvar/lower_solver.hpp"
#include "sepvar/sinusoid.hpp"
#include "sepvar/trace.hpp"

namespace sepvar {

enum class UpperOptimizer { annealing, sinusoidal };

const char* to_string(UpperOptimizer optimizer);
UpperOptimizer parse_upper_optimizer(const std::string& text);

/// Generalized simulated annealing knobs (Tsallis visiting distribution,
/// generalized Metropolis acceptance). Defaults follow the common
/// dual-annealing settings.
struct AnnealingSchedule {
  double initial_temperature = 5230.0;
  double visiting_param = 2.62;
  double acceptance_param = -5.0;
  double restart_temperature_ratio = 2e-5;
  /// Sinusoidal sweeps used to polish each new best chain point; 0 disables.
  int local_search_sweeps = 4;
};

struct VsvConfig {
  /// Component count s; defaults to 2^n.
  std::optional<std::size_t> components;
  UpperOptimizer optimizer = UpperOptimizer::sinusoidal;
  std::int64_t max_evaluations = 5000;
  double lower_tolerance = 1e-10;
  EstimatorMode mode = EstimatorMode::exact;
  ShotConfig shots;
  std::uint64_t seed = 0;
  AnnealingSchedule annealing;
  /// Sinusoidal descent restarts from fresh random angles once a full sweep
  /// improves the cost by less than this.
  double restart_threshold = 1e-10;
  std::string tag;

  std::size_t resolved_components(int qubits) const;
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate(int qubits) const;
};

struct VsvResult {
  SeparableEnsemble best_ensemble;
  double hse = 0.0;
  OptimizationTrace trace;
  std::int64_t evaluation_count = 0;
  std::int64_t estimator_calls = 0;
  /// KKT residual of the lower-level solve at the reported point.
  double lower_kkt_residual = 0.0;
  bool lower_converged = true;
};

/// One point of the upper-level search: angles, the weights chosen by the
/// lower level, the resulting cost and the cache it was computed from.
struct UpperState {
  std::vector<ProductStateParams> rows;
  Eigen::VectorXd p;
  double value = 0.0;
  OverlapCache cache;
};

/// The bilevel cost theta, phi -> min_p HSD, with evaluation accounting,
/// best-so-far bookkeeping and the per-evaluation trace.
///
/// In shot mode Tr rho^2 is estimated once at construction and every
/// evaluation draws fresh shots from its own RNG stream.
class BilevelObjective {
 public:
  BilevelObjective(const DensityMatrix& rho, EstimatorMode mode, const ShotConfig& shots,
                   double lower_tolerance, std::int64_t max_evaluations);

  bool exhausted() const { return evaluations_ >= max_evaluations_; }
  std::int64_t evaluations() const { return evaluations_; }
  std::int64_t estimator_calls() const { return estimator_calls_; }
  int qubits() const { return rho_.qubits(); }
  EstimatorMode mode() const { return mode_; }

  /// Full evaluation. Returns nullopt once the budget is spent.
  std::optional<UpperState> evaluate(std::vector<ProductStateParams> rows,
                                     const Eigen::VectorXd* warm_start = nullptr);

  /// Evaluation of `base` with component `row` replaced by `params`. Exact
  /// mode patches the cache; shot mode re-estimates everything.
  std::optional<UpperState> evaluate_with_row(const UpperState& base, std::size_t row,
                                              const ProductStateParams& params);

  const std::optional<UpperState>& best() const { return best_; }
  const LowerSolution& best_lower() const { return best_lower_; }
  OptimizationTrace& trace() { return trace_; }

 private:
  std::optional<UpperState> finish(std::vector<ProductStateParams> rows, OverlapCache cache,
                                   const Eigen::VectorXd* warm_start);

  const DensityMatrix& rho_;
  EstimatorMode mode_;
  ShotConfig shots_;
  double lower_tolerance_;
  std::int64_t max_evaluations_;
  std::optional<double> purity_;
  std::int64_t evaluations_ = 0;
  std::int64_t estimator_calls_ = 0;
  std::optional<UpperState> best_;
  LowerSolution best_lower_;
  OptimizationTrace trace_;
  std::chrono::steady_clock::time_point start_;
};

enum class AngleKind { theta, phi };

struct ParameterIndex {
  std::size_t component = 0;
  int qubit = 0;
  AngleKind angle = AngleKind::theta;
};

/// All upper-level parameters in sweep order: component, then qubit, theta
/// before phi.
std::vector<ParameterIndex> parameter_order(std::size_t components, int qubits);

/// Cost frequency of an angle: the product-state amplitudes use cos(theta),
/// sin(theta) and e^{i phi}, so costs are degree-2 trigonometric in theta and
/// degree-1 in phi.
inline int angle_frequency(AngleKind kind) { return kind == AngleKind::theta ? 2 : 1; }

struct CoordinateStep {
  SinusoidFit fit;
  /// Costs at frequency-scaled offsets 0, +2pi/3, -2pi/3 with the weights
  /// held at the incoming p, where the cost is exactly sinusoidal.
  std::array<double, 3> samples{};
  double fitted_offset = 0.0;
  bool degenerate = false;
  bool moved = false;
  /// False when the budget ran out mid-step; the state is then unchanged.
  bool completed = false;
};

/// Sinusoidal coordinate update of one angle: evaluate two shifted points
/// (each with its own lower-level solve), fit c0 + c1 cos(k t) + c2 sin(k t)
/// to the costs at the incoming weights, evaluate the fitted minimizer and keep
/// the lowest bilevel cost among the evaluated points (earliest on ties).
/// In exact mode the result never exceeds the minimum of the fitted curve.
CoordinateStep coordinate_sinusoidal_step(BilevelObjective& objective, UpperState& state,
                                          const ParameterIndex& index,
                                          double degenerate_tolerance = 1e-13);

/// Runs the bilevel optimizer until the evaluation budget is spent.
/// Throws std::invalid_argument for an invalid rho/config.
VsvResult run_vsv(const DensityMatrix& rho, const VsvConfig& cfg);

}  // namespace sepvar
