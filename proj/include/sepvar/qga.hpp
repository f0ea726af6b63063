#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sepvar/qstate.hpp"
#include "sepvar/trace.hpp"

namespace sepvar {

/// Stop rules for run_qga; 0 disables a count bound.
struct HaltCriterion {
  std::int64_t max_trials = 100000;
  std::int64_t max_successes = 0;
  /// Halt once a success lowers the HSD by less than this; 0 disables.
  double min_improvement = 1e-8;
  /// Consecutive failed trials before halting. -1 selects 10 (c_s + 1),
  /// 0 disables.
  std::int64_t stall_window = -1;

  /// Throws std::invalid_argument unless at least one bound is finite.
  void validate() const;
  std::int64_t resolved_stall_window(std::int64_t successes) const;
};

/// Current mixture rho_n = sum_i w_i |psi_i><psi_i| together with the
/// recursively updated purity and overlap with rho.
struct QgaState {
  std::vector<ProductStateParams> components;
  /// p_1..p_n of each success.
  std::vector<double> mixing;
  /// Implied convex weights (prod_{j>i} p_j)(1 - p_i).
  std::vector<double> weights;
  /// Dense rho_n, maintained alongside the recursions.
  CMatrix current;
  double rho_purity = 0.0;  // Tr rho^2
  double purity = 1.0;      // Tr rho_n^2
  double overlap = 0.0;     // Tr rho rho_n
  double hsd = 0.0;
  std::int64_t trials = 0;     // c_t
  std::int64_t successes = 0;  // c_s
};

struct CandidateOverlaps {
  double with_rho = 0.0;      // Tr rho sigma
  double with_current = 0.0;  // Tr rho_{n-1} sigma
};

/// Starting point sigma_0 = |psi_0><psi_0|.
QgaState qga_initial(const DensityMatrix& rho, const ProductStateParams& start);

CandidateOverlaps candidate_overlaps(const QgaState& state, const DensityMatrix& rho,
                                     const ProductStateParams& candidate);

/// Tr[(sigma - rho_{n-1})(rho - rho_{n-1})] > 0 in overlap form.
bool preselect(const QgaState& state, const CandidateOverlaps& overlaps);

/// Minimizer over p of Tr[(rho - p rho_{n-1} - (1-p) sigma)^2]; nullopt when
/// the candidate coincides with rho_{n-1}.
std::optional<double> optimal_mixing_weight(const QgaState& state,
                                            const CandidateOverlaps& overlaps);

/// rho_n = p rho_{n-1} + (1 - p) sigma with the purity/overlap recursions.
QgaState qga_update(const QgaState& state, const ProductStateParams& candidate,
                    const CandidateOverlaps& overlaps, double p);

/// HSD from the explicit double sum over stored components.
double qga_expanded_cost(const QgaState& state, const DensityMatrix& rho);

struct QgaSuccess {
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  double hsd = 0.0;
  double mixing_weight = 0.0;
};

struct QgaResult {
  QgaState state;
  std::vector<QgaSuccess> successes;
  OptimizationTrace trace;
  std::int64_t preselected = 0;
};

/// Random product trials drawn uniformly on each qubit's Bloch sphere until
/// the halt criterion fires.
QgaResult run_qga(const DensityMatrix& rho, const HaltCriterion& halt, std::uint64_t seed);

/// Modeled overlap evaluations for c_t trials when successes grow as
/// c_t^exponent, spread evenly: sum_i c_s(i)(c_s(i)+1)/2.
double qga_call_count(std::int64_t trials, double exponent = 0.44127);

}  // namespace sepvar
