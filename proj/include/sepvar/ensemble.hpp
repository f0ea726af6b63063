#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sepvar/qstate.hpp"
#include "sepvar/swap_test.hpp"

namespace sepvar {

enum class EstimatorMode { exact, shots };

const char* to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(const std::string& text);

/// sigma(p, theta, phi) = sum_i p_i |psi_i><psi_i| with product |psi_i>.
class SeparableEnsemble {
 public:
  SeparableEnsemble(Eigen::VectorXd p, std::vector<ProductStateParams> components);

  /// s components with uniform weights.
  static SeparableEnsemble uniform(std::vector<ProductStateParams> components);

  int qubits() const { return qubits_; }
  std::size_t components() const { return components_.size(); }
  const Eigen::VectorXd& weights() const { return p_; }
  const std::vector<ProductStateParams>& rows() const { return components_; }

 private:
  Eigen::VectorXd p_;
  std::vector<ProductStateParams> components_;
  int qubits_;
};

/// Largest admissible component count, 4^n.
std::size_t max_components(int qubits);

/// Raw (unclamped) sampled values and their standard errors, kept for
/// diagnostics when a cache is estimated from shots.
struct ShotDiagnostics {
  std::int64_t shots = 0;
  double raw_r = 0.0;
  double r_standard_error = 0.0;
  Eigen::VectorXd raw_v;
  Eigen::VectorXd v_standard_error;
  Eigen::MatrixXd raw_G;
  Eigen::MatrixXd G_standard_error;
};

/// Everything the classical loop needs from the device:
///   r    = Tr rho^2
///   v_i  = <psi_i|rho|psi_i>
///   G_ij = |<psi_i|psi_j>|^2, with G_ii = 1 exactly.
/// Shot-mode entries are clamped to [0, 1]; the raw values live in shot_info.
class OverlapCache {
 public:
  OverlapCache(double r, Eigen::VectorXd v, Eigen::MatrixXd G, EstimatorMode mode,
               std::int64_t estimator_calls, std::optional<ShotDiagnostics> shot_info = {});

  double r() const { return r_; }
  const Eigen::VectorXd& v() const { return v_; }
  const Eigen::MatrixXd& G() const { return G_; }
  EstimatorMode mode() const { return mode_; }
  std::size_t components() const { return static_cast<std::size_t>(v_.size()); }
  std::int64_t estimator_calls() const { return estimator_calls_; }
  const std::optional<ShotDiagnostics>& shot_info() const { return shot_info_; }

 private:
  double r_;
  Eigen::VectorXd v_;
  Eigen::MatrixXd G_;
  EstimatorMode mode_;
  std::int64_t estimator_calls_;
  std::optional<ShotDiagnostics> shot_info_;
};

/// 1 + s + s(s-1)/2
std::int64_t cache_estimator_calls(std::size_t components);

/// Builds the cache for the given component angles.
///
/// In shot mode every estimator call draws from its own stream split off
/// cfg.seed by call index, so the result is a pure function of the inputs.
/// When `known_purity` is given it is used for r and that estimator call is
/// skipped (the test state's purity only needs measuring once per run).
OverlapCache build_cache(const DensityMatrix& rho, std::span<const ProductStateParams> rows,
                         EstimatorMode mode, const ShotConfig& cfg = {},
                         std::optional<double> known_purity = std::nullopt);

/// Exact-mode cache with component `row` re-evaluated and all other entries
/// copied from `base`. Equivalent to a full exact rebuild.
OverlapCache rebuild_component(const OverlapCache& base, const DensityMatrix& rho,
                               std::span<const ProductStateParams> rows, std::size_t row);

/// |<psi(a)|psi(b)>|^2 evaluated factor by factor.
double product_overlap(const ProductStateParams& a, const ProductStateParams& b);

/// sum_i p_i v_i
double ensemble_overlap(const OverlapCache& cache, const Eigen::VectorXd& p);

/// sum_i p_i^2 + 2 sum_{i<j} p_i p_j G_ij
double ensemble_purity(const OverlapCache& cache, const Eigen::VectorXd& p);

/// r + purity - 2 overlap. May be slightly negative in shot mode.
double hsd_from_cache(const OverlapCache& cache, const Eigen::VectorXd& p);

DensityMatrix densify(const SeparableEnsemble& ensemble);

}  // namespace sepvar
