#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sepvar/rng.hpp"

namespace sepvar {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when an iterative solver fails to reach its certificate.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Basis convention used throughout: for an n-qubit register, qubit 0 is the
// most significant bit of a basis index, qubit n-1 the least significant.
// Tensor products are therefore written factor(0) (x) factor(1) (x) ...

/// 2^n, rejecting qubit counts that cannot be represented densely.
std::size_t dimension_for(int qubits);

/// Inverse of dimension_for; throws unless `dim` is a power of two >= 2.
int qubits_for(std::size_t dim);

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double angle);

class PureState {
 public:
  /// Throws std::invalid_argument unless the length is a power of two and the
  /// norm is 1 within 1e-12.
  explicit PureState(CVector amplitudes);

  int qubits() const { return qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const CVector& amplitudes() const { return amplitudes_; }
  CMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  CVector amplitudes_;
  int qubits_;
};

class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kEigenvalueTol = -1e-10;

  /// Validates Hermiticity, unit trace and positivity. The stored matrix is
  /// the exact Hermitian part of the input.
  explicit DensityMatrix(const CMatrix& entries);

  static DensityMatrix from_pure(const PureState& psi);

  int qubits() const { return qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const CMatrix& matrix() const { return entries_; }

  /// Tr rho^2
  double purity() const;

 private:
  CMatrix entries_;
  int qubits_;
};

/// Rows theta_i, phi_i of the product-state angle matrices, one pair per qubit.
class ProductStateParams {
 public:
  ProductStateParams(std::vector<double> thetas, std::vector<double> phis);

  /// All angles zero: the computational |0...0> state.
  static ProductStateParams zeros(int qubits);

  int qubits() const { return static_cast<int>(thetas_.size()); }
  std::span<const double> thetas() const { return thetas_; }
  std::span<const double> phis() const { return phis_; }
  double theta(int qubit) const { return thetas_.at(static_cast<std::size_t>(qubit)); }
  double phi(int qubit) const { return phis_.at(static_cast<std::size_t>(qubit)); }

  void set_theta(int qubit, double value);
  void set_phi(int qubit, double value);

 private:
  std::vector<double> thetas_;
  std::vector<double> phis_;
};

/// cos(theta)|0> + e^{i phi} sin(theta)|1>
Eigen::Vector2cd single_qubit_factor(double theta, double phi);

PureState build_product_state(const ProductStateParams& params);

/// (|0...0> + |1...1>)/sqrt(2); n >= 2.
PureState build_ghz(int qubits);

/// Maximally entangled mixed X-state on n >= 2 qubits with coherence gamma,
/// |gamma| <= 1/2. With N = 2^{n-1}:
///   f = g = 1/(N+1)                  for |gamma| <= 1/(N+1)
///   f = |gamma|, g = (1-2|gamma|)/(N-1) otherwise,
/// f on both corners (0,0) and (2^n-1, 2^n-1), gamma at (0, 2^n-1), g on the
/// diagonal slots 1..N-1, zero on slots N..2^n-2.
DensityMatrix build_xmems(int qubits, Complex gamma);

/// Partial transpose on one qubit of an n-qubit operator.
CMatrix partial_transpose(const CMatrix& op, int qubit);
CMatrix partial_transpose(const DensityMatrix& rho, int qubit);

/// Reduced state on the qubits in `keep` (ascending order in the result).
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

/// Tr[(rho - sigma)^2]
double hsd_exact(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Tr[a b] for Hermitian a, b, real part.
double trace_product(const CMatrix& a, const CMatrix& b);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& hermitian);

// Random states, used by tests, the QGA trial draw and optimizer starts.

/// Haar-random pure state via normalized complex Gaussians.
PureState random_pure_state(int qubits, Rng& rng);

/// Mixture of 2^n Haar-random pure states with flat-Dirichlet weights.
DensityMatrix random_mixed_state(int qubits, Rng& rng);

/// Each qubit's Bloch vector uniform on the sphere: cos(2 theta) ~ U(-1, 1),
/// phi ~ U(0, 2 pi).
ProductStateParams random_product_params(int qubits, Rng& rng);

/// Angles independently uniform on [0, 2 pi).
ProductStateParams uniform_angle_params(int qubits, Rng& rng);

}  // namespace sepvar
