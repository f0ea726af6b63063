#pragma once

#include "sepvar/qstate.hpp"

namespace sepvar {

/// E_HS of the n-qubit GHZ state, (2^n - 2) / (2^{n+1} + 2^{3-n} - 4); n >= 2.
double ghz_hse(int qubits);

/// Parameters of the X-MEMS CSS pattern on n qubits (N = 2^{n-1}):
/// a/2 on both corners, delta at (0, 2^n-1), b/(N-1) on the diagonal slots
/// 1..N-1 and (1-a-b)/(N-1) on slots N..2^n-2.
struct XmemsCssParams {
  double a = 0.0;
  double b = 0.0;
  Complex delta{0.0, 0.0};
  int qubits = 2;
};

struct CssReference {
  XmemsCssParams params;
  double hse = 0.0;
  /// Max of stationarity error, constraint violation and multiplier sign
  /// violation at the returned point.
  double kkt_residual = 0.0;
};

/// Closed-form CSS of the two-qubit X-MEMS. Throws std::invalid_argument for
/// |gamma| > 1/2.
CssReference xmems_css_2q(Complex gamma);

/// CSS of the n-qubit X-MEMS within the pattern, solved by enumerating active
/// constraint sets and Newton iterations on the KKT system, n >= 2.
/// Throws NumericError if no certified point is found.
CssReference xmems_css_nq(int qubits, Complex gamma);

/// KKT residual of `params` for the pattern problem of the given X-MEMS.
double xmems_css_kkt_residual(const XmemsCssParams& params, Complex gamma);

/// Tr[(X - C)^2] for the X-MEMS X and the pattern state C.
double xmems_pattern_distance(const XmemsCssParams& params, Complex gamma);

/// The pattern matrix itself; throws std::invalid_argument if it is not a
/// valid density matrix.
DensityMatrix css_pattern_matrix(const XmemsCssParams& params);

/// 2|gamma|^2
double xmems_hse_bound(Complex gamma);

/// Wootters concurrence of a two-qubit state.
double concurrence_2q(const DensityMatrix& rho);

/// 2|gamma|
double gme_concurrence_xmems(Complex gamma);

/// Sum of |negative eigenvalues| of the partial transpose on `qubit`.
double negativity(const DensityMatrix& rho, int qubit);

/// The only eigenvalue of the three-qubit pattern's partial transpose that
/// can go negative: (1/6)(1 - a - sqrt((1-a-2b)^2 + 36|delta|^2)).
double css_pattern_negative_eigenvalue(const XmemsCssParams& params);

}  // namespace sepvar
