#pragma once

#include <cstdint>

#include "sepvar/qstate.hpp"

namespace sepvar {

struct WitnessSearch {
  /// Random restarts of the product-state ascent.
  int max_restarts = 200;
  /// The search stops early once this many restarts reproduce the best value.
  int confirmations = 5;
  int max_sweeps = 500;
  double tolerance = 1e-10;
};

struct Witness {
  /// W = offset * I - (rho - sigma). Nonnegative on every product state when
  /// the offset is the true maximum, negative on rho when sigma is close to
  /// the CSS of an entangled rho.
  CMatrix W;
  /// Largest <psi|(rho - sigma)|psi> found over product states.
  double offset = 0.0;
  ProductStateParams maximizer = ProductStateParams::zeros(1);
  /// Tr(W rho)
  double expectation_rho = 0.0;
  int restarts = 0;
  int confirmations = 0;
  /// True unless the best value was confirmed by enough restarts; the offset
  /// is then only a lower bound on the maximum.
  bool lower_bound_only = true;
};

/// <psi|op|psi> for the product state with the given angles.
double product_expectation(const CMatrix& op, const ProductStateParams& params);

/// Builds the witness from rho and an approximation sigma of its CSS.
/// Throws std::invalid_argument on mismatched dimensions or a bad search config.
Witness build_witness(const DensityMatrix& rho, const DensityMatrix& sigma,
                      const WitnessSearch& search = {}, std::uint64_t seed = 0);

}  // namespace sepvar
