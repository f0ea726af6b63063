#include "sepvar/witness.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sepvar/rng.hpp"
#include "sepvar/sinusoid.hpp"

namespace sepvar {

double product_expectation(const CMatrix& op, const ProductStateParams& params) {
  const CVector psi = build_product_state(params).amplitudes();
  return psi.dot(op * psi).real();
}

namespace {

// Exact maximization along one angle: the expectation is c0 + c1 cos(k t) +
// c2 sin(k t) in each angle, k = 2 for theta and 1 for phi.
double ascend(const CMatrix& op, ProductStateParams& params, double value, int max_sweeps,
              double tolerance) {
  const int n = params.qubits();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double before = value;
    for (int q = 0; q < n; ++q) {
      for (int kind = 0; kind < 2; ++kind) {
        const double k = kind == 0 ? 2.0 : 1.0;
        const double origin = kind == 0 ? params.theta(q) : params.phi(q);
        auto at = [&](double offset) {
          ProductStateParams trial = params;
          if (kind == 0) {
            trial.set_theta(q, origin + offset / k);
          } else {
            trial.set_phi(q, origin + offset / k);
          }
          return std::pair{product_expectation(op, trial), trial};
        };
        const SinusoidFit fit = fit_sinusoid(value, at(kSinusoidOffset).first,
                                             at(-kSinusoidOffset).first);
        if (fit.degenerate(1e-15)) continue;
        auto [moved, trial] = at(fit.argmax());
        if (moved > value) {
          value = moved;
          params = std::move(trial);
        }
      }
    }
    if (value - before < tolerance) break;
  }
  return value;
}

}  // namespace

Witness build_witness(const DensityMatrix& rho, const DensityMatrix& sigma,
                      const WitnessSearch& search, std::uint64_t seed) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("build_witness: dimension mismatch");
  if (search.max_restarts < 1 || search.confirmations < 1 || search.max_sweeps < 1 ||
      !(search.tolerance > 0.0)) {
    throw std::invalid_argument("build_witness: invalid search settings");
  }
  const int n = rho.qubits();
  const CMatrix diff = rho.matrix() - sigma.matrix();
  Rng rng(seed);

  Witness out;
  out.offset = -std::numeric_limits<double>::infinity();
  const double match = std::sqrt(search.tolerance);
  for (int r = 0; r < search.max_restarts; ++r) {
    ProductStateParams start = random_product_params(n, rng);
    const double value =
        ascend(diff, start, product_expectation(diff, start), search.max_sweeps, search.tolerance);
    ++out.restarts;
    if (value > out.offset + match) {
      out.offset = value;
      out.maximizer = start;
      out.confirmations = 1;
    } else if (value >= out.offset - match) {
      ++out.confirmations;
      if (value > out.offset) {
        out.offset = value;
        out.maximizer = start;
      }
    }
    if (out.confirmations >= search.confirmations) break;
  }
  out.lower_bound_only = out.confirmations < search.confirmations;
  const auto d = static_cast<Eigen::Index>(rho.dim());
  out.W = out.offset * CMatrix::Identity(d, d) - diff;
  out.expectation_rho = trace_product(out.W, rho.matrix());
  return out;
}

}  // namespace sepvar
