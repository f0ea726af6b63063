#pragma once

#include <Eigen/Dense>

#include "sepvar/ensemble.hpp"

namespace sepvar {

struct LowerSolution {
  Eigen::VectorXd p;
  /// hsd_from_cache(cache, p)
  double value = 0.0;
  /// max of the stationarity error on the support and the dual infeasibility
  /// off the support, both measured against the simplex multiplier.
  double kkt_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// KKT residual of p for min r + p'Gp - 2v'p over the probability simplex.
double simplex_kkt_residual(const OverlapCache& cache, const Eigen::VectorXd& p);

/// Minimizes the cached HSD over the probability simplex.
///
/// Primal active-set method: each iteration solves the equality-constrained
/// subproblem on the current support in an orthonormal basis of
/// {d : sum d = 0}, stepping to the blocking bound when the step leaves the
/// simplex and releasing the index with the most negative multiplier once the
/// support is stationary. Zero-curvature directions with a nonzero slope are
/// followed to the boundary, so singular Gram matrices are handled.
///
/// `warm_start`, when given, is projected onto the simplex and used as the
/// initial point; otherwise the uniform vector is used. If the iteration cap
/// is hit the best point is returned with converged = false.
LowerSolution lower_solve(const OverlapCache& cache, double tolerance = 1e-10,
                          const Eigen::VectorXd* warm_start = nullptr);

}  // namespace sepvar
