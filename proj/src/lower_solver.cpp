#include "sepvar/lower_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sepvar {

namespace {

struct Multiplier {
  double mu = 0.0;
  double stationarity = 0.0;
  double dual_violation = 0.0;
  Eigen::Index worst_inactive = -1;
};

Multiplier simplex_multiplier(const Eigen::VectorXd& grad, const std::vector<bool>& free) {
  Multiplier m;
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (free[static_cast<std::size_t>(i)]) {
      sum += grad(i);
      ++count;
    }
  }
  m.mu = count > 0 ? sum / count : grad.minCoeff();
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double lambda = grad(i) - m.mu;
    if (free[static_cast<std::size_t>(i)]) {
      m.stationarity = std::max(m.stationarity, std::abs(lambda));
    } else if (-lambda > m.dual_violation) {
      m.dual_violation = -lambda;
      m.worst_inactive = i;
    }
  }
  return m;
}

Eigen::VectorXd project_start(const Eigen::VectorXd& start) {
  Eigen::VectorXd p = start.cwiseMax(0.0);
  const double total = p.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    return Eigen::VectorXd::Constant(start.size(), 1.0 / static_cast<double>(start.size()));
  }
  return p / total;
}

// Orthonormal basis of {x in R^k : sum x = 0}, as the trailing columns of the
// Householder reflector that maps the all-ones direction to e_1.
Eigen::MatrixXd sum_zero_basis(Eigen::Index k) {
  Eigen::VectorXd u = Eigen::VectorXd::Constant(k, 1.0 / std::sqrt(static_cast<double>(k)));
  u(0) += 1.0;
  const double unorm2 = u.squaredNorm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k) - (2.0 / unorm2) * u * u.transpose();
  return h.rightCols(k - 1);
}

}  // namespace

double simplex_kkt_residual(const OverlapCache& cache, const Eigen::VectorXd& p) {
  const Eigen::VectorXd grad = 2.0 * (cache.G() * p - cache.v());
  std::vector<bool> free(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) free[static_cast<std::size_t>(i)] = p(i) > 0.0;
  const Multiplier m = simplex_multiplier(grad, free);
  // Complementarity is exact by construction: inactive entries are zero.
  return std::max(m.stationarity, m.dual_violation);
}

LowerSolution lower_solve(const OverlapCache& cache, double tolerance,
                          const Eigen::VectorXd* warm_start) {
  const auto s = static_cast<Eigen::Index>(cache.components());
  const Eigen::MatrixXd& G = cache.G();
  const Eigen::VectorXd& v = cache.v();

  LowerSolution out;
  if (s == 1) {
    out.p = Eigen::VectorXd::Ones(1);
    out.value = hsd_from_cache(cache, out.p);
    out.converged = true;
    return out;
  }

  Eigen::VectorXd p = Eigen::VectorXd::Constant(s, 1.0 / static_cast<double>(s));
  if (warm_start != nullptr && warm_start->size() == s) p = project_start(*warm_start);

  std::vector<bool> free(static_cast<std::size_t>(s));
  for (Eigen::Index i = 0; i < s; ++i) free[static_cast<std::size_t>(i)] = p(i) > 0.0;

  const int max_iterations = 100 + 20 * static_cast<int>(s);
  const double ray_slope_tol = 0.1 * tolerance;
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(s));

  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    const Eigen::VectorXd grad = 2.0 * (G * p - v);
    const Multiplier m = simplex_multiplier(grad, free);

    if (m.stationarity <= tolerance) {
      if (m.dual_violation <= tolerance) {
        out.converged = true;
        break;
      }
      free[static_cast<std::size_t>(m.worst_inactive)] = true;
      continue;
    }

    idx.clear();
    for (Eigen::Index i = 0; i < s; ++i) {
      if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd hff(k, k);
    Eigen::VectorXd gf(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      gf(a) = grad(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < k; ++b) {
        hff(a, b) = 2.0 * G(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
    }
    const Eigen::MatrixXd z = sum_zero_basis(k);
    const Eigen::MatrixXd reduced = z.transpose() * hff * z;
    const Eigen::VectorXd c = z.transpose() * gf;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& vec = es.eigenvectors();
    const Eigen::VectorXd w = vec.transpose() * c;
    const double curvature_floor = 1e-11 * std::max(1.0, lam.cwiseAbs().maxCoeff());

    Eigen::VectorXd y = Eigen::VectorXd::Zero(k - 1);
    bool ray = false;
    for (Eigen::Index j = 0; j < k - 1; ++j) {
      if (lam(j) <= curvature_floor && std::abs(w(j)) > ray_slope_tol) {
        y -= w(j) * vec.col(j);
        ray = true;
      }
    }
    if (!ray) {
      for (Eigen::Index j = 0; j < k - 1; ++j) {
        if (lam(j) > curvature_floor) y -= (w(j) / lam(j)) * vec.col(j);
      }
    }
    const Eigen::VectorXd d = z * y;

    double alpha_max = std::numeric_limits<double>::infinity();
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (d(a) < 0.0) {
        const double ratio = -p(idx[static_cast<std::size_t>(a)]) / d(a);
        if (ratio < alpha_max) {
          alpha_max = ratio;
          blocking = idx[static_cast<std::size_t>(a)];
        }
      }
    }
    if (blocking < 0) {
      // No usable direction on this support; the residual cannot shrink further.
      break;
    }
    const double alpha = ray ? alpha_max : std::min(1.0, alpha_max);
    for (Eigen::Index a = 0; a < k; ++a) p(idx[static_cast<std::size_t>(a)]) += alpha * d(a);
    if (alpha >= alpha_max) {
      p(blocking) = 0.0;
      free[static_cast<std::size_t>(blocking)] = false;
    }
    for (Eigen::Index i = 0; i < s; ++i) {
      if (p(i) <= 0.0) {
        p(i) = 0.0;
        free[static_cast<std::size_t>(i)] = false;
      }
    }
    p /= p.sum();
  }

  out.p = p;
  out.value = hsd_from_cache(cache, p);
  out.kkt_residual = simplex_kkt_residual(cache, p);
  if (!out.converged) out.converged = out.kkt_residual <= tolerance;
  return out;
}

}  // namespace sepvar
