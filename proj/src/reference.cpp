#include "sepvar/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace sepvar {

namespace {

void check_gamma(Complex gamma) {
  if (!(std::abs(gamma) <= 0.5 + 1e-15)) throw std::invalid_argument("|gamma| must not exceed 1/2");
}

Complex phase_of(Complex gamma) {
  const double m = std::abs(gamma);
  return m > 0.0 ? gamma / m : Complex(1.0, 0.0);
}

// Pattern problem in the variables x = (a, b, t), t = |delta|:
//   F = 2(f - a/2)^2 + (Kg - b)^2/K + (1-a-b)^2/K + 2(c - t)^2,  K = N - 1,
// subject to
//   h0 = K^2 t^2 - b(1-a-b) <= 0   (PPT of the pattern)
//   h1 = 2t - a <= 0
//   h2 = -a, h3 = -b, h4 = a + b - 1, h5 = -t  <= 0
struct Pattern {
  double f = 0.0;
  double g = 0.0;
  double c = 0.0;
  double K = 1.0;

  Pattern(int qubits, double c_in) : c(c_in) {
    if (qubits < 2) throw std::invalid_argument("X-MEMS needs at least two qubits");
    const double N = std::ldexp(1.0, qubits - 1);
    K = N - 1.0;
    if (c <= 1.0 / (N + 1.0)) {
      f = g = 1.0 / (N + 1.0);
    } else {
      f = c;
      g = (1.0 - 2.0 * c) / K;
    }
  }

  double value(const Eigen::Vector3d& x) const {
    const double u = 1.0 - x(0) - x(1);
    const double da = f - x(0) / 2.0;
    const double db = K * g - x(1);
    const double dt = c - x(2);
    return 2.0 * da * da + db * db / K + u * u / K + 2.0 * dt * dt;
  }

  Eigen::Vector3d gradient(const Eigen::Vector3d& x) const {
    const double u = 1.0 - x(0) - x(1);
    return {-2.0 * (f - x(0) / 2.0) - 2.0 * u / K, -2.0 * (K * g - x(1)) / K - 2.0 * u / K,
            -4.0 * (c - x(2))};
  }

  Eigen::Matrix3d hessian() const {
    Eigen::Matrix3d H;
    H << 1.0 + 2.0 / K, 2.0 / K, 0.0, 2.0 / K, 4.0 / K, 0.0, 0.0, 0.0, 4.0;
    return H;
  }

  static constexpr int kConstraints = 6;

  double constraint(int i, const Eigen::Vector3d& x) const {
    switch (i) {
      case 0: return K * K * x(2) * x(2) - x(1) * (1.0 - x(0) - x(1));
      case 1: return 2.0 * x(2) - x(0);
      case 2: return -x(0);
      case 3: return -x(1);
      case 4: return x(0) + x(1) - 1.0;
      default: return -x(2);
    }
  }

  Eigen::Vector3d constraint_gradient(int i, const Eigen::Vector3d& x) const {
    switch (i) {
      case 0: return {x(1), -(1.0 - x(0) - 2.0 * x(1)), 2.0 * K * K * x(2)};
      case 1: return {-1.0, 0.0, 2.0};
      case 2: return {-1.0, 0.0, 0.0};
      case 3: return {0.0, -1.0, 0.0};
      case 4: return {1.0, 1.0, 0.0};
      default: return {0.0, 0.0, -1.0};
    }
  }

  Eigen::Matrix3d constraint_hessian(int i) const {
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    if (i == 0) {
      H(0, 1) = H(1, 0) = 1.0;
      H(1, 1) = 2.0;
      H(2, 2) = 2.0 * K * K;
    }
    return H;
  }
};

// Stationarity with nonnegative multipliers on the (nearly) active set, found
// by trying every subset of active constraints.
double kkt_residual(const Pattern& P, const Eigen::Vector3d& x) {
  constexpr double kActive = 1e-10;
  double infeasibility = 0.0;
  std::vector<int> active;
  for (int i = 0; i < Pattern::kConstraints; ++i) {
    const double h = P.constraint(i, x);
    infeasibility = std::max(infeasibility, h);
    if (h >= -kActive) active.push_back(i);
  }
  const Eigen::Vector3d grad = P.gradient(x);
  double best = grad.cwiseAbs().maxCoeff();
  const auto m = static_cast<unsigned>(active.size());
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> subset;
    for (unsigned k = 0; k < m; ++k) {
      if (mask & (1u << k)) subset.push_back(active[k]);
    }
    Eigen::MatrixXd J(3, static_cast<Eigen::Index>(subset.size()));
    for (std::size_t k = 0; k < subset.size(); ++k) {
      J.col(static_cast<Eigen::Index>(k)) = P.constraint_gradient(subset[k], x);
    }
    const Eigen::VectorXd lambda = J.colPivHouseholderQr().solve(-grad);
    const double sign_violation = std::max(0.0, -lambda.minCoeff());
    const double stationarity = (grad + J * lambda).cwiseAbs().maxCoeff();
    best = std::min(best, std::max(stationarity, sign_violation));
  }
  return std::max(best, infeasibility);
}

// Newton iteration on the equality-constrained KKT system for `subset`.
bool solve_active(const Pattern& P, const std::vector<int>& subset, Eigen::Vector3d& x,
                  Eigen::VectorXd& lambda) {
  const auto m = static_cast<Eigen::Index>(subset.size());
  for (int iter = 0; iter < 80; ++iter) {
    Eigen::VectorXd r(3 + m);
    Eigen::MatrixXd Jac = Eigen::MatrixXd::Zero(3 + m, 3 + m);
    Eigen::Vector3d stat = P.gradient(x);
    Eigen::Matrix3d H = P.hessian();
    for (Eigen::Index k = 0; k < m; ++k) {
      const int i = subset[static_cast<std::size_t>(k)];
      const Eigen::Vector3d gi = P.constraint_gradient(i, x);
      stat += lambda(k) * gi;
      H += lambda(k) * P.constraint_hessian(i);
      Jac.block(0, 3 + k, 3, 1) = gi;
      Jac.block(3 + k, 0, 1, 3) = gi.transpose();
      r(3 + k) = P.constraint(i, x);
    }
    r.head(3) = stat;
    Jac.topLeftCorner(3, 3) = H;
    if (r.cwiseAbs().maxCoeff() < 1e-15) return true;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Jac);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd step = lu.solve(r);
    x -= step.head(3);
    lambda -= step.tail(m);
    if (!x.allFinite() || !lambda.allFinite()) return false;
    if (step.cwiseAbs().maxCoeff() < 1e-16) return true;
  }
  Eigen::VectorXd r(3 + m);
  Eigen::Vector3d stat = P.gradient(x);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int i = subset[static_cast<std::size_t>(k)];
    stat += lambda(k) * P.constraint_gradient(i, x);
    r(3 + k) = P.constraint(i, x);
  }
  r.head(3) = stat;
  return r.cwiseAbs().maxCoeff() < 1e-12;
}

bool certified(const Pattern& P, const Eigen::Vector3d& x, const Eigen::VectorXd& lambda) {
  constexpr double kTol = 1e-12;
  if (lambda.size() > 0 && lambda.minCoeff() < -kTol) return false;
  for (int i = 0; i < Pattern::kConstraints; ++i) {
    if (P.constraint(i, x) > kTol) return false;
  }
  return true;
}

std::vector<std::vector<int>> subsets_with(bool include_ppt) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<int> s;
    if (include_ppt) s.push_back(0);
    for (int k = 0; k < 5; ++k) {
      if (mask & (1u << k)) s.push_back(k + 1);
    }
    if (s.size() <= 3) out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& l, const auto& r) { return l.size() < r.size(); });
  return out;
}

XmemsCssParams to_params(const Eigen::Vector3d& x, Complex gamma, int qubits) {
  XmemsCssParams p;
  p.a = x(0);
  p.b = x(1);
  p.delta = std::max(0.0, x(2)) * phase_of(gamma);
  p.qubits = qubits;
  return p;
}

}  // namespace

double ghz_hse(int qubits) {
  if (qubits < 2) throw std::invalid_argument("ghz_hse: n must be at least 2");
  const double d = std::ldexp(1.0, qubits);
  return (d - 2.0) / (2.0 * d + 8.0 / d - 4.0);
}

CssReference xmems_css_2q(Complex gamma) {
  check_gamma(gamma);
  const double c = std::abs(gamma);
  XmemsCssParams p;
  p.qubits = 2;
  double hse = 0.0;
  if (c <= 1.0 / 3.0) {
    const double s = std::sqrt(1.0 + 36.0 * c * c);
    p.a = (7.0 - s) / 9.0;
    p.b = (1.0 + 12.0 * c * c + s) / (6.0 * s);
    p.delta = (gamma / 3.0) * (1.0 + 2.0 / s);
    hse = (2.0 / 27.0) * (1.0 + 18.0 * c * c - s);
  } else {
    const double s = std::sqrt(1.0 - 4.0 * c + 8.0 * c * c);
    p.a = (1.0 + 4.0 * c - s) / 3.0;
    p.b = (3.0 - 6.0 * c + (3.0 - 12.0 * c + 16.0 * c * c) / s) / 6.0;
    p.delta = gamma * (2.0 - 4.0 * c + s) / (3.0 * s);
    hse = (2.0 / 3.0) * (1.0 - 4.0 * c + 6.0 * c * c + (2.0 * c - 1.0) * s);
  }
  return {p, std::max(0.0, hse), xmems_css_kkt_residual(p, gamma)};
}

CssReference xmems_css_nq(int qubits, Complex gamma) {
  check_gamma(gamma);
  const Pattern P(qubits, std::abs(gamma));
  if (P.c == 0.0) {
    // Diagonal, hence separable: the state is its own CSS.
    const Eigen::Vector3d x(2.0 * P.f, P.K * P.g, 0.0);
    return {to_params(x, gamma, qubits), 0.0, kkt_residual(P, x)};
  }

  std::vector<Eigen::Vector3d> starts;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double b : {0.02, 0.1, 0.25, 0.45, 0.7}) {
      if (a + b >= 1.0) continue;
      starts.emplace_back(a, b, std::sqrt(b * (1.0 - a - b)) / P.K);
    }
  }

  for (bool ppt : {false, true}) {
    for (const auto& subset : subsets_with(ppt)) {
      const auto m = static_cast<Eigen::Index>(subset.size());
      const std::size_t tries = ppt ? starts.size() : 1;
      for (std::size_t k = 0; k < tries; ++k) {
        for (double lambda0 : {0.5, 0.01}) {
          Eigen::Vector3d x = ppt ? starts[k] : Eigen::Vector3d(0.5, 0.25, 0.0);
          Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
          if (ppt) lambda(0) = lambda0;
          if (!solve_active(P, subset, x, lambda)) continue;
          if (!certified(P, x, lambda)) continue;
          // Snap round-off on the bounds so the pattern is exactly feasible.
          x = x.cwiseMax(0.0);
          if (x(0) + x(1) > 1.0) x(1) = 1.0 - x(0);
          const double residual = kkt_residual(P, x);
          if (residual > 1e-9) continue;
          return {to_params(x, gamma, qubits), std::max(0.0, P.value(x)), residual};
        }
        if (!ppt) break;
      }
    }
  }
  throw NumericError("xmems_css_nq: no KKT point found");
}

double xmems_css_kkt_residual(const XmemsCssParams& params, Complex gamma) {
  check_gamma(gamma);
  const Pattern P(params.qubits, std::abs(gamma));
  return kkt_residual(P, Eigen::Vector3d(params.a, params.b, std::abs(params.delta)));
}

double xmems_pattern_distance(const XmemsCssParams& params, Complex gamma) {
  check_gamma(gamma);
  const Pattern P(params.qubits, std::abs(gamma));
  const double t = std::abs(params.delta);
  // Off-diagonal term is 2|gamma - delta|^2 in general.
  return P.value(Eigen::Vector3d(params.a, params.b, t)) - 2.0 * (P.c - t) * (P.c - t) +
         2.0 * std::norm(gamma - params.delta);
}

DensityMatrix css_pattern_matrix(const XmemsCssParams& params) {
  const std::size_t d = dimension_for(params.qubits);
  if (params.qubits < 2) throw std::invalid_argument("css_pattern_matrix: n must be at least 2");
  const std::size_t N = d / 2;
  const double K = static_cast<double>(N - 1);
  const auto last = static_cast<Eigen::Index>(d - 1);
  CMatrix C = CMatrix::Zero(last + 1, last + 1);
  C(0, 0) = C(last, last) = params.a / 2.0;
  C(0, last) = params.delta;
  C(last, 0) = std::conj(params.delta);
  for (std::size_t k = 1; k < N; ++k) C(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = params.b / K;
  for (std::size_t k = N; k + 1 < d; ++k) {
    C(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = (1.0 - params.a - params.b) / K;
  }
  return DensityMatrix(C);
}

double xmems_hse_bound(Complex gamma) {
  check_gamma(gamma);
  return 2.0 * std::norm(gamma);
}

double concurrence_2q(const DensityMatrix& rho) {
  if (rho.qubits() != 2) throw std::invalid_argument("concurrence_2q: needs a two-qubit state");
  CMatrix yy = CMatrix::Zero(4, 4);
  yy(0, 3) = yy(3, 0) = -1.0;
  yy(1, 2) = yy(2, 1) = 1.0;
  const CMatrix tilde = yy * rho.matrix().conjugate() * yy;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix root = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  const CMatrix R = root * tilde * root;
  Eigen::SelfAdjointEigenSolver<CMatrix> rs(0.5 * (R + R.adjoint()), Eigen::EigenvaluesOnly);
  Eigen::VectorXd l = rs.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(l.data(), l.data() + l.size(), std::greater<>());
  return std::max(0.0, l(0) - l(1) - l(2) - l(3));
}

double gme_concurrence_xmems(Complex gamma) {
  check_gamma(gamma);
  return 2.0 * std::abs(gamma);
}

double negativity(const DensityMatrix& rho, int qubit) {
  const CMatrix pt = partial_transpose(rho, qubit);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(pt, Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) sum += std::max(0.0, -es.eigenvalues()(i));
  return sum;
}

double css_pattern_negative_eigenvalue(const XmemsCssParams& params) {
  if (params.qubits != 3) throw std::invalid_argument("css_pattern_negative_eigenvalue: n must be 3");
  const double s = 1.0 - params.a - 2.0 * params.b;
  return (1.0 - params.a - std::sqrt(s * s + 36.0 * std::norm(params.delta))) / 6.0;
}

}  // namespace sepvar
