#include "sepvar/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sepvar {

namespace {

constexpr int kMaxQubits = 14;

std::size_t bit_of(int qubit, int qubits) {
  return std::size_t{1} << static_cast<unsigned>(qubits - 1 - qubit);
}

void check_qubit(int qubit, int qubits) {
  if (qubit < 0 || qubit >= qubits) {
    throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range for " +
                            std::to_string(qubits) + " qubits");
  }
}

}  // namespace

std::size_t dimension_for(int qubits) {
  if (qubits < 1 || qubits > kMaxQubits) {
    throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  return std::size_t{1} << static_cast<unsigned>(qubits);
}

int qubits_for(std::size_t dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of two >= 2");
  }
  int n = 0;
  while ((std::size_t{1} << static_cast<unsigned>(n)) < dim) ++n;
  return n;
}

double wrap_angle(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

PureState::PureState(CVector amplitudes)
    : amplitudes_(std::move(amplitudes)),
      qubits_(qubits_for(static_cast<std::size_t>(amplitudes_.size()))) {
  const double norm_sq = amplitudes_.squaredNorm();
  if (std::abs(norm_sq - 1.0) > 1e-12) {
    throw std::invalid_argument("pure state is not normalized (|psi|^2 = " +
                                std::to_string(norm_sq) + ")");
  }
}

DensityMatrix::DensityMatrix(const CMatrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("density matrix must be square");
  }
  qubits_ = qubits_for(static_cast<std::size_t>(entries.rows()));
  const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol) {
    throw std::invalid_argument("density matrix is not Hermitian (deviation " +
                                std::to_string(asym) + ")");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
  const double tr = entries_.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw std::invalid_argument("density matrix trace is " + std::to_string(tr));
  }
  const double lo = min_eigenvalue(entries_);
  if (lo < kEigenvalueTol) {
    throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(lo));
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  return DensityMatrix(psi.projector());
}

double DensityMatrix::purity() const { return entries_.cwiseAbs2().sum(); }

ProductStateParams::ProductStateParams(std::vector<double> thetas, std::vector<double> phis)
    : thetas_(std::move(thetas)), phis_(std::move(phis)) {
  if (thetas_.size() != phis_.size()) {
    throw std::invalid_argument("theta and phi rows must have equal length");
  }
  if (thetas_.empty()) throw std::invalid_argument("product state needs at least one qubit");
  for (auto& t : thetas_) t = wrap_angle(t);
  for (auto& p : phis_) p = wrap_angle(p);
}

ProductStateParams ProductStateParams::zeros(int qubits) {
  const auto n = static_cast<std::size_t>(qubits);
  return ProductStateParams(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

void ProductStateParams::set_theta(int qubit, double value) {
  thetas_.at(static_cast<std::size_t>(qubit)) = wrap_angle(value);
}

void ProductStateParams::set_phi(int qubit, double value) {
  phis_.at(static_cast<std::size_t>(qubit)) = wrap_angle(value);
}

Eigen::Vector2cd single_qubit_factor(double theta, double phi) {
  return Eigen::Vector2cd(Complex(std::cos(theta), 0.0), std::polar(std::sin(theta), phi));
}

PureState build_product_state(const ProductStateParams& params) {
  const int n = params.qubits();
  CVector amps(static_cast<Eigen::Index>(dimension_for(n)));
  amps(0) = 1.0;
  Eigen::Index len = 1;
  // Append factors left to right so qubit 0 ends up most significant.
  for (int q = 0; q < n; ++q) {
    const Eigen::Vector2cd f = single_qubit_factor(params.theta(q), params.phi(q));
    for (Eigen::Index k = len - 1; k >= 0; --k) {
      const Complex a = amps(k);
      amps(2 * k) = a * f(0);
      amps(2 * k + 1) = a * f(1);
    }
    len *= 2;
  }
  amps.normalize();
  return PureState(std::move(amps));
}

PureState build_ghz(int qubits) {
  if (qubits < 2) throw std::invalid_argument("GHZ state needs n >= 2");
  const auto dim = static_cast<Eigen::Index>(dimension_for(qubits));
  CVector amps = CVector::Zero(dim);
  amps(0) = amps(dim - 1) = 1.0 / std::sqrt(2.0);
  return PureState(std::move(amps));
}

DensityMatrix build_xmems(int qubits, Complex gamma) {
  if (qubits < 2) throw std::invalid_argument("X-MEMS needs n >= 2");
  const double c = std::abs(gamma);
  if (c > 0.5 + 1e-15) throw std::invalid_argument("X-MEMS requires |gamma| <= 1/2");
  const auto dim = static_cast<Eigen::Index>(dimension_for(qubits));
  const Eigen::Index half = dim / 2;
  const double threshold = 1.0 / static_cast<double>(half + 1);
  double f, g;
  if (c <= threshold) {
    f = g = threshold;
  } else {
    f = c;
    g = (1.0 - 2.0 * c) / static_cast<double>(half - 1);
  }
  CMatrix m = CMatrix::Zero(dim, dim);
  m(0, 0) = f;
  m(dim - 1, dim - 1) = f;
  m(0, dim - 1) = gamma;
  m(dim - 1, 0) = std::conj(gamma);
  for (Eigen::Index k = 1; k < half; ++k) m(k, k) = g;
  return DensityMatrix(m);
}

CMatrix partial_transpose(const CMatrix& op, int qubit) {
  const int n = qubits_for(static_cast<std::size_t>(op.rows()));
  check_qubit(qubit, n);
  const std::size_t mask = bit_of(qubit, n);
  const auto dim = op.rows();
  CMatrix out(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      const std::size_t ti = (ui & ~mask) | (uj & mask);
      const std::size_t tj = (uj & ~mask) | (ui & mask);
      out(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(tj)) = op(i, j);
    }
  }
  return out;
}

CMatrix partial_transpose(const DensityMatrix& rho, int qubit) {
  return partial_transpose(rho.matrix(), qubit);
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  const int n = rho.qubits();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw std::invalid_argument("partial_trace: duplicate qubit index");
  }
  for (int q : kept) check_qubit(q, n);
  std::vector<int> traced;
  for (int q = 0; q < n; ++q) {
    if (!std::binary_search(kept.begin(), kept.end(), q)) traced.push_back(q);
  }

  auto embed = [&](std::size_t kept_index, std::size_t traced_index) {
    std::size_t full = 0;
    const auto k = kept.size();
    for (std::size_t pos = 0; pos < k; ++pos) {
      if ((kept_index >> (k - 1 - pos)) & 1U) full |= bit_of(kept[pos], n);
    }
    const auto t = traced.size();
    for (std::size_t pos = 0; pos < t; ++pos) {
      if ((traced_index >> (t - 1 - pos)) & 1U) full |= bit_of(traced[pos], n);
    }
    return static_cast<Eigen::Index>(full);
  };

  const std::size_t kdim = std::size_t{1} << kept.size();
  const std::size_t tdim = std::size_t{1} << traced.size();
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(kdim), static_cast<Eigen::Index>(kdim));
  for (std::size_t i = 0; i < kdim; ++i) {
    for (std::size_t j = 0; j < kdim; ++j) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < tdim; ++t) acc += rho.matrix()(embed(i, t), embed(j, t));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return DensityMatrix(out);
}

double trace_product(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("trace_product: dimension mismatch");
  }
  // Tr[ab] = sum_ij a_ij b_ji
  return (a.array() * b.transpose().array()).sum().real();
}

double hsd_exact(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("hsd_exact: dimension mismatch");
  const CMatrix diff = rho.matrix() - sigma.matrix();
  return diff.cwiseAbs2().sum();
}

double min_eigenvalue(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

PureState random_pure_state(int qubits, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(dimension_for(qubits));
  CVector amps(dim);
  for (Eigen::Index k = 0; k < dim; ++k) amps(k) = Complex(rng.normal(), rng.normal());
  amps.normalize();
  return PureState(std::move(amps));
}

DensityMatrix random_mixed_state(int qubits, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(dimension_for(qubits));
  std::vector<double> weights(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (auto& w : weights) {
    // Exp(1) variates normalized give the flat Dirichlet.
    w = -std::log(1.0 - rng.uniform());
    total += w;
  }
  CMatrix m = CMatrix::Zero(dim, dim);
  for (auto w : weights) {
    const PureState psi = random_pure_state(qubits, rng);
    m += (w / total) * psi.projector();
  }
  m /= m.trace().real();
  return DensityMatrix(m);
}

ProductStateParams random_product_params(int qubits, Rng& rng) {
  const auto n = static_cast<std::size_t>(qubits);
  std::vector<double> thetas(n), phis(n);
  for (std::size_t q = 0; q < n; ++q) {
    thetas[q] = 0.5 * std::acos(rng.uniform(-1.0, 1.0));
    phis[q] = rng.uniform(0.0, kTwoPi);
  }
  return ProductStateParams(std::move(thetas), std::move(phis));
}

ProductStateParams uniform_angle_params(int qubits, Rng& rng) {
  const auto n = static_cast<std::size_t>(qubits);
  std::vector<double> thetas(n), phis(n);
  for (std::size_t q = 0; q < n; ++q) {
    thetas[q] = rng.uniform(0.0, kTwoPi);
    phis[q] = rng.uniform(0.0, kTwoPi);
  }
  return ProductStateParams(std::move(thetas), std::move(phis));
}

}  // namespace sepvar
