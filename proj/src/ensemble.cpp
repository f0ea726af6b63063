#include "sepvar/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sepvar {

const char* to_string(EstimatorMode mode) {
  return mode == EstimatorMode::exact ? "exact" : "shots";
}

EstimatorMode parse_estimator_mode(const std::string& text) {
  if (text == "exact") return EstimatorMode::exact;
  if (text == "shots") return EstimatorMode::shots;
  throw std::invalid_argument("unknown estimator mode '" + text + "'");
}

std::size_t max_components(int qubits) {
  const std::size_t d = dimension_for(qubits);
  return d * d;
}

SeparableEnsemble::SeparableEnsemble(Eigen::VectorXd p, std::vector<ProductStateParams> components)
    : p_(std::move(p)), components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("ensemble needs at least one component");
  if (static_cast<std::size_t>(p_.size()) != components_.size()) {
    throw std::invalid_argument("ensemble weight count does not match component count");
  }
  qubits_ = components_.front().qubits();
  for (const auto& c : components_) {
    if (c.qubits() != qubits_) throw std::invalid_argument("ensemble components differ in qubit count");
  }
  if (components_.size() > max_components(qubits_)) {
    throw std::invalid_argument("ensemble exceeds 4^n components");
  }
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!(p_(i) >= 0.0 && p_(i) <= 1.0)) {
      throw std::invalid_argument("ensemble weight outside [0, 1]");
    }
  }
  if (std::abs(p_.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("ensemble weights do not sum to one");
  }
  p_ /= p_.sum();
}

SeparableEnsemble SeparableEnsemble::uniform(std::vector<ProductStateParams> components) {
  const auto s = static_cast<Eigen::Index>(components.size());
  if (s == 0) throw std::invalid_argument("ensemble needs at least one component");
  return SeparableEnsemble(Eigen::VectorXd::Constant(s, 1.0 / static_cast<double>(s)),
                           std::move(components));
}

OverlapCache::OverlapCache(double r, Eigen::VectorXd v, Eigen::MatrixXd G, EstimatorMode mode,
                           std::int64_t estimator_calls, std::optional<ShotDiagnostics> shot_info)
    : r_(r),
      v_(std::move(v)),
      G_(std::move(G)),
      mode_(mode),
      estimator_calls_(estimator_calls),
      shot_info_(std::move(shot_info)) {
  if (v_.size() == 0) throw std::invalid_argument("overlap cache needs at least one component");
  if (G_.rows() != v_.size() || G_.cols() != v_.size()) {
    throw std::invalid_argument("overlap cache: G must be s x s");
  }
  if ((G_ - G_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("overlap cache: G is not symmetric");
  }
  for (Eigen::Index i = 0; i < G_.rows(); ++i) {
    if (G_(i, i) != 1.0) throw std::invalid_argument("overlap cache: G diagonal must be 1");
  }
  constexpr double tol = 1e-12;
  if (r_ < -tol || r_ > 1.0 + tol || v_.minCoeff() < -tol || v_.maxCoeff() > 1.0 + tol ||
      G_.minCoeff() < -tol || G_.maxCoeff() > 1.0 + tol) {
    throw std::invalid_argument("overlap cache entries must lie in [0, 1]");
  }
}

std::int64_t cache_estimator_calls(std::size_t components) {
  const auto s = static_cast<std::int64_t>(components);
  return 1 + s + s * (s - 1) / 2;
}

double product_overlap(const ProductStateParams& a, const ProductStateParams& b) {
  if (a.qubits() != b.qubits()) throw std::invalid_argument("product_overlap: qubit mismatch");
  double acc = 1.0;
  for (int q = 0; q < a.qubits(); ++q) {
    const Eigen::Vector2cd fa = single_qubit_factor(a.theta(q), a.phi(q));
    const Eigen::Vector2cd fb = single_qubit_factor(b.theta(q), b.phi(q));
    acc *= std::norm(fa.dot(fb));
  }
  return acc;
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void check_rows(const DensityMatrix& rho, std::span<const ProductStateParams> rows) {
  if (rows.empty()) throw std::invalid_argument("build_cache: no components");
  for (const auto& row : rows) {
    if (row.qubits() != rho.qubits()) {
      throw std::invalid_argument("build_cache: component qubit count differs from rho");
    }
  }
}

}  // namespace

OverlapCache build_cache(const DensityMatrix& rho, std::span<const ProductStateParams> rows,
                         EstimatorMode mode, const ShotConfig& cfg,
                         std::optional<double> known_purity) {
  check_rows(rho, rows);
  const auto s = static_cast<Eigen::Index>(rows.size());
  std::int64_t calls = cache_estimator_calls(rows.size());
  if (known_purity) --calls;

  if (mode == EstimatorMode::exact) {
    const double r = known_purity ? *known_purity : rho.purity();
    Eigen::VectorXd v(s);
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
      const PureState psi = build_product_state(rows[static_cast<std::size_t>(i)]);
      v(i) = clamp01(overlap_exact(rho, psi));
      for (Eigen::Index j = 0; j < i; ++j) {
        G(i, j) = G(j, i) = clamp01(product_overlap(rows[static_cast<std::size_t>(i)],
                                                    rows[static_cast<std::size_t>(j)]));
      }
    }
    return OverlapCache(clamp01(r), std::move(v), std::move(G), mode, calls);
  }

  cfg.validate();
  const Rng base(cfg.seed);
  std::vector<CMatrix> projectors;
  projectors.reserve(rows.size());
  for (const auto& row : rows) projectors.push_back(build_product_state(row).projector());

  ShotDiagnostics diag;
  diag.shots = cfg.shots;
  if (known_purity) {
    diag.raw_r = *known_purity;
  } else {
    Rng rng = base.split(0);
    const OverlapEstimate est = sample_overlap(rho.matrix(), rho.matrix(), cfg.shots, rng);
    diag.raw_r = est.value;
    diag.r_standard_error = est.standard_error;
  }
  diag.raw_v.resize(s);
  diag.v_standard_error.resize(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    Rng rng = base.split(1 + static_cast<std::uint64_t>(i));
    const OverlapEstimate est =
        sample_overlap(rho.matrix(), projectors[static_cast<std::size_t>(i)], cfg.shots, rng);
    diag.raw_v(i) = est.value;
    diag.v_standard_error(i) = est.standard_error;
  }
  diag.raw_G = Eigen::MatrixXd::Identity(s, s);
  diag.G_standard_error = Eigen::MatrixXd::Zero(s, s);
  std::uint64_t pair = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j, ++pair) {
      Rng rng = base.split(1 + static_cast<std::uint64_t>(s) + pair);
      const OverlapEstimate est =
          sample_overlap(projectors[static_cast<std::size_t>(i)],
                         projectors[static_cast<std::size_t>(j)], cfg.shots, rng);
      diag.raw_G(i, j) = diag.raw_G(j, i) = est.value;
      diag.G_standard_error(i, j) = diag.G_standard_error(j, i) = est.standard_error;
    }
  }
  const double r = clamp01(diag.raw_r);
  Eigen::VectorXd v = diag.raw_v.unaryExpr(&clamp01);
  Eigen::MatrixXd G = diag.raw_G.unaryExpr(&clamp01);
  return OverlapCache(r, std::move(v), std::move(G), mode, calls, std::move(diag));
}

OverlapCache rebuild_component(const OverlapCache& base, const DensityMatrix& rho,
                               std::span<const ProductStateParams> rows, std::size_t row) {
  if (base.mode() != EstimatorMode::exact) {
    throw std::invalid_argument("rebuild_component: only exact-mode caches can be patched");
  }
  if (rows.size() != base.components() || row >= rows.size()) {
    throw std::invalid_argument("rebuild_component: component index out of range");
  }
  Eigen::VectorXd v = base.v();
  Eigen::MatrixXd G = base.G();
  const auto i = static_cast<Eigen::Index>(row);
  v(i) = clamp01(overlap_exact(rho, build_product_state(rows[row])));
  for (Eigen::Index j = 0; j < G.rows(); ++j) {
    if (j == i) continue;
    G(i, j) = G(j, i) = clamp01(product_overlap(rows[row], rows[static_cast<std::size_t>(j)]));
  }
  return OverlapCache(base.r(), std::move(v), std::move(G), EstimatorMode::exact,
                      static_cast<std::int64_t>(rows.size()));
}

namespace {

void check_weights(const OverlapCache& cache, const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != cache.components()) {
    throw std::invalid_argument("weight vector length does not match cache");
  }
}

}  // namespace

double ensemble_overlap(const OverlapCache& cache, const Eigen::VectorXd& p) {
  check_weights(cache, p);
  return p.dot(cache.v());
}

double ensemble_purity(const OverlapCache& cache, const Eigen::VectorXd& p) {
  check_weights(cache, p);
  const Eigen::MatrixXd& G = cache.G();
  double diag = 0.0;
  double off = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    diag += p(i) * p(i);
    for (Eigen::Index j = i + 1; j < p.size(); ++j) off += p(i) * p(j) * G(i, j);
  }
  return diag + 2.0 * off;
}

double hsd_from_cache(const OverlapCache& cache, const Eigen::VectorXd& p) {
  return cache.r() + ensemble_purity(cache, p) - 2.0 * ensemble_overlap(cache, p);
}

DensityMatrix densify(const SeparableEnsemble& ensemble) {
  const auto dim = static_cast<Eigen::Index>(dimension_for(ensemble.qubits()));
  CMatrix m = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < ensemble.components(); ++i) {
    const PureState psi = build_product_state(ensemble.rows()[i]);
    m += ensemble.weights()(static_cast<Eigen::Index>(i)) * psi.projector();
  }
  return DensityMatrix(m);
}

}  // namespace sepvar
