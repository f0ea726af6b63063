#include "sepvar/qga.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sepvar/ensemble.hpp"
#include "sepvar/rng.hpp"

namespace sepvar {

void HaltCriterion::validate() const {
  if (max_trials < 0 || max_successes < 0 || stall_window < -1 || !(min_improvement >= 0.0)) {
    throw std::invalid_argument("halt criterion: negative bound");
  }
  if (max_trials == 0 && max_successes == 0 && stall_window == 0) {
    throw std::invalid_argument("halt criterion: no finite bound");
  }
}

std::int64_t HaltCriterion::resolved_stall_window(std::int64_t successes) const {
  return stall_window == -1 ? 10 * (successes + 1) : stall_window;
}

QgaState qga_initial(const DensityMatrix& rho, const ProductStateParams& start) {
  if (start.qubits() != rho.qubits()) throw std::invalid_argument("qga: qubit count mismatch");
  QgaState s;
  const PureState psi = build_product_state(start);
  s.components.push_back(start);
  s.weights.push_back(1.0);
  s.current = psi.projector();
  s.rho_purity = rho.purity();
  s.purity = 1.0;
  s.overlap = overlap_exact(rho, psi);
  s.hsd = s.rho_purity + s.purity - 2.0 * s.overlap;
  return s;
}

CandidateOverlaps candidate_overlaps(const QgaState& state, const DensityMatrix& rho,
                                     const ProductStateParams& candidate) {
  const CVector psi = build_product_state(candidate).amplitudes();
  return {psi.dot(rho.matrix() * psi).real(), psi.dot(state.current * psi).real()};
}

bool preselect(const QgaState& state, const CandidateOverlaps& o) {
  return state.purity + o.with_rho > state.overlap + o.with_current;
}

std::optional<double> optimal_mixing_weight(const QgaState& state, const CandidateOverlaps& o) {
  // A = rho - sigma, B = rho_{n-1} - sigma
  const double trBB = state.purity - 2.0 * o.with_current + 1.0;
  if (trBB <= 1e-15) return std::nullopt;
  const double trAB = state.overlap - o.with_rho - o.with_current + 1.0;
  return trAB / trBB;
}

QgaState qga_update(const QgaState& state, const ProductStateParams& candidate,
                    const CandidateOverlaps& o, double p) {
  QgaState next = state;
  const double q = 1.0 - p;
  next.purity = p * p * state.purity + q * q + 2.0 * p * q * o.with_current;
  next.overlap = p * state.overlap + q * o.with_rho;
  next.hsd = next.rho_purity + next.purity - 2.0 * next.overlap;
  for (double& w : next.weights) w *= p;
  next.weights.push_back(q);
  next.mixing.push_back(p);
  next.components.push_back(candidate);
  next.current = p * state.current + q * build_product_state(candidate).projector();
  ++next.successes;
  return next;
}

double qga_expanded_cost(const QgaState& state, const DensityMatrix& rho) {
  const std::size_t m = state.components.size();
  double purity = 0.0;
  double overlap = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double wi = state.weights[i];
    overlap += wi * overlap_exact(rho, build_product_state(state.components[i]));
    purity += wi * wi;
    for (std::size_t j = i + 1; j < m; ++j) {
      purity += 2.0 * wi * state.weights[j] *
                product_overlap(state.components[i], state.components[j]);
    }
  }
  return state.rho_purity + purity - 2.0 * overlap;
}

QgaResult run_qga(const DensityMatrix& rho, const HaltCriterion& halt, std::uint64_t seed) {
  halt.validate();
  Rng rng(seed);
  const int n = rho.qubits();
  QgaResult out;
  out.state = qga_initial(rho, random_product_params(n, rng));
  const auto record = [&](double p) {
    const auto& s = out.state;
    out.successes.push_back({s.trials, s.successes, s.hsd, p});
    TraceRecord rec;
    rec.iteration = s.trials;
    rec.proposal_hsd = s.hsd;
    rec.best_hsd = s.hsd;
    rec.evaluations = s.trials;
    rec.estimator_calls = static_cast<std::int64_t>(s.components.size());
    out.trace.append(rec);
  };
  record(1.0);

  std::int64_t stall = 0;
  while (true) {
    auto& s = out.state;
    if (halt.max_trials > 0 && s.trials >= halt.max_trials) break;
    if (halt.max_successes > 0 && s.successes >= halt.max_successes) break;
    const std::int64_t window = halt.resolved_stall_window(s.successes);
    if (window > 0 && stall >= window) break;

    const ProductStateParams candidate = random_product_params(n, rng);
    ++s.trials;
    ++stall;
    const CandidateOverlaps o = candidate_overlaps(s, rho, candidate);
    if (!preselect(s, o)) continue;
    ++out.preselected;
    const auto p = optimal_mixing_weight(s, o);
    if (!p || *p < 0.0 || *p >= 1.0) continue;
    QgaState next = qga_update(s, candidate, o, *p);
    if (!(next.hsd < s.hsd)) continue;
    const double gain = s.hsd - next.hsd;
    s = std::move(next);
    stall = 0;
    record(*p);
    if (halt.min_improvement > 0.0 && gain < halt.min_improvement) break;
  }
  auto& meta = out.trace.metadata();
  meta["seed"] = seed;
  meta["qubits"] = n;
  meta["max_trials"] = halt.max_trials;
  meta["max_successes"] = halt.max_successes;
  meta["min_improvement"] = halt.min_improvement;
  meta["stall_window"] = halt.stall_window;
  return out;
}

double qga_call_count(std::int64_t trials, double exponent) {
  if (trials < 1) throw std::invalid_argument("qga_call_count: trials must be >= 1");
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw std::invalid_argument("qga_call_count: exponent must lie in (0, 1]");
  }
  const auto ct = static_cast<double>(trials);
  const double spacing = std::pow(ct, 1.0 - exponent);
  // c_s(i) = 1 + floor((i - 1) / spacing); block k covers i - 1 in
  // [(k-1) spacing, k spacing).
  long double total = 0.0L;
  for (std::int64_t k = 1;; ++k) {
    const double lo = std::ceil(static_cast<double>(k - 1) * spacing);
    if (lo >= ct) break;
    const double hi = std::min(ct, std::ceil(static_cast<double>(k) * spacing));
    const long double kk = static_cast<long double>(k);
    total += static_cast<long double>(hi - lo) * kk * (kk + 1.0L) / 2.0L;
  }
  return static_cast<double>(total);
}

}  // namespace sepvar
