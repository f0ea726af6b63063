#include "sepvar/vsv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sepvar/rng.hpp"

namespace sepvar {

const char* to_string(UpperOptimizer optimizer) {
  return optimizer == UpperOptimizer::annealing ? "annealing" : "sinusoidal";
}

UpperOptimizer parse_upper_optimizer(const std::string& text) {
  if (text == "annealing") return UpperOptimizer::annealing;
  if (text == "sinusoidal") return UpperOptimizer::sinusoidal;
  throw std::invalid_argument("unknown optimizer '" + text + "' (expected annealing|sinusoidal)");
}

std::size_t VsvConfig::resolved_components(int qubits) const {
  return components ? *components : dimension_for(qubits);
}

void VsvConfig::validate(int qubits) const {
  const std::size_t s = resolved_components(qubits);
  if (s < 1 || s > max_components(qubits)) {
    throw std::invalid_argument("component count must lie in [1, 4^n]");
  }
  if (max_evaluations < 1) throw std::invalid_argument("evaluation budget must be positive");
  if (!(lower_tolerance > 0.0)) throw std::invalid_argument("lower tolerance must be positive");
  if (!(restart_threshold >= 0.0)) throw std::invalid_argument("restart threshold must be >= 0");
  const auto& a = annealing;
  if (!(a.initial_temperature > 0.0)) throw std::invalid_argument("initial temperature must be positive");
  if (!(a.visiting_param > 1.0 && a.visiting_param < 3.0)) {
    throw std::invalid_argument("visiting parameter must lie in (1, 3)");
  }
  if (!(a.acceptance_param < 1.0)) throw std::invalid_argument("acceptance parameter must be < 1");
  if (!(a.restart_temperature_ratio > 0.0 && a.restart_temperature_ratio < 1.0)) {
    throw std::invalid_argument("restart temperature ratio must lie in (0, 1)");
  }
  if (a.local_search_sweeps < 0) throw std::invalid_argument("local search sweeps must be >= 0");
  if (mode == EstimatorMode::shots) shots.validate();
}

// ---------------------------------------------------------------------------

BilevelObjective::BilevelObjective(const DensityMatrix& rho, EstimatorMode mode,
                                   const ShotConfig& shots, double lower_tolerance,
                                   std::int64_t max_evaluations)
    : rho_(rho),
      mode_(mode),
      shots_(shots),
      lower_tolerance_(lower_tolerance),
      max_evaluations_(max_evaluations),
      start_(std::chrono::steady_clock::now()) {
  if (mode_ == EstimatorMode::shots) {
    Rng rng = Rng(shots_.seed).split(0);
    const OverlapEstimate est = sample_overlap(rho_.matrix(), rho_.matrix(), shots_.shots, rng);
    purity_ = std::clamp(est.value, 0.0, 1.0);
    estimator_calls_ += 1;
  }
}

std::optional<UpperState> BilevelObjective::evaluate(std::vector<ProductStateParams> rows,
                                                     const Eigen::VectorXd* warm_start) {
  if (exhausted()) return std::nullopt;
  ShotConfig cfg = shots_;
  cfg.seed = derive_seed(shots_.seed, static_cast<std::uint64_t>(evaluations_) + 1);
  OverlapCache cache = build_cache(rho_, rows, mode_, cfg, purity_);
  return finish(std::move(rows), std::move(cache), warm_start);
}

std::optional<UpperState> BilevelObjective::evaluate_with_row(const UpperState& base,
                                                              std::size_t row,
                                                              const ProductStateParams& params) {
  if (exhausted()) return std::nullopt;
  std::vector<ProductStateParams> rows = base.rows;
  rows.at(row) = params;
  if (mode_ == EstimatorMode::shots) return evaluate(std::move(rows), &base.p);
  OverlapCache cache = rebuild_component(base.cache, rho_, rows, row);
  return finish(std::move(rows), std::move(cache), &base.p);
}

std::optional<UpperState> BilevelObjective::finish(std::vector<ProductStateParams> rows,
                                                   OverlapCache cache,
                                                   const Eigen::VectorXd* warm_start) {
  LowerSolution lower = lower_solve(cache, lower_tolerance_, warm_start);
  ++evaluations_;
  estimator_calls_ += cache.estimator_calls();

  UpperState state{std::move(rows), lower.p, lower.value, std::move(cache)};
  if (!best_ || state.value < best_->value) {
    best_ = state;
    best_lower_ = lower;
  }
  TraceRecord rec;
  rec.iteration = evaluations_;
  rec.proposal_hsd = state.value;
  rec.best_hsd = best_->value;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  rec.evaluations = evaluations_;
  rec.estimator_calls = estimator_calls_;
  trace_.append(rec);
  return state;
}

// ---------------------------------------------------------------------------

std::vector<ParameterIndex> parameter_order(std::size_t components, int qubits) {
  std::vector<ParameterIndex> order;
  order.reserve(components * static_cast<std::size_t>(qubits) * 2);
  for (std::size_t c = 0; c < components; ++c) {
    for (int q = 0; q < qubits; ++q) {
      order.push_back({c, q, AngleKind::theta});
      order.push_back({c, q, AngleKind::phi});
    }
  }
  return order;
}

namespace {

double angle_of(const ProductStateParams& params, const ParameterIndex& index) {
  return index.angle == AngleKind::theta ? params.theta(index.qubit) : params.phi(index.qubit);
}

ProductStateParams with_angle(ProductStateParams params, const ParameterIndex& index,
                              double value) {
  if (index.angle == AngleKind::theta) {
    params.set_theta(index.qubit, value);
  } else {
    params.set_phi(index.qubit, value);
  }
  return params;
}

}  // namespace

CoordinateStep coordinate_sinusoidal_step(BilevelObjective& objective, UpperState& state,
                                          const ParameterIndex& index,
                                          double degenerate_tolerance) {
  if (index.component >= state.rows.size()) {
    throw std::out_of_range("coordinate_sinusoidal_step: component index out of range");
  }
  const auto& row = state.rows[index.component];
  if (index.qubit < 0 || index.qubit >= row.qubits()) {
    throw std::out_of_range("coordinate_sinusoidal_step: qubit index out of range");
  }
  const double k = angle_frequency(index.angle);
  const double origin = angle_of(row, index);

  CoordinateStep step;
  step.samples[0] = state.value;
  auto probe = [&](double offset) {
    return objective.evaluate_with_row(state, index.component,
                                       with_angle(state.rows[index.component], index,
                                                  origin + offset / k));
  };
  auto plus = probe(kSinusoidOffset);
  if (!plus) return step;
  auto minus = probe(-kSinusoidOffset);
  if (!minus) return step;
  step.samples[1] = hsd_from_cache(plus->cache, state.p);
  step.samples[2] = hsd_from_cache(minus->cache, state.p);
  step.fit = fit_sinusoid(step.samples[0], step.samples[1], step.samples[2]);

  // Candidates in evaluation order; strict comparison keeps the earliest.
  UpperState* chosen = &state;
  if (plus->value < chosen->value) chosen = &*plus;
  if (minus->value < chosen->value) chosen = &*minus;

  std::optional<UpperState> fitted;
  if (step.fit.degenerate(degenerate_tolerance)) {
    step.degenerate = true;
  } else {
    step.fitted_offset = step.fit.argmin();
    fitted = probe(step.fitted_offset);
    if (!fitted) return step;
    if (fitted->value < chosen->value) chosen = &*fitted;
  }
  step.completed = true;
  if (chosen != &state) {
    state = std::move(*chosen);
    step.moved = true;
  }
  return step;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ProductStateParams> random_rows(std::size_t s, int qubits, Rng& rng) {
  std::vector<ProductStateParams> rows;
  rows.reserve(s);
  for (std::size_t i = 0; i < s; ++i) rows.push_back(uniform_angle_params(qubits, rng));
  return rows;
}

/// Extrapolates along the displacement of the last sweep, doubling the step
/// while the cost keeps falling. Returns false when the budget ran out.
bool pattern_move(BilevelObjective& objective, UpperState& state,
                  const std::vector<ProductStateParams>& start,
                  const std::vector<ParameterIndex>& order) {
  std::vector<double> step(order.size());
  bool any = false;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& index = order[k];
    step[k] = std::remainder(angle_of(state.rows[index.component], index) -
                                 angle_of(start[index.component], index),
                             kTwoPi);
    any = any || step[k] != 0.0;
  }
  if (!any) return true;
  const std::vector<ProductStateParams> origin = state.rows;
  for (double scale = 1.0; scale <= 16.0; scale *= 2.0) {
    std::vector<ProductStateParams> rows = origin;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& index = order[k];
      auto& row = rows[index.component];
      row = with_angle(row, index, angle_of(row, index) + scale * step[k]);
    }
    auto trial = objective.evaluate(std::move(rows), &state.p);
    if (!trial) return false;
    if (!(trial->value < state.value)) break;
    state = std::move(*trial);
  }
  return true;
}

/// Runs sinusoidal sweeps from `state` until a sweep gains less than
/// `threshold`, `max_sweeps` is hit (negative: unlimited) or the budget ends.
/// Returns false when the budget ran out.
bool sinusoidal_descent(BilevelObjective& objective, UpperState& state,
                        const std::vector<ParameterIndex>& order, double threshold,
                        int max_sweeps) {
  for (int sweep = 0; max_sweeps < 0 || sweep < max_sweeps; ++sweep) {
    const double before = state.value;
    const std::vector<ProductStateParams> start = state.rows;
    for (const auto& index : order) {
      if (!coordinate_sinusoidal_step(objective, state, index).completed) return false;
    }
    if (!pattern_move(objective, state, start, order)) return false;
    if (before - state.value < threshold) break;
  }
  return true;
}

void run_sinusoidal(BilevelObjective& objective, const VsvConfig& cfg, std::size_t s,
                    Rng& rng) {
  const int n = objective.qubits();
  const auto order = parameter_order(s, n);
  constexpr double kDeadWeight = 1e-9;
  constexpr int kMaxIdleReseeds = 5;
  while (!objective.exhausted()) {
    auto state = objective.evaluate(random_rows(s, n, rng));
    if (!state) return;
    int idle = 0;
    while (true) {
      const double before = state->value;
      if (!sinusoidal_descent(objective, *state, order, cfg.restart_threshold, -1)) return;
      idle = before - state->value < cfg.restart_threshold ? idle + 1 : 0;
      // Components the lower level switched off cost nothing to replace.
      std::vector<ProductStateParams> rows = state->rows;
      bool reseeded = false;
      for (std::size_t i = 0; i < s; ++i) {
        if (state->p(static_cast<Eigen::Index>(i)) < kDeadWeight) {
          rows[i] = uniform_angle_params(n, rng);
          reseeded = true;
        }
      }
      if (!reseeded || idle >= kMaxIdleReseeds) break;
      auto next = objective.evaluate(std::move(rows), &state->p);
      if (!next) return;
      if (next->value <= state->value) state = std::move(next);
    }
  }
}

/// Tsallis-distributed step generator of generalized simulated annealing.
class VisitingDistribution {
 public:
  explicit VisitingDistribution(double qv) : qv_(qv) {
    const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
    const double factor3 = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    factor4_p_ = std::sqrt(M_PI) * factor2 / (factor3 * (3.0 - qv));
    const double factor5 = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5;
    factor6_ = M_PI * (1.0 - factor5) / std::sin(M_PI * (1.0 - factor5)) / std::exp(std::lgamma(d1));
  }

  double draw(double temperature, Rng& rng) const {
    constexpr double kTailLimit = 1e8;
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4_p_ * factor1;
    double x = rng.normal();
    const double y = rng.normal();
    x *= std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double den = std::exp((qv_ - 1.0) * std::log(std::fabs(y)) / (3.0 - qv_));
    double step = x / den;
    if (!std::isfinite(step) || std::fabs(step) > kTailLimit) {
      step = std::copysign(kTailLimit, step) * rng.uniform();
    }
    return step;
  }

 private:
  double qv_;
  double factor4_p_ = 0.0;
  double factor6_ = 0.0;
};

std::vector<ProductStateParams> visit(const std::vector<ProductStateParams>& rows,
                                      const std::vector<ParameterIndex>& order,
                                      std::optional<std::size_t> single, double temperature,
                                      const VisitingDistribution& dist, Rng& rng) {
  std::vector<ProductStateParams> out = rows;
  auto move = [&](const ParameterIndex& index) {
    auto& row = out[index.component];
    row = with_angle(row, index, angle_of(row, index) + dist.draw(temperature, rng));
  };
  if (single) {
    move(order[*single]);
  } else {
    for (const auto& index : order) move(index);
  }
  return out;
}

void run_annealing(BilevelObjective& objective, const VsvConfig& cfg, std::size_t s, Rng& rng) {
  const auto& sched = cfg.annealing;
  const int n = objective.qubits();
  const auto order = parameter_order(s, n);
  const std::size_t dim = order.size();
  const VisitingDistribution dist(sched.visiting_param);
  const double qv = sched.visiting_param;
  const double qa = sched.acceptance_param;
  const double t1 = std::exp((qv - 1.0) * std::log(2.0)) - 1.0;
  const double restart_temperature = sched.initial_temperature * sched.restart_temperature_ratio;

  while (!objective.exhausted()) {
    auto current = objective.evaluate(random_rows(s, n, rng));
    if (!current) return;
    for (std::int64_t i = 0; !objective.exhausted(); ++i) {
      const double t2 = std::exp((qv - 1.0) * std::log(static_cast<double>(i) + 2.0)) - 1.0;
      const double temperature = sched.initial_temperature * t1 / t2;
      if (temperature < restart_temperature) break;
      const double temperature_step = temperature / static_cast<double>(i + 1);

      const double chain_start_best = objective.best()->value;
      for (std::size_t j = 0; j < 2 * dim; ++j) {
        const std::optional<std::size_t> single =
            j < dim ? std::nullopt : std::optional<std::size_t>(j - dim);
        auto candidate = objective.evaluate(
            visit(current->rows, order, single, temperature, dist, rng), &current->p);
        if (!candidate) return;
        if (candidate->value < current->value) {
          current = std::move(candidate);
          continue;
        }
        const double pqv_temp =
            1.0 - (1.0 - qa) * (candidate->value - current->value) / temperature_step;
        const double pqv = pqv_temp <= 0.0 ? 0.0 : std::exp(std::log(pqv_temp) / (1.0 - qa));
        if (rng.uniform() <= pqv) current = std::move(candidate);
      }

      if (sched.local_search_sweeps > 0 && objective.best()->value < chain_start_best) {
        UpperState polished = *objective.best();
        if (!sinusoidal_descent(objective, polished, order, cfg.restart_threshold,
                                sched.local_search_sweeps)) {
          return;
        }
        if (polished.value < current->value) current = std::move(polished);
      }
    }
  }
}

}  // namespace

VsvResult run_vsv(const DensityMatrix& rho, const VsvConfig& cfg) {
  const int n = rho.qubits();
  cfg.validate(n);
  const std::size_t s = cfg.resolved_components(n);

  BilevelObjective objective(rho, cfg.mode, cfg.shots, cfg.lower_tolerance, cfg.max_evaluations);
  Rng rng = Rng(cfg.seed).split(0x5ea7);
  if (cfg.optimizer == UpperOptimizer::sinusoidal) {
    run_sinusoidal(objective, cfg, s, rng);
  } else {
    run_annealing(objective, cfg, s, rng);
  }

  const UpperState& best = *objective.best();
  VsvResult result{SeparableEnsemble(best.p, best.rows), best.value, std::move(objective.trace()),
                   objective.evaluations(), objective.estimator_calls(),
                   objective.best_lower().kkt_residual, objective.best_lower().converged};
  if (cfg.mode == EstimatorMode::exact) result.hse = std::max(0.0, result.hse);

  auto& meta = result.trace.metadata();
  meta["seed"] = cfg.seed;
  meta["qubits"] = n;
  meta["components"] = s;
  meta["optimizer"] = to_string(cfg.optimizer);
  meta["mode"] = to_string(cfg.mode);
  meta["max_evaluations"] = cfg.max_evaluations;
  meta["lower_tolerance"] = cfg.lower_tolerance;
  if (cfg.mode == EstimatorMode::shots) {
    meta["shots"] = cfg.shots.shots;
    meta["shot_seed"] = cfg.shots.seed;
  }
  if (!cfg.tag.empty()) meta["tag"] = cfg.tag;
  return result;
}

}  // namespace sepvar
