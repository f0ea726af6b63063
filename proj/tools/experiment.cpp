#include "experiment.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "sepvar/ensemble.hpp"
#include "sepvar/qga.hpp"
#include "sepvar/reference.hpp"
#include "sepvar/rng.hpp"
#include "sepvar/vsv.hpp"
#include "sepvar/witness.hpp"

namespace sepvar::cli {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string csv_config_line(const ExperimentConfig& cfg) {
  return "# config: " + cfg.to_json().dump() + "\n";
}

std::pair<int, int> parse_int_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw UsageError("bad integer range '" + text + "' (expected a:b)");
  }
}

bool is_xmems(const ExperimentConfig& cfg) { return cfg.state == "xmems"; }

json gamma_json(std::optional<double> g) { return g ? json(*g) : json(nullptr); }

}  // namespace

json ExperimentConfig::to_json() const {
  return json{{"command", command},
              {"state", state},
              {"state_file", state_file},
              {"n", n},
              {"gamma", gamma_json(gamma)},
              {"gamma_range", gamma_range},
              {"n_range", n_range},
              {"mode", mode},
              {"shots", shots},
              {"seed", seed},
              {"budget", budget},
              {"s_components", s_components},
              {"optimizer", optimizer},
              {"trials", trials},
              {"out", out},
              {"tag", tag}};
}

void ExperimentConfig::merge_json(const json& j) {
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "command") continue;
      if (key == "state") state = value.get<std::string>();
      else if (key == "state_file") state_file = value.get<std::string>();
      else if (key == "n") n = value.get<int>();
      else if (key == "gamma") gamma = value.is_null() ? std::nullopt : std::optional(value.get<double>());
      else if (key == "gamma_range") gamma_range = value.get<std::string>();
      else if (key == "n_range") n_range = value.get<std::string>();
      else if (key == "mode") mode = value.get<std::string>();
      else if (key == "shots") shots = value.get<std::int64_t>();
      else if (key == "seed") seed = value.get<std::uint64_t>();
      else if (key == "budget") budget = value.get<std::int64_t>();
      else if (key == "s_components") s_components = value.get<std::int64_t>();
      else if (key == "optimizer") optimizer = value.get<std::string>();
      else if (key == "trials") trials = value.get<std::int64_t>();
      else if (key == "out") out = value.get<std::string>();
      else if (key == "tag") tag = value.get<std::string>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config file: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  if (state != "ghz" && state != "xmems" && state != "file") {
    throw UsageError("--state must be ghz, xmems or file");
  }
  if (state == "file" && state_file.empty()) throw UsageError("--state file needs --state-file");
  if (!is_xmems(*this) && (gamma || !gamma_range.empty())) {
    throw UsageError("--gamma/--gamma-range apply to --state xmems only");
  }
  if (command == "reference table") {
    if (state != "xmems" && state != "ghz") throw UsageError("reference table needs an analytic state");
    const auto [lo, hi] = parse_int_range(n_range);
    if (lo < 2 || hi > 9 || lo > hi) throw UsageError("--n-range must lie within 2:9");
  } else if (state != "file" && (n < 2 || n > 7)) {
    throw UsageError("--n must lie in [2, 7]");
  }
  for (const auto& g : sweep_points(*this)) {
    if (g && !(*g >= 0.0 && *g <= 0.5)) throw UsageError("gamma values must lie in [0, 1/2]");
  }
  try {
    parse_estimator_mode(mode);
    parse_upper_optimizer(optimizer);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (shots < 1) throw UsageError("--shots must be positive");
  if (budget < 1) throw UsageError("--budget must be positive");
  if (trials < 1) throw UsageError("--trials must be positive");
  if (s_components < 0) throw UsageError("--s-components must be positive");
  if (state != "file" && command != "reference table" && s_components > 0 &&
      static_cast<std::size_t>(s_components) > max_components(n)) {
    throw UsageError("--s-components must not exceed 4^n");
  }
  if (out.empty()) throw UsageError("--out must not be empty");
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("bad range '" + text + "' (expected a:b:step)");
    }
  }
  if (parts.size() != 3) throw UsageError("bad range '" + text + "' (expected a:b:step)");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(step > 0.0) || b < a) throw UsageError("range needs a <= b and step > 0");
  std::vector<double> out;
  for (std::int64_t k = 0;; ++k) {
    const double x = a + static_cast<double>(k) * step;
    if (x > b + step / 2.0) break;
    out.push_back(std::min(x, b));
    if (out.size() > 100000) throw UsageError("range has too many points");
  }
  return out;
}

std::vector<std::optional<double>> sweep_points(const ExperimentConfig& cfg) {
  std::vector<std::optional<double>> out;
  if (!cfg.gamma_range.empty()) {
    for (double g : parse_range(cfg.gamma_range)) out.emplace_back(g);
  } else if (cfg.gamma) {
    out.emplace_back(*cfg.gamma);
  } else if (is_xmems(cfg) && cfg.command == "reference table") {
    for (double g : parse_range("0:0.5:0.01")) out.emplace_back(g);
  } else if (is_xmems(cfg)) {
    out.emplace_back(0.5);
  } else {
    out.emplace_back(std::nullopt);
  }
  return out;
}

DensityMatrix load_density_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open state file " + path.string());
  json j;
  try {
    in >> j;
    const int n = j.at("n").get<int>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    const std::size_t d = dimension_for(n);
    if (re.size() != d * d || im.size() != d * d) {
      throw UsageError("state file: re/im must hold 4^n entries");
    }
    const auto D = static_cast<Eigen::Index>(d);
    CMatrix m(D, D);
    for (Eigen::Index r = 0; r < D; ++r) {
      for (Eigen::Index c = 0; c < D; ++c) {
        const auto k = static_cast<std::size_t>(r * D + c);
        m(r, c) = Complex(re[k], im[k]);
      }
    }
    return DensityMatrix(m);
  } catch (const json::exception& e) {
    throw UsageError(std::string("state file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("state file: ") + e.what());
  }
}

DensityMatrix make_state(const ExperimentConfig& cfg, std::optional<double> gamma) {
  if (cfg.state == "ghz") return DensityMatrix::from_pure(build_ghz(cfg.n));
  if (cfg.state == "xmems") return build_xmems(cfg.n, gamma.value_or(0.5));
  DensityMatrix rho = load_density_matrix(cfg.state_file);
  if (rho.qubits() < 2 || rho.qubits() > 7) throw UsageError("state file: n must lie in [2, 7]");
  return rho;
}

std::optional<double> reference_hse(const ExperimentConfig& cfg, std::optional<double> gamma) {
  if (cfg.state == "ghz") return ghz_hse(cfg.n);
  if (cfg.state == "xmems") {
    const double g = gamma.value_or(0.5);
    return cfg.n == 2 ? xmems_css_2q(g).hse : xmems_css_nq(cfg.n, g).hse;
  }
  return std::nullopt;
}

void AtomicOutputs::add(const std::string& name, std::string content) {
  files_.emplace_back(name, std::move(content));
}

void AtomicOutputs::commit() {
  namespace fs = std::filesystem;
  fs::create_directories(dir_);
  std::vector<fs::path> temps;
  std::size_t renamed = 0;
  try {
    for (const auto& [name, content] : files_) {
      const fs::path tmp = dir_ / ("." + name + ".tmp");
      temps.push_back(tmp);
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << content;
      os.close();
      if (!os) throw std::runtime_error("failed to write " + tmp.string());
    }
    for (; renamed < files_.size(); ++renamed) fs::rename(temps[renamed], dir_ / files_[renamed].first);
  } catch (...) {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
    for (std::size_t k = 0; k < renamed; ++k) fs::remove(dir_ / files_[k].first, ec);
    throw;
  }
}

// ---------------------------------------------------------------------------

namespace {

VsvConfig vsv_config(const ExperimentConfig& cfg) {
  VsvConfig v;
  if (cfg.s_components > 0) v.components = static_cast<std::size_t>(cfg.s_components);
  v.optimizer = parse_upper_optimizer(cfg.optimizer);
  v.max_evaluations = cfg.budget;
  v.mode = parse_estimator_mode(cfg.mode);
  v.shots.shots = cfg.shots;
  v.shots.seed = derive_seed(cfg.seed, 1);
  v.seed = cfg.seed;
  v.tag = cfg.tag;
  return v;
}

json ensemble_json(const SeparableEnsemble& e) {
  json thetas = json::array();
  json phis = json::array();
  for (const auto& row : e.rows()) {
    thetas.push_back(std::vector<double>(row.thetas().begin(), row.thetas().end()));
    phis.push_back(std::vector<double>(row.phis().begin(), row.phis().end()));
  }
  return json{{"weights", std::vector<double>(e.weights().data(), e.weights().data() + e.weights().size())},
              {"thetas", thetas},
              {"phis", phis}};
}

json matrix_json(const CMatrix& m) {
  std::vector<double> re, im;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  }
  return json{{"n", qubits_for(static_cast<std::size_t>(m.rows()))}, {"re", re}, {"im", im}};
}

json summary_head(const ExperimentConfig& cfg) {
  return json{{"schema_version", kSchemaVersion}, {"command", cfg.command}, {"config", cfg.to_json()}};
}

std::string gamma_cell(std::optional<double> g) { return g ? number(*g) : ""; }

}  // namespace

void cmd_vsv_run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const VsvConfig vcfg = vsv_config(cfg);
  const auto points = sweep_points(cfg);

  std::ostringstream trace, sweep;
  trace << csv_config_line(cfg) << "point,gamma," << OptimizationTrace::kCsvHeader << '\n';
  sweep << csv_config_line(cfg)
        << "point,gamma,hse,reference,gap,evaluations,estimator_calls,improvements\n";
  json summary = summary_head(cfg);
  summary["results"] = json::array();
  json ensembles = json{{"config", cfg.to_json()}, {"ensembles", json::array()}};

  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto g = points[k];
    const DensityMatrix rho = make_state(cfg, g);
    const VsvResult res = run_vsv(rho, vcfg);
    const auto ref = reference_hse(cfg, g);

    std::ostringstream rows;
    res.trace.write_csv_rows(rows);
    std::istringstream lines(rows.str());
    for (std::string line; std::getline(lines, line);) {
      trace << k << ',' << gamma_cell(g) << ',' << line << '\n';
    }
    sweep << k << ',' << gamma_cell(g) << ',' << number(res.hse) << ','
          << (ref ? number(*ref) : "") << ',' << (ref ? number(res.hse - *ref) : "") << ','
          << res.evaluation_count << ',' << res.estimator_calls << ','
          << res.trace.improvements() << '\n';

    json r{{"point", k},
           {"gamma", gamma_json(g)},
           {"qubits", rho.qubits()},
           {"hse", res.hse},
           {"reference", ref ? json(*ref) : json(nullptr)},
           {"gap", ref ? json(res.hse - *ref) : json(nullptr)},
           {"evaluations", res.evaluation_count},
           {"estimator_calls", res.estimator_calls},
           {"improvements", res.trace.improvements()},
           {"lower_kkt_residual", res.lower_kkt_residual},
           {"lower_converged", res.lower_converged}};
    summary["results"].push_back(r);
    json e = ensemble_json(res.best_ensemble);
    e["point"] = k;
    e["gamma"] = gamma_json(g);
    ensembles["ensembles"].push_back(e);
    log << "vsv point " << k << (g ? " gamma=" + number(*g) : std::string()) << " hse=" << number(res.hse)
        << (ref ? " gap=" + number(res.hse - *ref) : std::string()) << '\n';
  }

  AtomicOutputs outputs(cfg.out);
  outputs.add("trace.csv", trace.str());
  outputs.add("sweep.csv", sweep.str());
  outputs.add("summary.json", summary.dump(2) + "\n");
  outputs.add("ensemble.json", ensembles.dump(2) + "\n");
  outputs.commit();
}

void cmd_qga_run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto points = sweep_points(cfg);
  HaltCriterion halt;
  halt.max_trials = cfg.trials;

  std::ostringstream trace;
  trace << csv_config_line(cfg) << "point,gamma,c_t,c_s,hsd,mixing_weight,modeled_calls\n";
  json summary = summary_head(cfg);
  summary["results"] = json::array();
  summary["modeled_calls_at_1e6_trials"] = qga_call_count(1000000);

  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto g = points[k];
    const DensityMatrix rho = make_state(cfg, g);
    const QgaResult q = run_qga(rho, halt, cfg.seed);
    for (const auto& s : q.successes) {
      trace << k << ',' << gamma_cell(g) << ',' << s.trials << ',' << s.successes << ','
            << number(s.hsd) << ',' << number(s.mixing_weight) << ','
            << number(qga_call_count(std::max<std::int64_t>(1, s.trials))) << '\n';
    }
    const VsvResult v = run_vsv(rho, vsv_config(cfg));
    const auto ref = reference_hse(cfg, g);
    const double modeled = qga_call_count(std::max<std::int64_t>(1, q.state.trials));
    summary["results"].push_back(
        json{{"point", k},
             {"gamma", gamma_json(g)},
             {"qubits", rho.qubits()},
             {"hsd", q.state.hsd},
             {"reference", ref ? json(*ref) : json(nullptr)},
             {"trials", q.state.trials},
             {"successes", q.state.successes},
             {"preselected", q.preselected},
             {"stored_components", q.state.components.size()},
             {"modeled_calls", modeled},
             {"vsv_hse", v.hse},
             {"vsv_evaluations", v.evaluation_count},
             {"vsv_estimator_calls", v.estimator_calls},
             {"modeled_calls_per_vsv_call", modeled / static_cast<double>(v.estimator_calls)}});
    log << "qga point " << k << " hsd=" << number(q.state.hsd) << " c_t=" << q.state.trials
        << " c_s=" << q.state.successes << " vsv_hse=" << number(v.hse) << '\n';
  }

  AtomicOutputs outputs(cfg.out);
  outputs.add("qga_trace.csv", trace.str());
  outputs.add("summary.json", summary.dump(2) + "\n");
  outputs.commit();
}

void cmd_reference_table(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto [lo, hi] = parse_int_range(cfg.n_range);
  std::vector<std::optional<double>> points;
  if (cfg.state == "ghz") {
    points.emplace_back(0.5);
  } else {
    points = sweep_points(cfg);
  }

  std::ostringstream table;
  table << csv_config_line(cfg) << "n,gamma,hse,a,b,abs_delta,bound_2gamma_sq\n";
  json summary = summary_head(cfg);
  summary["results"] = json::array();
  for (int n = lo; n <= hi; ++n) {
    double max_kkt = 0.0;
    double max_excess = -1.0;
    for (const auto& g : points) {
      const CssReference r = n == 2 ? xmems_css_2q(*g) : xmems_css_nq(n, *g);
      const double bound = xmems_hse_bound(*g);
      table << n << ',' << number(*g) << ',' << number(r.hse) << ',' << number(r.params.a) << ','
            << number(r.params.b) << ',' << number(std::abs(r.params.delta)) << ',' << number(bound)
            << '\n';
      max_kkt = std::max(max_kkt, r.kkt_residual);
      max_excess = std::max(max_excess, r.hse - bound);
    }
    summary["results"].push_back(json{{"n", n},
                                      {"ghz_hse", ghz_hse(n)},
                                      {"max_kkt_residual", max_kkt},
                                      {"max_hse_minus_bound", max_excess},
                                      {"points", points.size()}});
    log << "reference n=" << n << " max_kkt=" << number(max_kkt) << '\n';
  }

  AtomicOutputs outputs(cfg.out);
  outputs.add("reference.csv", table.str());
  outputs.add("summary.json", summary.dump(2) + "\n");
  outputs.commit();
}

void cmd_witness_build(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto points = sweep_points(cfg);
  if (points.size() != 1) throw UsageError("witness build takes a single gamma");
  const auto g = points.front();
  const DensityMatrix rho = make_state(cfg, g);

  std::string source;
  std::optional<DensityMatrix> sigma;
  if (cfg.state == "file") {
    sigma = densify(run_vsv(rho, vsv_config(cfg)).best_ensemble);
    source = "vsv";
  } else {
    const double gamma = cfg.state == "ghz" ? 0.5 : g.value_or(0.5);
    const CssReference r = cfg.n == 2 ? xmems_css_2q(gamma) : xmems_css_nq(cfg.n, gamma);
    sigma = css_pattern_matrix(r.params);
    source = "reference";
  }
  WitnessSearch search;
  search.max_restarts = static_cast<int>(std::min<std::int64_t>(cfg.budget, 1000000));
  const Witness w = build_witness(rho, *sigma, search, cfg.seed);

  json summary = summary_head(cfg);
  json result{{"sigma_source", source},
              {"offset", w.offset},
              {"expectation_rho", w.expectation_rho},
              {"hsd_rho_sigma", hsd_exact(rho, *sigma)},
              {"lower_bound_only", w.lower_bound_only},
              {"restarts", w.restarts},
              {"confirmations", w.confirmations}};
  summary["results"] = json::array({result});
  json witness = result;
  witness["config"] = cfg.to_json();
  witness["W"] = matrix_json(w.W);
  witness["sigma"] = matrix_json(sigma->matrix());
  witness["maximizer"] = json{
      {"thetas", std::vector<double>(w.maximizer.thetas().begin(), w.maximizer.thetas().end())},
      {"phis", std::vector<double>(w.maximizer.phis().begin(), w.maximizer.phis().end())}};
  log << "witness offset=" << number(w.offset) << " Tr(W rho)=" << number(w.expectation_rho)
      << (w.lower_bound_only ? " (offset is a lower bound)" : "") << '\n';

  AtomicOutputs outputs(cfg.out);
  outputs.add("witness.json", witness.dump(2) + "\n");
  outputs.add("summary.json", summary.dump(2) + "\n");
  outputs.commit();
}

// ---------------------------------------------------------------------------

namespace {

struct Binding {
  CLI::Option* option;
  std::string key;
  std::function<void(ExperimentConfig&, const ExperimentConfig&)> copy;
};

struct Leaf {
  CLI::App* app = nullptr;
  ExperimentConfig values;
  std::string config_file;
  double gamma = 0.0;
  std::vector<Binding> bindings;
};

void add_options(Leaf& leaf, bool reference) {
  auto* app = leaf.app;
  auto& v = leaf.values;
  auto bind = [&leaf](CLI::Option* opt, std::string key,
                      std::function<void(ExperimentConfig&, const ExperimentConfig&)> copy) {
    leaf.bindings.push_back({opt, std::move(key), std::move(copy)});
  };
  bind(app->add_option("--state", v.state, "ghz | xmems | file"), "state",
       [](auto& c, const auto& s) { c.state = s.state; });
  bind(app->add_option("--state-file", v.state_file, "JSON density matrix {n, re, im}"),
       "state_file", [](auto& c, const auto& s) { c.state_file = s.state_file; });
  bind(app->add_option("--gamma", leaf.gamma, "X-MEMS coherence"), "gamma",
       [&leaf](auto& c, const auto&) { c.gamma = leaf.gamma; });
  bind(app->add_option("--gamma-range", v.gamma_range, "a:b:step, inclusive"), "gamma_range",
       [](auto& c, const auto& s) { c.gamma_range = s.gamma_range; });
  bind(app->add_option("--seed", v.seed, "RNG seed"), "seed",
       [](auto& c, const auto& s) { c.seed = s.seed; });
  bind(app->add_option("--out", v.out, "output directory"), "out",
       [](auto& c, const auto& s) { c.out = s.out; });
  bind(app->add_option("--tag", v.tag, "free-form experiment tag"), "tag",
       [](auto& c, const auto& s) { c.tag = s.tag; });
  app->add_option("--config", leaf.config_file, "JSON config file");
  if (reference) {
    bind(app->add_option("--n-range", v.n_range, "a:b qubit range within 2:9"), "n_range",
         [](auto& c, const auto& s) { c.n_range = s.n_range; });
    return;
  }
  bind(app->add_option("--n", v.n, "qubit count"), "n", [](auto& c, const auto& s) { c.n = s.n; });
  bind(app->add_option("--mode", v.mode, "exact | shots"), "mode",
       [](auto& c, const auto& s) { c.mode = s.mode; });
  bind(app->add_option("--shots", v.shots, "shots per estimator call"), "shots",
       [](auto& c, const auto& s) { c.shots = s.shots; });
  bind(app->add_option("--budget", v.budget, "VSV evaluations / witness restarts"), "budget",
       [](auto& c, const auto& s) { c.budget = s.budget; });
  bind(app->add_option("--s-components", v.s_components, "ensemble size (default 2^n)"),
       "s_components", [](auto& c, const auto& s) { c.s_components = s.s_components; });
  bind(app->add_option("--optimizer", v.optimizer, "annealing | sinusoidal"), "optimizer",
       [](auto& c, const auto& s) { c.optimizer = s.optimizer; });
  bind(app->add_option("--trials", v.trials, "QGA trial states"), "trials",
       [](auto& c, const auto& s) { c.trials = s.trials; });
}

ExperimentConfig resolve(const Leaf& leaf, const std::string& command, std::ostream& err) {
  ExperimentConfig cfg;
  cfg.command = command;
  if (command == "reference table") cfg.state = "xmems";
  std::set<std::string> from_file;
  if (!leaf.config_file.empty()) {
    std::ifstream in(leaf.config_file);
    if (!in) throw UsageError("cannot open config file " + leaf.config_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    cfg.merge_json(j);
    for (const auto& [key, value] : j.items()) from_file.insert(key);
  }
  std::set<std::string> from_cli;
  for (const auto& b : leaf.bindings) {
    if (b.option->count() > 0) {
      b.copy(cfg, leaf.values);
      from_cli.insert(b.key);
    }
  }
  const json resolved = cfg.to_json();
  for (const auto& [key, value] : resolved.items()) {
    if (key == "command") continue;
    const char* source = from_cli.count(key) ? "cli" : from_file.count(key) ? "config" : "default";
    err << "config " << key << '=' << value.dump() << " (" << source << ")\n";
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closest separable state and Hilbert-Schmidt entanglement workbench", "sepvar"};
  app.require_subcommand(1);
  auto* vsv = app.add_subcommand("vsv", "variational separability verifier")->require_subcommand(1);
  auto* qga = app.add_subcommand("qga", "quantum Gilbert algorithm baseline")->require_subcommand(1);
  auto* reference = app.add_subcommand("reference", "analytic references")->require_subcommand(1);
  auto* witness = app.add_subcommand("witness", "entanglement witnesses")->require_subcommand(1);

  struct Command {
    std::string name;
    Leaf leaf;
    void (*run)(const ExperimentConfig&, std::ostream&);
  };
  std::vector<Command> commands(4);
  commands[0] = {"vsv run", {}, &cmd_vsv_run};
  commands[0].leaf.app = vsv->add_subcommand("run", "run the bilevel optimizer");
  commands[1] = {"qga run", {}, &cmd_qga_run};
  commands[1].leaf.app = qga->add_subcommand("run", "run the QGA with a paired VSV run");
  commands[2] = {"reference table", {}, &cmd_reference_table};
  commands[2].leaf.app = reference->add_subcommand("table", "tabulate X-MEMS CSS references");
  commands[3] = {"witness build", {}, &cmd_witness_build};
  commands[3].leaf.app = witness->add_subcommand("build", "build a witness from the CSS");
  for (auto& c : commands) add_options(c.leaf, c.name == "reference table");

  std::vector<const char*> argv{"sepvar"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& c : commands) {
      if (!c.leaf.app->parsed()) continue;
      const ExperimentConfig cfg = resolve(c.leaf, c.name, err);
      c.run(cfg, err);
      out << "wrote " << cfg.out << '\n';
      return 0;
    }
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sepvar::cli
