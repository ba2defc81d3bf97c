#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kuramoto/common.hpp"
#include "kuramoto/continuum.hpp"
#include "kuramoto/csv.hpp"
#include "kuramoto/discretization.hpp"
#include "kuramoto/measures.hpp"
#include "kuramoto/momentsys.hpp"
#include "kuramoto/orthopoly.hpp"
#include "kuramoto/oscillators.hpp"
#include "kuramoto/rng.hpp"

namespace kuramoto {

// ---------------------------------------------------------------------------
// Configuration

// Full run description with defaults applied. `dt` empty means the solvers
// pick their own stability/accuracy-based step.
struct SimConfig {
  PhaseLaw phase = UniformPhase{};
  FrequencyLaw frequency = GaussianFrequency{};
  double coupling = 1.0;
  CouplingFunction f{};

  std::optional<double> dt;
  double t_end = 10.0;
  std::size_t snapshot_stride = 1;

  std::size_t m_max = 24;
  std::size_t k_max = 24;

  std::size_t n_omega = 40;
  std::size_t n_theta = 128;

  std::vector<std::size_t> n_list{100, 400, 1600, 6400};
  std::size_t trials_per_n = 20;
  std::vector<double> observe_times{0.0, 2.0, 5.0};
  std::uint64_t base_seed = 2026;
  std::vector<MomentIndex> moments{{0, 1}};
  double quantile_delta = 0.05;

  std::string out_dir = "out";

  MeasureSpec measure() const { return MeasureSpec(phase, frequency); }
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void require_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key \"" + join_path(path, item.key()) + "\"");
}

inline double get_number(const json& obj, const std::string& key, const std::string& path,
                         double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("key \"" + join_path(path, key) + "\" must be a number");
  return v.get<double>();
}

// Counts arrive as unsigned when parsed from text but signed when a document
// is built in C++, so accept either integer representation.
inline bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

inline std::size_t get_count(const json& obj, const std::string& key, const std::string& path,
                             std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!is_count(v))
    throw ConfigError("key \"" + join_path(path, key) + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline std::vector<std::pair<double, double>> get_atom_list(const json& v,
                                                            const std::string& path) {
  if (!v.is_array() || v.empty())
    throw ConfigError("key \"" + path + "\" must be a nonempty array of [value, weight] pairs");
  std::vector<std::pair<double, double>> out;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError("key \"" + path + "\" must hold [value, weight] number pairs");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

inline PhaseLaw parse_phase_law(const json& obj, const std::string& path) {
  const std::string law = obj.at("law").get<std::string>();
  if (law == "uniform") {
    require_keys(obj, path, {"law"});
    return UniformPhase{};
  }
  if (law == "wrapped-gaussian") {
    require_keys(obj, path, {"law", "center", "concentration"});
    WrappedGaussianPhase p;
    p.center = get_number(obj, "center", path, 0.0);
    p.concentration = get_number(obj, "concentration", path, 1.0);
    return p;
  }
  if (law == "point-mass") {
    require_keys(obj, path, {"law", "theta0"});
    return PointMassPhase{get_number(obj, "theta0", path, 0.0)};
  }
  if (law == "atoms") {
    require_keys(obj, path, {"law", "atoms"});
    if (!obj.contains("atoms"))
      throw ConfigError("missing required keys: " + join_path(path, "atoms"));
    return PhaseAtoms{get_atom_list(obj.at("atoms"), join_path(path, "atoms"))};
  }
  throw ConfigError("key \"" + join_path(path, "law") +
                    "\" must be one of uniform, wrapped-gaussian, point-mass, atoms");
}

inline FrequencyLaw parse_frequency_law(const json& obj, const std::string& path) {
  const std::string law = obj.at("law").get<std::string>();
  if (law == "gaussian") {
    require_keys(obj, path, {"law", "mean", "sd"});
    return GaussianFrequency{get_number(obj, "mean", path, 0.0), get_number(obj, "sd", path, 1.0)};
  }
  if (law == "uniform") {
    require_keys(obj, path, {"law", "lo", "hi"});
    return UniformFrequency{get_number(obj, "lo", path, -1.0), get_number(obj, "hi", path, 1.0)};
  }
  if (law == "atoms") {
    require_keys(obj, path, {"law", "atoms"});
    if (!obj.contains("atoms"))
      throw ConfigError("missing required keys: " + join_path(path, "atoms"));
    return FrequencyAtoms{get_atom_list(obj.at("atoms"), join_path(path, "atoms"))};
  }
  if (law == "bimodal-gaussian") {
    require_keys(obj, path, {"law", "omega0", "sd"});
    return BimodalGaussianFrequency{get_number(obj, "omega0", path, 1.0),
                                    get_number(obj, "sd", path, 1.0)};
  }
  if (law == "lorentzian") {
    require_keys(obj, path, {"law", "center", "gamma"});
    return LorentzianFrequency{get_number(obj, "center", path, 0.0),
                               get_number(obj, "gamma", path, 1.0)};
  }
  throw ConfigError("key \"" + join_path(path, "law") +
                    "\" must be one of gaussian, uniform, atoms, bimodal-gaussian, lorentzian");
}

inline json phase_law_json(const PhaseLaw& law) {
  json j;
  if (std::holds_alternative<UniformPhase>(law)) {
    j["law"] = "uniform";
  } else if (const auto* wg = std::get_if<WrappedGaussianPhase>(&law)) {
    j["law"] = "wrapped-gaussian";
    j["center"] = wg->center;
    j["concentration"] = wg->concentration;
  } else if (const auto* pm = std::get_if<PointMassPhase>(&law)) {
    j["law"] = "point-mass";
    j["theta0"] = pm->theta0;
  } else {
    j["law"] = "atoms";
    json atoms = json::array();
    for (const auto& [x, w] : std::get<PhaseAtoms>(law).atoms) atoms.push_back({x, w});
    j["atoms"] = atoms;
  }
  return j;
}

inline json frequency_law_json(const FrequencyLaw& law) {
  json j;
  if (const auto* g = std::get_if<GaussianFrequency>(&law)) {
    j["law"] = "gaussian";
    j["mean"] = g->mean;
    j["sd"] = g->sd;
  } else if (const auto* u = std::get_if<UniformFrequency>(&law)) {
    j["law"] = "uniform";
    j["lo"] = u->lo;
    j["hi"] = u->hi;
  } else if (const auto* at = std::get_if<FrequencyAtoms>(&law)) {
    j["law"] = "atoms";
    json atoms = json::array();
    for (const auto& [x, w] : at->atoms) atoms.push_back({x, w});
    j["atoms"] = atoms;
  } else if (const auto* b = std::get_if<BimodalGaussianFrequency>(&law)) {
    j["law"] = "bimodal-gaussian";
    j["omega0"] = b->omega0;
    j["sd"] = b->sd;
  } else {
    const auto& lz = std::get<LorentzianFrequency>(law);
    j["law"] = "lorentzian";
    j["center"] = lz.center;
    j["gamma"] = lz.gamma;
  }
  return j;
}

inline CouplingFunction parse_coupling_function(const json& v, const std::string& path) {
  if (v.is_string()) {
    if (v.get<std::string>() == "sin") return CouplingFunction::sine();
    throw ConfigError("key \"" + path + "\" must be \"sin\" or an array of [l, re, im] triples");
  }
  if (!v.is_array())
    throw ConfigError("key \"" + path + "\" must be \"sin\" or an array of [l, re, im] triples");
  std::map<int, Complex> table;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number() ||
        !e[2].is_number())
      throw ConfigError("key \"" + path + "\" must hold [l, re, im] triples");
    table[e[0].get<int>()] = Complex(e[1].get<double>(), e[2].get<double>());
  }
  try {
    return CouplingFunction::from_fourier(table);
  } catch (const std::invalid_argument& err) {
    throw ConfigError("key \"" + path + "\": " + err.what());
  }
}

inline json coupling_function_json(const CouplingFunction& f) {
  if (f.is_sine()) return json("sin");
  json out = json::array();
  if (f.constant_term() != 0.0) out.push_back({0, f.constant_term(), 0.0});
  for (const auto& mode : f.positive_modes())
    out.push_back({mode.l, mode.coeff.real(), mode.coeff.imag()});
  return out;
}

}  // namespace detail

// Parse and validate a config document; defaults fill whatever the document
// leaves out. Unknown keys and missing required keys are hard errors.
inline SimConfig parse_config_json(const nlohmann::json& root) {
  using detail::join_path;
  if (!root.is_object()) throw ConfigError("config root must be an object");
  detail::require_keys(root, "",
                       {"measure", "coupling", "integrator", "truncation", "discretization",
                        "experiment", "output"});
  std::vector<std::string> missing;
  if (!root.contains("measure")) {
    missing.push_back("measure");
  } else {
    const auto& m = root.at("measure");
    if (!m.contains("phase"))
      missing.push_back("measure.phase");
    else if (!m.at("phase").contains("law"))
      missing.push_back("measure.phase.law");
    if (!m.contains("frequency"))
      missing.push_back("measure.frequency");
    else if (!m.at("frequency").contains("law"))
      missing.push_back("measure.frequency.law");
  }
  if (!root.contains("coupling"))
    missing.push_back("coupling");
  else if (!root.at("coupling").contains("K"))
    missing.push_back("coupling.K");
  if (!missing.empty()) {
    std::string msg = "missing required keys: ";
    for (std::size_t i = 0; i < missing.size(); ++i)
      msg += (i ? ", " : "") + missing[i];
    throw ConfigError(msg);
  }

  SimConfig cfg;
  const auto& m = root.at("measure");
  detail::require_keys(m, "measure", {"phase", "frequency"});
  cfg.phase = detail::parse_phase_law(m.at("phase"), "measure.phase");
  cfg.frequency = detail::parse_frequency_law(m.at("frequency"), "measure.frequency");
  validate_phase_law(cfg.phase);
  validate_frequency_law(cfg.frequency);

  const auto& cp = root.at("coupling");
  detail::require_keys(cp, "coupling", {"K", "f"});
  if (!cp.at("K").is_number()) throw ConfigError("key \"coupling.K\" must be a number");
  cfg.coupling = cp.at("K").get<double>();
  if (cp.contains("f")) cfg.f = detail::parse_coupling_function(cp.at("f"), "coupling.f");

  if (root.contains("integrator")) {
    const auto& it = root.at("integrator");
    detail::require_keys(it, "integrator", {"dt", "t_end", "snapshot_stride"});
    if (it.contains("dt")) {
      const auto& dt = it.at("dt");
      if (dt.is_string()) {
        if (dt.get<std::string>() != "auto")
          throw ConfigError("key \"integrator.dt\" must be \"auto\" or a positive number");
        cfg.dt.reset();
      } else if (dt.is_number() && dt.get<double>() > 0.0) {
        cfg.dt = dt.get<double>();
      } else {
        throw ConfigError("key \"integrator.dt\" must be \"auto\" or a positive number");
      }
    }
    cfg.t_end = detail::get_number(it, "t_end", "integrator", cfg.t_end);
    if (cfg.t_end < 0.0) throw ConfigError("key \"integrator.t_end\" must be nonnegative");
    cfg.snapshot_stride = detail::get_count(it, "snapshot_stride", "integrator",
                                            cfg.snapshot_stride);
    if (cfg.snapshot_stride == 0)
      throw ConfigError("key \"integrator.snapshot_stride\" must be positive");
  }

  if (root.contains("truncation")) {
    const auto& tr = root.at("truncation");
    detail::require_keys(tr, "truncation", {"m_max", "k_max"});
    cfg.m_max = detail::get_count(tr, "m_max", "truncation", cfg.m_max);
    cfg.k_max = detail::get_count(tr, "k_max", "truncation", cfg.k_max);
  }

  if (root.contains("discretization")) {
    const auto& d = root.at("discretization");
    detail::require_keys(d, "discretization", {"n_omega", "n_theta"});
    cfg.n_omega = detail::get_count(d, "n_omega", "discretization", cfg.n_omega);
    cfg.n_theta = detail::get_count(d, "n_theta", "discretization", cfg.n_theta);
    if (cfg.n_omega == 0 || cfg.n_theta == 0)
      throw ConfigError("discretization resolutions must be positive");
  }

  if (root.contains("experiment")) {
    const auto& ex = root.at("experiment");
    detail::require_keys(ex, "experiment",
                         {"n_list", "trials_per_n", "observe_times", "base_seed", "moments",
                          "quantile_delta"});
    if (ex.contains("n_list")) {
      const auto& nl = ex.at("n_list");
      if (!nl.is_array() || nl.empty())
        throw ConfigError("key \"experiment.n_list\" must be a nonempty array");
      cfg.n_list.clear();
      for (const auto& v : nl) {
        if (!detail::is_count(v) || v.get<std::size_t>() == 0)
          throw ConfigError("key \"experiment.n_list\" must hold positive integers");
        cfg.n_list.push_back(v.get<std::size_t>());
      }
      std::set<std::size_t> uniq(cfg.n_list.begin(), cfg.n_list.end());
      if (uniq.size() != cfg.n_list.size())
        throw ConfigError("key \"experiment.n_list\" entries must be distinct");
    }
    cfg.trials_per_n = detail::get_count(ex, "trials_per_n", "experiment", cfg.trials_per_n);
    if (cfg.trials_per_n == 0)
      throw ConfigError("key \"experiment.trials_per_n\" must be positive");
    if (ex.contains("observe_times")) {
      const auto& ot = ex.at("observe_times");
      if (!ot.is_array() || ot.empty())
        throw ConfigError("key \"experiment.observe_times\" must be a nonempty array");
      cfg.observe_times.clear();
      for (const auto& v : ot) {
        if (!v.is_number() || v.get<double>() < 0.0)
          throw ConfigError("key \"experiment.observe_times\" must hold nonnegative numbers");
        cfg.observe_times.push_back(v.get<double>());
      }
      std::sort(cfg.observe_times.begin(), cfg.observe_times.end());
      cfg.observe_times.erase(
          std::unique(cfg.observe_times.begin(), cfg.observe_times.end()),
          cfg.observe_times.end());
    }
    if (ex.contains("base_seed")) {
      if (!detail::is_count(ex.at("base_seed")))
        throw ConfigError("key \"experiment.base_seed\" must be a nonnegative integer");
      cfg.base_seed = ex.at("base_seed").get<std::uint64_t>();
    }
    if (ex.contains("moments")) {
      const auto& mm = ex.at("moments");
      if (!mm.is_array() || mm.empty())
        throw ConfigError("key \"experiment.moments\" must be a nonempty array of [m, k]");
      cfg.moments.clear();
      for (const auto& v : mm) {
        if (!v.is_array() || v.size() != 2 || !detail::is_count(v[0]) ||
            !v[1].is_number_integer())
          throw ConfigError("key \"experiment.moments\" must hold [m, k] index pairs");
        const MomentIndex idx{v[0].get<std::size_t>(), v[1].get<long>()};
        if (std::find(cfg.moments.begin(), cfg.moments.end(), idx) == cfg.moments.end())
          cfg.moments.push_back(idx);
      }
    }
    cfg.quantile_delta = detail::get_number(ex, "quantile_delta", "experiment",
                                            cfg.quantile_delta);
    if (!(cfg.quantile_delta > 0.0 && cfg.quantile_delta < 1.0))
      throw ConfigError("key \"experiment.quantile_delta\" must lie in (0, 1)");
  }

  if (root.contains("output")) {
    const auto& out = root.at("output");
    detail::require_keys(out, "output", {"dir"});
    if (out.contains("dir")) {
      if (!out.at("dir").is_string())
        throw ConfigError("key \"output.dir\" must be a string");
      cfg.out_dir = out.at("dir").get<std::string>();
    }
  }
  return cfg;
}

// Config with every default spelled out; parses back to the same config.
inline nlohmann::json to_effective_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["measure"]["phase"] = detail::phase_law_json(cfg.phase);
  j["measure"]["frequency"] = detail::frequency_law_json(cfg.frequency);
  j["coupling"]["K"] = cfg.coupling;
  j["coupling"]["f"] = detail::coupling_function_json(cfg.f);
  if (cfg.dt)
    j["integrator"]["dt"] = *cfg.dt;
  else
    j["integrator"]["dt"] = "auto";
  j["integrator"]["t_end"] = cfg.t_end;
  j["integrator"]["snapshot_stride"] = cfg.snapshot_stride;
  j["truncation"]["m_max"] = cfg.m_max;
  j["truncation"]["k_max"] = cfg.k_max;
  j["discretization"]["n_omega"] = cfg.n_omega;
  j["discretization"]["n_theta"] = cfg.n_theta;
  j["experiment"]["n_list"] = cfg.n_list;
  j["experiment"]["trials_per_n"] = cfg.trials_per_n;
  j["experiment"]["observe_times"] = cfg.observe_times;
  j["experiment"]["base_seed"] = cfg.base_seed;
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& [m, k] : cfg.moments) moments.push_back({m, k});
  j["experiment"]["moments"] = moments;
  j["experiment"]["quantile_delta"] = cfg.quantile_delta;
  j["output"]["dir"] = cfg.out_dir;
  return j;
}

inline bool operator==(const SimConfig& a, const SimConfig& b) {
  return to_effective_json(a) == to_effective_json(b);
}

inline SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config_json(root);
}

inline void emit_effective_config(const SimConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "effective_config.json");
  out << to_effective_json(cfg).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Scaling fit

struct FitResult {
  double p = 0.0;       // slope of log(err) vs log(N)
  double std_err = 0.0; // standard error of the slope
};

// OLS fit of log y against log x. Needs >= 3 distinct x and positive data.
inline FitResult fit_scaling_exponent(const std::vector<std::pair<double, double>>& pts) {
  std::set<double> xs;
  for (const auto& [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::invalid_argument("fit_scaling_exponent: data must be positive");
    xs.insert(x);
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_scaling_exponent: need at least 3 distinct sizes");
  const std::size_t n = pts.size();
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, ssr = 0;
  for (const auto& [x, y] : pts) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  FitResult fit;
  fit.p = sxy / sxx;
  const double intercept = my - fit.p * mx;
  for (const auto& [x, y] : pts) {
    const double r = std::log(y) - (intercept + fit.p * std::log(x));
    ssr += r * r;
  }
  fit.std_err = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Convergence experiment

struct ErrorRow {
  std::size_t n;
  std::size_t trial;
  double t;
  std::size_t m;
  long k;
  double err;
};

struct SummaryRow {
  std::size_t n;
  double t;
  std::size_t m;
  long k;
  double rms;
  double quantile_c;  // (1 - delta) quantile of sqrt(N) * err
};

struct FitRow {
  std::size_t m;
  long k;
  double t;
  double p;
  double std_err;
};

struct ConvergenceReport {
  std::vector<ErrorRow> errors;
  std::vector<SummaryRow> summaries;
  std::vector<FitRow> fits;
};

namespace detail {

template <class Fn>
void parallel_for(std::size_t n_tasks, Fn&& fn) {
  std::size_t n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, n_tasks);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(n_threads);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
}

inline double continuum_time_step(const CharacteristicEnsemble& e) {
  double wmax = 0.0;
  for (double w : e.omega) wmax = std::max(wmax, std::abs(w));
  return 1e-3 * two_pi / std::max({1.0, wmax, std::abs(e.coupling)});
}

}  // namespace detail

// Sampled finite ensembles vs. the continuum reference: per-trial moment
// errors at the observation times, RMS and quantile summaries per size, and
// a scaling-exponent fit per observed moment and time (when >= 3 sizes).
// Deterministic for a fixed config, including under parallel execution.
inline ConvergenceReport run_convergence_experiment(const SimConfig& cfg) {
  const MeasureSpec ms = cfg.measure();
  std::size_t max_m = 0;
  for (const auto& [m, k] : cfg.moments) max_m = std::max(max_m, m);
  const auto rc = recurrence_coefficients(ms.frequency(), max_m);

  const auto& times = cfg.observe_times;
  const std::size_t n_times = times.size();
  const std::size_t n_moms = cfg.moments.size();

  // Continuum reference values at the observation times.
  std::vector<std::vector<Complex>> zref(n_times, std::vector<Complex>(n_moms));
  {
    const auto disc = build_discretization(ms, cfg.n_omega, cfg.n_theta);
    auto ens = make_characteristic_ensemble(disc, cfg.coupling, cfg.f);
    const double dt = cfg.dt ? *cfg.dt : detail::continuum_time_step(ens);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_times; ++i) {
      if (times[i] > prev) advance_characteristics(ens, times[i] - prev, dt);
      prev = times[i];
      for (std::size_t j = 0; j < n_moms; ++j)
        zref[i][j] = continuum_moment(ens, rc, cfg.moments[j].first, cfg.moments[j].second);
    }
  }

  ConvergenceReport report;
  const std::size_t rows_per_trial = n_times * n_moms;
  const std::size_t n_tasks = cfg.n_list.size() * cfg.trials_per_n;
  report.errors.resize(n_tasks * rows_per_trial);

  detail::parallel_for(n_tasks, [&](std::size_t task) {
    const std::size_t in = task / cfg.trials_per_n;
    const std::size_t trial = task % cfg.trials_per_n;
    const std::size_t n = cfg.n_list[in];
    const auto pairs = sample_pairs(ms, n, substream_seed(cfg.base_seed, task));
    OscillatorState state = make_state(pairs, cfg.coupling, cfg.f);
    const double dt = cfg.dt ? *cfg.dt : default_time_step(state);
    double prev = 0.0;
    std::size_t row = task * rows_per_trial;
    for (std::size_t i = 0; i < n_times; ++i) {
      if (times[i] > prev) advance(state, times[i] - prev, dt);
      prev = times[i];
      for (std::size_t j = 0; j < n_moms; ++j) {
        const auto [m, k] = cfg.moments[j];
        const double err = std::abs(empirical_moment(state, rc, m, k) - zref[i][j]);
        report.errors[row++] = ErrorRow{n, trial, times[i], m, k, err};
      }
    }
  });

  // Summaries per (N, t, m, k).
  const std::size_t rank =
      std::min<std::size_t>(cfg.trials_per_n,
                            static_cast<std::size_t>(std::ceil(
                                (1.0 - cfg.quantile_delta) * cfg.trials_per_n)));
  std::vector<double> scaled(cfg.trials_per_n);
  for (std::size_t in = 0; in < cfg.n_list.size(); ++in) {
    const std::size_t n = cfg.n_list[in];
    for (std::size_t i = 0; i < n_times; ++i) {
      for (std::size_t j = 0; j < n_moms; ++j) {
        double sq = 0.0;
        for (std::size_t trial = 0; trial < cfg.trials_per_n; ++trial) {
          const std::size_t row = ((in * cfg.trials_per_n + trial) * n_times + i) * n_moms + j;
          const double err = report.errors[row].err;
          sq += err * err;
          scaled[trial] = std::sqrt(static_cast<double>(n)) * err;
        }
        std::sort(scaled.begin(), scaled.end());
        const double c = scaled[rank == 0 ? 0 : rank - 1];
        report.summaries.push_back(SummaryRow{
            n, times[i], cfg.moments[j].first, cfg.moments[j].second,
            std::sqrt(sq / static_cast<double>(cfg.trials_per_n)), c});
      }
    }
  }

  // Scaling fits per (m, k, t).
  if (cfg.n_list.size() >= 3) {
    for (std::size_t j = 0; j < n_moms; ++j) {
      for (std::size_t i = 0; i < n_times; ++i) {
        std::vector<std::pair<double, double>> pts;
        bool usable = true;
        for (std::size_t in = 0; in < cfg.n_list.size(); ++in) {
          const auto& s = report.summaries[(in * n_times + i) * n_moms + j];
          if (!(s.rms > 0.0)) usable = false;
          pts.emplace_back(static_cast<double>(s.n), s.rms);
        }
        if (!usable) continue;
        const FitResult fit = fit_scaling_exponent(pts);
        report.fits.push_back(
            FitRow{cfg.moments[j].first, cfg.moments[j].second, times[i], fit.p, fit.std_err});
      }
    }
  }
  return report;
}

// Write errors.csv, summary.csv, fit.csv under dir.
inline void emit_report(const ConvergenceReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "errors.csv");
    out << "N,trial,t,m,k,err\n";
    for (const auto& r : report.errors)
      out << r.n << ',' << r.trial << ',' << format_float(r.t) << ',' << r.m << ',' << r.k
          << ',' << format_float(r.err) << "\n";
  }
  {
    std::ofstream out(dir / "summary.csv");
    out << "N,t,m,k,rms,quantile_C\n";
    for (const auto& r : report.summaries)
      out << r.n << ',' << format_float(r.t) << ',' << r.m << ',' << r.k << ','
          << format_float(r.rms) << ',' << format_float(r.quantile_c) << "\n";
  }
  {
    std::ofstream out(dir / "fit.csv");
    out << "m,k,t,p,stderr\n";
    for (const auto& r : report.fits)
      out << r.m << ',' << r.k << ',' << format_float(r.t) << ',' << format_float(r.p) << ','
          << format_float(r.std_err) << "\n";
  }
}

}  // namespace kuramoto
