// Command-line front end: one subcommand per pipeline stage, one JSON config.
// Exit codes: 0 ok, 2 config error, 3 measure/moment/numerics error,
// 4 invalid argument, 1 anything unexpected.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kuramoto/kuramoto.hpp"

namespace {

using namespace kuramoto;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

SimConfig effective_config(const CliOptions& opt) {
  SimConfig cfg = load_config(opt.config_path);
  if (opt.seed) cfg.base_seed = *opt.seed;
  if (opt.out) cfg.out_dir = *opt.out;
  return cfg;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  return out;
}

// Degree needed to evaluate every requested weighted moment.
std::size_t moment_degree(const SimConfig& cfg) {
  std::size_t deg = 0;
  for (const auto& [m, k] : cfg.moments) deg = std::max(deg, m);
  return deg;
}

int run_simulate(const CliOptions& opt) {
  const SimConfig cfg = effective_config(opt);
  const std::filesystem::path dir(cfg.out_dir);
  emit_effective_config(cfg, dir);

  auto s = make_state(sample_pairs(cfg.measure(), cfg.n_list.front(), cfg.base_seed),
                      cfg.coupling, cfg.f);
  const double dt = cfg.dt ? *cfg.dt : default_time_step(s);
  const auto traj = integrate(s, cfg.t_end, dt, cfg.snapshot_stride);

  RecurrenceCoefficients rc;
  const RecurrenceCoefficients* rcp = nullptr;
  if (!cfg.moments.empty()) {
    rc = recurrence_coefficients(cfg.frequency, moment_degree(cfg));
    rcp = &rc;
  }
  auto out = open_output(dir / "trajectory.csv");
  write_trajectory_csv(out, traj, cfg.moments, rcp, "oscillators");
  std::cout << "simulate: N = " << cfg.n_list.front() << ", " << traj.times.size()
            << " snapshots -> " << (dir / "trajectory.csv").string() << "\n";
  return 0;
}

int run_continuum(const CliOptions& opt) {
  const SimConfig cfg = effective_config(opt);
  const std::filesystem::path dir(cfg.out_dir);
  emit_effective_config(cfg, dir);

  const auto h = build_discretization(cfg.measure(), cfg.n_omega, cfg.n_theta);
  const double dt =
      cfg.dt ? *cfg.dt
             : detail::continuum_time_step(make_characteristic_ensemble(h, cfg.coupling, cfg.f));
  const auto series =
      integrate_characteristics(h, cfg.coupling, cfg.f, cfg.t_end, dt, cfg.snapshot_stride);

  RecurrenceCoefficients rc;
  const RecurrenceCoefficients* rcp = nullptr;
  if (!cfg.moments.empty()) {
    rc = recurrence_coefficients(cfg.frequency, moment_degree(cfg));
    rcp = &rc;
  }
  auto out = open_output(dir / "continuum.csv");
  write_trajectory_csv(out, series, cfg.moments, rcp);
  std::cout << "continuum: " << h.nodes.size() << " characteristics, " << series.times.size()
            << " snapshots -> " << (dir / "continuum.csv").string() << "\n";
  return 0;
}

int run_moments(const CliOptions& opt) {
  const SimConfig cfg = effective_config(opt);
  const std::filesystem::path dir(cfg.out_dir);
  emit_effective_config(cfg, dir);

  const auto h = build_discretization(cfg.measure(), cfg.n_omega, cfg.n_theta);
  const auto rc = recurrence_coefficients(cfg.frequency, cfg.m_max);
  const auto lat = init_lattice(h, rc, cfg.m_max, cfg.k_max, cfg.coupling, cfg.f);
  const double dt = cfg.dt ? *cfg.dt : default_time_step(lat);
  const auto series = integrate_moments(lat, cfg.t_end, dt, cfg.snapshot_stride);

  auto out = open_output(dir / "moments.csv");
  write_lattice_csv(out, series);
  if (series.blowup_time)
    std::cerr << "warning: lattice norm crossed " << lattice_blowup_threshold << " at t = "
              << format_float(*series.blowup_time) << "; series truncated there\n";
  std::cout << "moments: lattice " << cfg.m_max << " x " << cfg.k_max << ", "
            << series.times.size() << " snapshots -> " << (dir / "moments.csv").string() << "\n";
  return 0;
}

int run_converge(const CliOptions& opt) {
  const SimConfig cfg = effective_config(opt);
  const std::filesystem::path dir(cfg.out_dir);
  emit_effective_config(cfg, dir);

  const auto report = run_convergence_experiment(cfg);
  emit_report(report, dir);
  for (const auto& f : report.fits)
    std::cout << "fit Z" << f.m << "_" << f.k << " at t = " << f.t << ": p = " << f.p
              << " (stderr " << f.std_err << ")\n";
  std::cout << "converge: " << report.errors.size() << " error rows -> "
            << (dir / "errors.csv").string() << "\n";
  return 0;
}

int run_orthopoly(const CliOptions& opt) {
  const SimConfig cfg = effective_config(opt);
  const std::filesystem::path dir(cfg.out_dir);
  emit_effective_config(cfg, dir);

  const auto rc = recurrence_coefficients(cfg.frequency, cfg.m_max);
  {
    auto out = open_output(dir / "recurrence.csv");
    write_recurrence_csv(out, rc);
  }
  {
    auto out = open_output(dir / "nodes.csv");
    out << "node,weight\n";
    for (const auto& q : gauss_nodes(rc, cfg.m_max + 1))
      out << format_float(q.node) << ',' << format_float(q.weight) << "\n";
  }
  std::cout << "orthopoly: degree " << cfg.m_max << " -> " << (dir / "recurrence.csv").string()
            << ", " << (dir / "nodes.csv").string() << "\n";
  return 0;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const MomentError& e) {
    std::cerr << "error (moments): " << e.what() << "\n";
    return 3;
  } catch (const DegenerateMeasureError& e) {
    std::cerr << "error (measure): " << e.what() << "\n";
    return 3;
  } catch (const NumericsError& e) {
    std::cerr << "error (numerics): " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (invalid argument): " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error (unexpected): " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kuramoto mean-field toolkit: oscillators, characteristics, moment lattice"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->required();
    sub->add_option("--seed", opt.seed, "override the base RNG seed");
    sub->add_option("--out", opt.out, "override the output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate a sampled finite ensemble");
  auto* continuum = app.add_subcommand("continuum", "integrate continuum characteristics");
  auto* moments = app.add_subcommand("moments", "integrate the truncated moment lattice");
  auto* converge = app.add_subcommand("converge", "finite-N vs continuum scaling experiment");
  auto* orthopoly = app.add_subcommand("orthopoly", "emit recurrence coefficients and Gauss rule");
  for (auto* sub : {simulate, continuum, moments, converge, orthopoly}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(simulate)) return guarded([&] { return run_simulate(opt); });
  if (app.got_subcommand(continuum)) return guarded([&] { return run_continuum(opt); });
  if (app.got_subcommand(moments)) return guarded([&] { return run_moments(opt); });
  if (app.got_subcommand(converge)) return guarded([&] { return run_converge(opt); });
  return guarded([&] { return run_orthopoly(opt); });
}
