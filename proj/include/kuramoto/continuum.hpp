#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/coupling.hpp"
#include "kuramoto/discretization.hpp"
#include "kuramoto/rk4.hpp"

namespace kuramoto {

// Characteristics x(t; theta, omega) of the mean-field transport equation,
// tracked on the atoms of a discretized initial measure. Positions are kept
// reduced to [0, 2*pi); (theta0, omega, weight) stay fixed.
struct CharacteristicEnsemble {
  std::vector<double> theta0;
  std::vector<double> omega;
  std::vector<double> weight;
  std::vector<double> x;
  double t = 0.0;
  double coupling = 1.0;
  CouplingFunction f{};

  std::size_t size() const { return x.size(); }
};

inline CharacteristicEnsemble make_characteristic_ensemble(const DiscretizedMeasure& h,
                                                           double coupling,
                                                           CouplingFunction f = {}) {
  CharacteristicEnsemble e;
  e.coupling = coupling;
  e.f = std::move(f);
  e.theta0.reserve(h.nodes.size());
  e.omega.reserve(h.nodes.size());
  e.weight.reserve(h.nodes.size());
  for (const auto& node : h.nodes) {
    e.theta0.push_back(node.theta);
    e.omega.push_back(node.omega);
    e.weight.push_back(node.weight);
  }
  e.x = e.theta0;
  return e;
}

namespace detail {

// Weighted coupling modes z_l = sum_q w_q e^{i l x_q}, l = 1..lmax.
inline void weighted_modes(std::span<const double> x, std::span<const double> w, int lmax,
                           std::vector<Complex>& u_ws, std::vector<Complex>& z) {
  const std::size_t n = x.size();
  u_ws.resize(n);
  z.assign(static_cast<std::size_t>(lmax), Complex(0.0, 0.0));
  for (std::size_t q = 0; q < n; ++q) {
    u_ws[q] = Complex(std::cos(x[q]), std::sin(x[q]));
    Complex p = u_ws[q];
    for (int l = 1; l <= lmax; ++l) {
      z[static_cast<std::size_t>(l - 1)] += w[q] * p;
      if (l < lmax) p *= u_ws[q];
    }
  }
}

// Transport velocity along each characteristic: node-weighted counterpart of
// the finite-N drift, kept as an independent implementation.
inline void characteristic_rhs(std::span<const double> x, std::span<const double> omega,
                               std::span<const double> w, double coupling,
                               const CouplingFunction& f, std::vector<Complex>& u_ws,
                               std::vector<Complex>& z_ws, std::span<double> out) {
  const int lmax = f.max_mode();
  weighted_modes(x, w, lmax, u_ws, z_ws);
  const double f0 = f.constant_term();
  const std::size_t n = x.size();
  for (std::size_t q = 0; q < n; ++q) {
    double force = f0;
    Complex p(1.0, 0.0);
    int lcur = 0;
    for (const auto& mode : f.positive_modes()) {
      while (lcur < mode.l) {
        p *= u_ws[q];
        ++lcur;
      }
      const Complex t = mode.coeff * z_ws[static_cast<std::size_t>(mode.l - 1)] * std::conj(p);
      force += 2.0 * t.real();
    }
    out[q] = omega[q] + coupling * force;
  }
}

}  // namespace detail

// Integrate the ensemble in place for `duration` with RK4 steps of size <= dt.
inline void advance_characteristics(CharacteristicEnsemble& e, double duration, double dt) {
  const std::size_t n_steps = substep_count(duration, dt);
  if (n_steps == 0) return;
  const double h = duration / static_cast<double>(n_steps);
  Rk4Workspace<double> ws;
  std::vector<Complex> u_ws, z_ws;
  auto deriv = [&](const std::vector<double>& y, double, std::vector<double>& out) {
    out.resize(y.size());
    detail::characteristic_rhs(y, e.omega, e.weight, e.coupling, e.f, u_ws, z_ws, out);
  };
  const double t0 = e.t;
  for (std::size_t k = 0; k < n_steps; ++k) {
    rk4_step(e.x, t0 + static_cast<double>(k) * h, h, deriv, ws);
    for (auto& xv : e.x) {
      if (!std::isfinite(xv))
        throw NumericsError("characteristic positions became non-finite during integration");
      xv = wrap_angle(xv);
    }
  }
  e.t = t0 + duration;
}

// Weighted phase moment Z^0_k = sum_q w_q e^{i k x_q}; negative k by exact
// conjugation.
inline Complex continuum_phase_moment(const CharacteristicEnsemble& e, long k) {
  const double kk = static_cast<double>(std::labs(k));
  Complex acc(0.0, 0.0);
  for (std::size_t q = 0; q < e.size(); ++q)
    acc += e.weight[q] * Complex(std::cos(kk * e.x[q]), std::sin(kk * e.x[q]));
  return k < 0 ? std::conj(acc) : acc;
}

// Z^m_k = sum_q w_q P_m(omega_q) e^{i k x_q}.
inline Complex continuum_moment(const CharacteristicEnsemble& e,
                                const RecurrenceCoefficients& rc, std::size_t m, long k) {
  const double kk = static_cast<double>(std::labs(k));
  std::vector<double> p(m + 1);
  Complex acc(0.0, 0.0);
  for (std::size_t q = 0; q < e.size(); ++q) {
    eval_poly_all(rc, m, e.omega[q], p);
    acc += e.weight[q] * p[m] * Complex(std::cos(kk * e.x[q]), std::sin(kk * e.x[q]));
  }
  return k < 0 ? std::conj(acc) : acc;
}

// Per-step history of a characteristics run. positions[i] are the wrapped
// node positions at times[i]; modes[i] are the coupling modes z_1..z_lmax
// used by the density reconstruction.
struct CharacteristicSeries {
  DiscretizedMeasure initial;
  double coupling = 0.0;
  CouplingFunction f{};
  std::vector<double> times;
  std::vector<std::vector<double>> positions;
  std::vector<std::vector<Complex>> modes;

  std::size_t size() const { return initial.nodes.size(); }
};

inline CharacteristicSeries integrate_characteristics(const DiscretizedMeasure& h,
                                                      double coupling,
                                                      const CouplingFunction& f,
                                                      double t_end, double dt,
                                                      std::size_t snapshot_stride = 1) {
  if (snapshot_stride == 0) snapshot_stride = 1;
  CharacteristicSeries series;
  series.initial = h;
  series.coupling = coupling;
  series.f = f;
  CharacteristicEnsemble e = make_characteristic_ensemble(h, coupling, f);
  const std::size_t n_steps = substep_count(t_end, dt);
  const double step = n_steps ? t_end / static_cast<double>(n_steps) : 0.0;
  std::vector<Complex> u_ws, z_ws;
  auto snapshot = [&](double t) {
    series.times.push_back(t);
    series.positions.push_back(e.x);
    std::vector<Complex> z;
    detail::weighted_modes(e.x, e.weight, e.f.max_mode(), u_ws, z);
    series.modes.push_back(std::move(z));
  };
  snapshot(0.0);
  for (std::size_t k = 0; k < n_steps; ++k) {
    advance_characteristics(e, step, step);
    if ((k + 1) % snapshot_stride == 0 || k + 1 == n_steps)
      snapshot(static_cast<double>(k + 1) * step);
  }
  return series;
}

// Ensemble as of stored snapshot i.
inline CharacteristicEnsemble ensemble_at(const CharacteristicSeries& series, std::size_t i) {
  if (i >= series.times.size())
    throw std::invalid_argument("ensemble_at: snapshot index out of range");
  CharacteristicEnsemble e = make_characteristic_ensemble(series.initial, series.coupling,
                                                          series.f);
  e.x = series.positions[i];
  e.t = series.times[i];
  return e;
}

namespace detail {

inline std::size_t snapshot_index(const CharacteristicSeries& series, double t) {
  for (std::size_t i = 0; i < series.times.size(); ++i)
    if (std::abs(series.times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  throw std::invalid_argument("requested time is not on the stored snapshot grid");
}

}  // namespace detail

// Weak-solution density along each characteristic at stored time t:
//   rho_q(t) = h(theta0_q, omega_q) * exp(K * I_q),
//   I_q = integral_0^t sum_{l>=1} 2 Re(i l f_l z_l(s) e^{-i l x_q(s)}) ds,
// the integral taken along the stored history (trapezoid; integrates exactly
// the divergence of the transport velocity). Requires snapshot_stride == 1
// history for accuracy.
inline std::vector<double> density_along_characteristics(
    const CharacteristicSeries& series, const std::function<double(double, double)>& h_density,
    double t) {
  const std::size_t it = detail::snapshot_index(series, t);
  const std::size_t n = series.size();
  const auto& f_modes = series.f.positive_modes();
  std::vector<double> accum(n, 0.0), g_prev(n, 0.0), g_cur(n, 0.0);
  auto integrand = [&](std::size_t snap, std::vector<double>& g) {
    const auto& x = series.positions[snap];
    const auto& z = series.modes[snap];
    for (std::size_t q = 0; q < n; ++q) {
      double s = 0.0;
      const Complex u(std::cos(x[q]), std::sin(x[q]));
      Complex p(1.0, 0.0);
      int lcur = 0;
      for (const auto& mode : f_modes) {
        while (lcur < mode.l) {
          p *= u;
          ++lcur;
        }
        const Complex term = Complex(0.0, static_cast<double>(mode.l)) * mode.coeff *
                             z[static_cast<std::size_t>(mode.l - 1)] * std::conj(p);
        s += 2.0 * term.real();
      }
      g[q] = s;
    }
  };
  integrand(0, g_prev);
  for (std::size_t snap = 1; snap <= it; ++snap) {
    integrand(snap, g_cur);
    const double h = series.times[snap] - series.times[snap - 1];
    for (std::size_t q = 0; q < n; ++q) accum[q] += 0.5 * h * (g_prev[q] + g_cur[q]);
    g_prev.swap(g_cur);
  }
  std::vector<double> rho(n);
  const auto& nodes = series.initial.nodes;
  for (std::size_t q = 0; q < n; ++q)
    rho[q] = h_density(nodes[q].theta, nodes[q].omega) *
             std::exp(series.coupling * accum[q]);
  return rho;
}

namespace detail {

// Derivative of a periodic sample set on an equispaced grid by direct DFT.
inline std::vector<double> spectral_derivative_periodic(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<double> out(n, 0.0);
  const long half = static_cast<long>(n) / 2;
  for (long m = -half + 1; m < half; ++m) {
    if (m == 0) continue;
    Complex dm(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -two_pi * static_cast<double>(m) * static_cast<double>(j) /
                         static_cast<double>(n);
      dm += d[j] * Complex(std::cos(ang), std::sin(ang));
    }
    dm /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = two_pi * static_cast<double>(m) * static_cast<double>(j) /
                         static_cast<double>(n);
      const Complex e(std::cos(ang), std::sin(ang));
      out[j] += (Complex(0.0, static_cast<double>(m)) * dm * e).real();
    }
  }
  return out;
}

}  // namespace detail

// Total mass recovered from the reconstructed density at stored time t, for
// series built on a tensor grid with equispaced phase nodes and a product
// source with densities. Exact transport conserves this at 1.
inline double reconstructed_mass(const CharacteristicSeries& series, double t) {
  const auto& h0 = series.initial;
  if (!h0.source || h0.n_omega == 0 || !h0.equispaced_theta)
    throw std::invalid_argument(
        "reconstructed_mass: needs a tensor discretization of a density measure");
  const MeasureSpec& spec = *h0.source;
  const auto rho = density_along_characteristics(
      series, [&](double th, double om) { return measure_density(spec, th, om); }, t);
  const std::size_t it = detail::snapshot_index(series, t);
  const auto& x = series.positions[it];
  const std::size_t nth = h0.n_theta;
  const double dtheta = two_pi / static_cast<double>(nth);
  double mass = 0.0;
  for (std::size_t i = 0; i < h0.n_omega; ++i) {
    const std::size_t base = i * nth;
    const double omega_i = h0.nodes[base].omega;
    // Block weight v_i = sum_j w_ij.
    double v_i = 0.0;
    for (std::size_t j = 0; j < nth; ++j) v_i += h0.nodes[base + j].weight;
    // Unwrapped displacement x - theta0, periodic in theta0.
    std::vector<double> disp(nth);
    double prev = wrap_symmetric(x[base] - h0.nodes[base].theta);
    disp[0] = prev;
    for (std::size_t j = 1; j < nth; ++j) {
      const double raw = x[base + j] - h0.nodes[base + j].theta;
      prev += wrap_symmetric(raw - prev);
      disp[j] = prev;
    }
    const auto dprime = detail::spectral_derivative_periodic(disp);
    double row = 0.0;  // integral rho(x, omega_i) dx via initial coordinates
    for (std::size_t j = 0; j < nth; ++j)
      row += dtheta * rho[base + j] * (1.0 + dprime[j]);
    mass += v_i * row / frequency_density(spec.frequency(), omega_i);
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Picard iteration for the characteristics' integral equation

struct PicardResult {
  std::vector<double> t_grid;
  std::vector<double> sup_diffs;                        // d_n, n = 1..n_iters
  std::vector<std::vector<double>> final_iterate;       // [time][node], unwrapped
  std::vector<std::vector<std::vector<double>>> iterates;  // kept on request
};

// Fixed-point iteration x_{n+1} = theta + omega t + K int_0^t F_n ds on the
// given time grid (trapezoid in s). Iterates live on the real line; compare
// against wrapped solvers with angular distance.
inline PicardResult picard_iterate(const DiscretizedMeasure& h, double coupling,
                                   const CouplingFunction& f,
                                   const std::vector<double>& t_grid, std::size_t n_iters,
                                   bool keep_iterates = false) {
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw std::invalid_argument("picard_iterate: time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1])
      throw std::invalid_argument("picard_iterate: time grid must increase");
  const std::size_t nt = t_grid.size();
  const std::size_t n = h.nodes.size();
  PicardResult res;
  res.t_grid = t_grid;

  std::vector<double> theta0(n), omega(n), w(n);
  for (std::size_t q = 0; q < n; ++q) {
    theta0[q] = h.nodes[q].theta;
    omega[q] = h.nodes[q].omega;
    w[q] = h.nodes[q].weight;
  }

  auto free_flow = [&](std::size_t i, std::size_t q) { return theta0[q] + omega[q] * t_grid[i]; };

  std::vector<std::vector<double>> cur(nt, std::vector<double>(n));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t q = 0; q < n; ++q) cur[i][q] = free_flow(i, q);
  if (keep_iterates) res.iterates.push_back(cur);

  std::vector<std::vector<double>> next(nt, std::vector<double>(n));
  std::vector<Complex> u_ws, z_ws;
  std::vector<double> g_prev(n), g_cur(n), accum(n);
  const double f0 = f.constant_term();
  auto force_at = [&](const std::vector<double>& x, std::vector<double>& g) {
    detail::weighted_modes(x, w, f.max_mode(), u_ws, z_ws);
    for (std::size_t q = 0; q < n; ++q) {
      double s = f0;
      const Complex u(std::cos(x[q]), std::sin(x[q]));
      Complex p(1.0, 0.0);
      int lcur = 0;
      for (const auto& mode : f.positive_modes()) {
        while (lcur < mode.l) {
          p *= u;
          ++lcur;
        }
        const Complex term = mode.coeff * z_ws[static_cast<std::size_t>(mode.l - 1)] *
                             std::conj(p);
        s += 2.0 * term.real();
      }
      g[q] = s;
    }
  };

  for (std::size_t it = 0; it < n_iters; ++it) {
    std::fill(accum.begin(), accum.end(), 0.0);
    force_at(cur[0], g_prev);
    for (std::size_t q = 0; q < n; ++q) next[0][q] = theta0[q];
    for (std::size_t i = 1; i < nt; ++i) {
      force_at(cur[i], g_cur);
      const double hstep = t_grid[i] - t_grid[i - 1];
      for (std::size_t q = 0; q < n; ++q) {
        accum[q] += 0.5 * hstep * (g_prev[q] + g_cur[q]);
        next[i][q] = free_flow(i, q) + coupling * accum[q];
      }
      g_prev.swap(g_cur);
    }
    double d = 0.0;
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t q = 0; q < n; ++q) d = std::max(d, std::abs(next[i][q] - cur[i][q]));
    res.sup_diffs.push_back(d);
    cur.swap(next);
    if (keep_iterates) res.iterates.push_back(cur);
  }
  res.final_iterate = std::move(cur);
  return res;
}

// ---------------------------------------------------------------------------
// Continuity of the flow in the initial measure

struct ContinuityProbe {
  double max_observable_diff = 0.0;  // sup_t |int a dh1_t - int a dh2_t|
  double max_node_diff = 0.0;        // sup_t sup_q angular distance of positions
  double growth_bound = 0.0;         // eta e^{2KLT} + (M delta_w / 2L)(e^{2KLT} - 1)
  double measure_delta = 0.0;        // l1 weight distance + weighted node offset
};

// Run two discretizations of nearby initial measures side by side and report
// how far apart they drift, against the a-priori growth bound. The node sets
// must pair up (same size, same frequencies).
inline ContinuityProbe initial_continuity_probe(const DiscretizedMeasure& h1,
                                                const DiscretizedMeasure& h2,
                                                const std::function<double(double, double)>& a,
                                                double t_end, double dt, double coupling,
                                                const CouplingFunction& f = {}) {
  if (h1.nodes.size() != h2.nodes.size())
    throw std::invalid_argument("initial_continuity_probe: node sets must pair up");
  CharacteristicEnsemble e1 = make_characteristic_ensemble(h1, coupling, f);
  CharacteristicEnsemble e2 = make_characteristic_ensemble(h2, coupling, f);
  const std::size_t n = e1.size();
  double eta = 0.0, delta_w = 0.0, delta_pos = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    if (std::abs(e1.omega[q] - e2.omega[q]) > 0.0)
      throw std::invalid_argument("initial_continuity_probe: frequencies must match");
    eta = std::max(eta, angular_distance(e1.x[q], e2.x[q]));
    delta_w += std::abs(e1.weight[q] - e2.weight[q]);
    delta_pos += std::min(e1.weight[q], e2.weight[q]) * angular_distance(e1.x[q], e2.x[q]);
  }
  ContinuityProbe probe;
  probe.measure_delta = delta_w + delta_pos;

  auto observe = [&](const CharacteristicEnsemble& e) {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) s += e.weight[q] * a(e.x[q], e.omega[q]);
    return s;
  };
  auto record = [&]() {
    probe.max_observable_diff =
        std::max(probe.max_observable_diff, std::abs(observe(e1) - observe(e2)));
    for (std::size_t q = 0; q < n; ++q)
      probe.max_node_diff = std::max(probe.max_node_diff, angular_distance(e1.x[q], e2.x[q]));
  };
  record();
  const std::size_t n_steps = substep_count(t_end, dt);
  const double h = n_steps ? t_end / static_cast<double>(n_steps) : 0.0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    advance_characteristics(e1, h, h);
    advance_characteristics(e2, h, h);
    record();
  }

  const double L = f.lipschitz_constant();
  const double M = f.sup_bound();
  const double KL = 2.0 * std::abs(coupling) * L;
  if (KL > 0.0) {
    const double growth = std::exp(KL * t_end);
    probe.growth_bound = eta * growth + (M * delta_w / (2.0 * L)) * (growth - 1.0);
  } else {
    probe.growth_bound = eta + M * delta_w * std::abs(coupling) * t_end;
  }
  return probe;
}

}  // namespace kuramoto
