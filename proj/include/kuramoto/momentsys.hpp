#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/coupling.hpp"
#include "kuramoto/discretization.hpp"
#include "kuramoto/orthopoly.hpp"
#include "kuramoto/rk4.hpp"

namespace kuramoto {

// Square-truncated lattice of moments Z^m_k, 0 <= m <= m_max, 0 <= k <= k_max,
// stored row-major by m. Negative k is the conjugate of +k; indices beyond
// the truncation read as zero (closure). Z^0_0 is pinned at 1 and the whole
// k = 0 column is a constant of motion, so its rows never move.
struct MomentLattice {
  std::size_t m_max = 0;
  std::size_t k_max = 0;
  std::vector<Complex> z;  // (m_max + 1) * (k_max + 1)
  RecurrenceCoefficients coeffs;
  double coupling = 1.0;
  CouplingFunction f{};

  std::size_t index(std::size_t m, std::size_t k) const { return m * (k_max + 1) + k; }

  Complex at(long m, long k) const {
    if (m < 0 || m > static_cast<long>(m_max)) return Complex(0.0, 0.0);
    if (std::labs(k) > static_cast<long>(k_max)) return Complex(0.0, 0.0);
    const Complex v = z[index(static_cast<std::size_t>(m),
                              static_cast<std::size_t>(std::labs(k)))];
    return k < 0 ? std::conj(v) : v;
  }
};

namespace detail {

// Closure read on a raw state span (RK4 stages operate on copies).
inline Complex lattice_at(std::span<const Complex> z, std::size_t m_max, std::size_t k_max,
                          long m, long k) {
  if (m < 0 || m > static_cast<long>(m_max)) return Complex(0.0, 0.0);
  if (std::labs(k) > static_cast<long>(k_max)) return Complex(0.0, 0.0);
  const Complex v = z[static_cast<std::size_t>(m) * (k_max + 1) +
                      static_cast<std::size_t>(std::labs(k))];
  return k < 0 ? std::conj(v) : v;
}

// dZ^m_k/dt = ik (b_m Z^{m+1}_k + a_m Z^m_k + b_{m-1} Z^{m-1}_k)
//           + ik K sum_l f_l Z^0_l Z^m_{k-l},
// with the k = 0 column frozen.
inline void lattice_rhs(std::span<const Complex> z, std::size_t m_max, std::size_t k_max,
                        const RecurrenceCoefficients& rc, double coupling,
                        const CouplingFunction& f, std::span<Complex> out) {
  auto at = [&](long m, long k) { return lattice_at(z, m_max, k_max, m, k); };
  const double f0 = f.constant_term();
  for (std::size_t m = 0; m <= m_max; ++m) {
    out[m * (k_max + 1)] = Complex(0.0, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
      const long lm = static_cast<long>(m);
      const long lk = static_cast<long>(k);
      Complex ladder = rc.a[m] * at(lm, lk);
      if (m < m_max) ladder += rc.b[m] * at(lm + 1, lk);
      if (m > 0) ladder += rc.b[m - 1] * at(lm - 1, lk);
      Complex cs = f0 * at(lm, lk);
      for (const auto& mode : f.positive_modes()) {
        const Complex z0l = at(0, mode.l);
        cs += mode.coeff * z0l * at(lm, lk - mode.l);
        cs += std::conj(mode.coeff) * std::conj(z0l) * at(lm, lk + mode.l);
      }
      out[m * (k_max + 1) + k] =
          Complex(0.0, static_cast<double>(k)) * (ladder + coupling * cs);
    }
  }
}

}  // namespace detail

// Lattice of the moments of a discretized measure. Z^0_0 is set to exactly 1.
// `rc` must carry coefficients up to degree m_max.
inline MomentLattice init_lattice(const DiscretizedMeasure& h,
                                  const RecurrenceCoefficients& rc, std::size_t m_max,
                                  std::size_t k_max, double coupling,
                                  CouplingFunction f = {}) {
  if (rc.m_max() < m_max)
    throw std::invalid_argument("init_lattice: coefficients do not reach m_max");
  MomentLattice lat;
  lat.m_max = m_max;
  lat.k_max = k_max;
  lat.coeffs = rc;
  lat.coupling = coupling;
  lat.f = std::move(f);
  lat.z.assign((m_max + 1) * (k_max + 1), Complex(0.0, 0.0));
  std::vector<double> p(m_max + 1);
  for (const auto& node : h.nodes) {
    eval_poly_all(rc, m_max, node.omega, p);
    for (std::size_t k = 0; k <= k_max; ++k) {
      const double kk = static_cast<double>(k);
      const Complex e(std::cos(kk * node.theta), std::sin(kk * node.theta));
      for (std::size_t m = 0; m <= m_max; ++m)
        lat.z[lat.index(m, k)] += node.weight * p[m] * e;
    }
  }
  lat.z[lat.index(0, 0)] = Complex(1.0, 0.0);
  return lat;
}

inline std::vector<Complex> moments_rhs(const MomentLattice& lat) {
  std::vector<Complex> out(lat.z.size());
  detail::lattice_rhs(lat.z, lat.m_max, lat.k_max, lat.coeffs, lat.coupling, lat.f, out);
  return out;
}

// Step limited by RK4 stability for the skew part of the truncated system:
// |lambda|_max <= k_max (|a|_max + 2 b_max + |K| sum|f_l|).
inline double default_time_step(const MomentLattice& lat) {
  double amax = 0.0, bmax = 0.0;
  for (double v : lat.coeffs.a) amax = std::max(amax, std::abs(v));
  for (double v : lat.coeffs.b) bmax = std::max(bmax, std::abs(v));
  const double lambda = static_cast<double>(lat.k_max) *
                        (amax + 2.0 * bmax + std::abs(lat.coupling) * lat.f.sup_bound());
  const double accuracy = 1e-3 * two_pi / std::max(1.0, std::abs(lat.coupling));
  return lambda > 0.0 ? std::min(accuracy, 0.5 / lambda) : accuracy;
}

// Snapshot history of a lattice integration. If the state norm passed the
// blow-up threshold the run stops early and `blowup_time` holds that time.
struct LatticeSeries {
  std::size_t m_max = 0;
  std::size_t k_max = 0;
  RecurrenceCoefficients coeffs;
  double coupling = 0.0;
  CouplingFunction f{};
  std::vector<double> times;
  std::vector<std::vector<Complex>> states;
  std::optional<double> blowup_time;
};

inline constexpr double lattice_blowup_threshold = 10.0;

inline LatticeSeries integrate_moments(const MomentLattice& lat, double t_end, double dt,
                                       std::size_t snapshot_stride = 1) {
  if (snapshot_stride == 0) snapshot_stride = 1;
  LatticeSeries series;
  series.m_max = lat.m_max;
  series.k_max = lat.k_max;
  series.coeffs = lat.coeffs;
  series.coupling = lat.coupling;
  series.f = lat.f;
  std::vector<Complex> state = lat.z;
  const std::size_t n_steps = substep_count(t_end, dt);
  const double h = n_steps ? t_end / static_cast<double>(n_steps) : 0.0;
  series.times.push_back(0.0);
  series.states.push_back(state);
  Rk4Workspace<Complex> ws;
  auto deriv = [&](const std::vector<Complex>& y, double, std::vector<Complex>& out) {
    out.resize(y.size());
    detail::lattice_rhs(y, lat.m_max, lat.k_max, lat.coeffs, lat.coupling, lat.f, out);
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    rk4_step(state, static_cast<double>(k) * h, h, deriv, ws);
    const double t = static_cast<double>(k + 1) * h;
    double zmax = 0.0;
    bool bad = false;
    for (const auto& v : state) {
      const double av = std::abs(v);
      if (!std::isfinite(av)) {
        bad = true;
        break;
      }
      zmax = std::max(zmax, av);
    }
    if (bad || zmax > lattice_blowup_threshold) {
      series.blowup_time = t;
      series.times.push_back(t);
      series.states.push_back(state);
      return series;
    }
    if ((k + 1) % snapshot_stride == 0 || k + 1 == n_steps) {
      series.times.push_back(t);
      series.states.push_back(state);
    }
  }
  return series;
}

// Lattice view of stored snapshot i.
inline MomentLattice lattice_at(const LatticeSeries& series, std::size_t i) {
  if (i >= series.states.size())
    throw std::invalid_argument("lattice_at: snapshot index out of range");
  MomentLattice lat;
  lat.m_max = series.m_max;
  lat.k_max = series.k_max;
  lat.coeffs = series.coeffs;
  lat.coupling = series.coupling;
  lat.f = series.f;
  lat.z = series.states[i];
  return lat;
}

// Conserved-quantity drift across a stored run.
struct LatticeInvariantReport {
  double z00_error = 0.0;   // max |Z^0_0 - 1|
  double k0_drift = 0.0;    // max_m |Z^m_0(t) - Z^m_0(0)|
  double z0k_excess = 0.0;  // max_k>=1 (|Z^0_k| - 1)
};

inline LatticeInvariantReport invariant_report(const LatticeSeries& series) {
  LatticeInvariantReport rep;
  rep.z0k_excess = -1.0;
  const std::size_t cols = series.k_max + 1;
  const auto& first = series.states.front();
  for (const auto& state : series.states) {
    rep.z00_error = std::max(rep.z00_error, std::abs(state[0] - Complex(1.0, 0.0)));
    for (std::size_t m = 0; m <= series.m_max; ++m)
      rep.k0_drift = std::max(rep.k0_drift, std::abs(state[m * cols] - first[m * cols]));
    for (std::size_t k = 1; k <= series.k_max; ++k)
      rep.z0k_excess = std::max(rep.z0k_excess, std::abs(state[k]) - 1.0);
  }
  return rep;
}

}  // namespace kuramoto
