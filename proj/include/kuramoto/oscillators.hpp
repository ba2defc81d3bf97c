#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/coupling.hpp"
#include "kuramoto/orthopoly.hpp"
#include "kuramoto/rk4.hpp"

namespace kuramoto {

// Finite ensemble of phase oscillators with mean-field coupling
//   dtheta_j/dt = omega_j + K sum_l f_l Zhat_l e^{-il theta_j},
// where Zhat_l is the equal-weight empirical phase moment. Phases are kept
// reduced to [0, 2*pi).
struct OscillatorState {
  std::vector<double> theta;
  std::vector<double> omega;
  double coupling = 1.0;
  CouplingFunction f{};

  std::size_t size() const { return theta.size(); }
};

inline OscillatorState make_state(const std::vector<std::pair<double, double>>& pairs,
                                  double coupling, CouplingFunction f = {}) {
  OscillatorState s;
  s.coupling = coupling;
  s.f = std::move(f);
  s.theta.reserve(pairs.size());
  s.omega.reserve(pairs.size());
  for (const auto& [th, om] : pairs) {
    s.theta.push_back(wrap_angle(th));
    s.omega.push_back(om);
  }
  return s;
}

// Empirical phase moment Zhat^0_k = (1/N) sum_j e^{ik theta_j}. Negative k is
// computed as the exact conjugate of |k|.
inline Complex phase_moment(std::span<const double> theta, long k) {
  const double kk = static_cast<double>(std::labs(k));
  Complex acc(0.0, 0.0);
  for (double th : theta) acc += Complex(std::cos(kk * th), std::sin(kk * th));
  acc /= static_cast<double>(theta.size());
  return k < 0 ? std::conj(acc) : acc;
}

inline Complex phase_moment(const OscillatorState& s, long k) {
  return phase_moment(std::span<const double>(s.theta), k);
}

inline Complex order_parameter(const OscillatorState& s) { return phase_moment(s, 1); }

// Weighted moment Zhat^m_k = (1/N) sum_j P_m(omega_j) e^{ik theta_j}.
inline Complex empirical_moment(const OscillatorState& s, const RecurrenceCoefficients& rc,
                                std::size_t m, long k) {
  const double kk = static_cast<double>(std::labs(k));
  std::vector<double> p(m + 1);
  Complex acc(0.0, 0.0);
  for (std::size_t j = 0; j < s.size(); ++j) {
    eval_poly_all(rc, m, s.omega[j], p);
    acc += p[m] * Complex(std::cos(kk * s.theta[j]), std::sin(kk * s.theta[j]));
  }
  acc /= static_cast<double>(s.size());
  return k < 0 ? std::conj(acc) : acc;
}

namespace detail {

// Mean-field right-hand side in O(lmax * N): aggregate z_l = (1/N) sum u^l,
// then per-node drift omega + K (f_0 + sum_{l>=1} 2 Re(f_l z_l conj(u^l))).
inline void oscillator_rhs(std::span<const double> theta, std::span<const double> omega,
                           double coupling, const CouplingFunction& f,
                           std::vector<Complex>& u_ws, std::span<double> out) {
  const std::size_t n = theta.size();
  const int lmax = f.max_mode();
  u_ws.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    u_ws[j] = Complex(std::cos(theta[j]), std::sin(theta[j]));
  std::vector<Complex> z(static_cast<std::size_t>(lmax), Complex(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    Complex p = u_ws[j];
    for (int l = 1; l <= lmax; ++l) {
      z[static_cast<std::size_t>(l - 1)] += p;
      if (l < lmax) p *= u_ws[j];
    }
  }
  for (auto& v : z) v /= static_cast<double>(n);
  const double f0 = f.constant_term();
  for (std::size_t j = 0; j < n; ++j) {
    double force = f0;
    Complex p(1.0, 0.0);
    int lcur = 0;
    for (const auto& mode : f.positive_modes()) {
      while (lcur < mode.l) {
        p *= u_ws[j];
        ++lcur;
      }
      const Complex t = mode.coeff * z[static_cast<std::size_t>(mode.l - 1)] * std::conj(p);
      force += 2.0 * t.real();
    }
    out[j] = omega[j] + coupling * force;
  }
}

}  // namespace detail

// Drift of every oscillator at the current state.
inline std::vector<double> rhs(const OscillatorState& s) {
  std::vector<double> out(s.size());
  std::vector<Complex> ws;
  detail::oscillator_rhs(s.theta, s.omega, s.coupling, s.f, ws, out);
  return out;
}

// Step small enough to resolve both the fastest rotation and the coupling.
inline double default_time_step(const OscillatorState& s) {
  double wmax = 0.0;
  for (double w : s.omega) wmax = std::max(wmax, std::abs(w));
  return 1e-3 * two_pi / std::max({1.0, wmax, std::abs(s.coupling)});
}

// Integrate in place for `duration` with fixed RK4 steps of size <= dt.
// Phases are re-reduced after every step; non-finite values abort.
inline void advance(OscillatorState& s, double duration, double dt) {
  const std::size_t n_steps = substep_count(duration, dt);
  if (n_steps == 0) return;
  const double h = duration / static_cast<double>(n_steps);
  Rk4Workspace<double> ws;
  std::vector<Complex> u_ws;
  auto deriv = [&](const std::vector<double>& y, double, std::vector<double>& out) {
    out.resize(y.size());
    detail::oscillator_rhs(y, s.omega, s.coupling, s.f, u_ws, out);
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    rk4_step(s.theta, static_cast<double>(k) * h, h, deriv, ws);
    for (auto& th : s.theta) {
      if (!std::isfinite(th))
        throw NumericsError("oscillator state became non-finite during integration");
      th = wrap_angle(th);
    }
  }
}

// Time series of snapshots: phases and order parameter at t = 0, every
// `snapshot_stride` steps, and the final time.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> thetas;
  std::vector<Complex> order_params;
  std::vector<double> omega;
  double coupling = 0.0;
  CouplingFunction f{};
};

inline Trajectory integrate(OscillatorState& s, double t_end, double dt,
                            std::size_t snapshot_stride = 1) {
  if (snapshot_stride == 0) snapshot_stride = 1;
  Trajectory traj;
  traj.omega = s.omega;
  traj.coupling = s.coupling;
  traj.f = s.f;
  const std::size_t n_steps = substep_count(t_end, dt);
  const double h = n_steps ? t_end / static_cast<double>(n_steps) : 0.0;
  auto snapshot = [&](double t) {
    traj.times.push_back(t);
    traj.thetas.push_back(s.theta);
    traj.order_params.push_back(order_parameter(s));
  };
  snapshot(0.0);
  Rk4Workspace<double> ws;
  std::vector<Complex> u_ws;
  auto deriv = [&](const std::vector<double>& y, double, std::vector<double>& out) {
    out.resize(y.size());
    detail::oscillator_rhs(y, s.omega, s.coupling, s.f, u_ws, out);
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    rk4_step(s.theta, static_cast<double>(k) * h, h, deriv, ws);
    for (auto& th : s.theta) {
      if (!std::isfinite(th))
        throw NumericsError("oscillator state became non-finite during integration");
      th = wrap_angle(th);
    }
    if ((k + 1) % snapshot_stride == 0 || k + 1 == n_steps)
      snapshot(static_cast<double>(k + 1) * h);
  }
  return traj;
}

// Residual of the finite-N moment chain at the current state: the time
// derivative of Zhat^m_k minus
//   ik (b_m Z^{m+1}_k + a_m Z^m_k + b_{m-1} Z^{m-1}_k) + ik K sum_l f_l Z^0_l Z^m_{k-l}.
// Exact (to rounding) for every N; requires m + 1 <= rc.m_max().
inline double moment_identity_residual(const OscillatorState& s,
                                       const RecurrenceCoefficients& rc, std::size_t m,
                                       long k) {
  if (m + 1 > rc.m_max())
    throw std::invalid_argument("moment_identity_residual: need coefficients up to m + 1");
  const std::size_t n = s.size();
  const auto drift = rhs(s);
  std::vector<double> p(m + 1);
  Complex lhs(0.0, 0.0);
  const double kk = static_cast<double>(k);
  for (std::size_t j = 0; j < n; ++j) {
    eval_poly_all(rc, m, s.omega[j], p);
    const Complex e(std::cos(kk * s.theta[j]), std::sin(kk * s.theta[j]));
    lhs += p[m] * Complex(0.0, kk) * drift[j] * e;
  }
  lhs /= static_cast<double>(n);

  auto Z = [&](std::size_t mm, long kv) { return empirical_moment(s, rc, mm, kv); };
  Complex ladder = rc.b[m] * Z(m + 1, k) + rc.a[m] * Z(m, k);
  if (m > 0) ladder += rc.b[m - 1] * Z(m - 1, k);
  Complex coupling_sum = s.f.constant_term() * Z(m, k);
  for (const auto& mode : s.f.positive_modes()) {
    coupling_sum += mode.coeff * phase_moment(s, mode.l) * Z(m, k - mode.l);
    coupling_sum += std::conj(mode.coeff) * phase_moment(s, -mode.l) * Z(m, k + mode.l);
  }
  const Complex formula = Complex(0.0, kk) * (ladder + s.coupling * coupling_sum);
  return std::abs(lhs - formula);
}

}  // namespace kuramoto
