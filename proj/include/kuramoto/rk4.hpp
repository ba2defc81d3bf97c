#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kuramoto/common.hpp"

namespace kuramoto {

// Scratch buffers for one classical RK4 step, reused across steps.
template <class T>
struct Rk4Workspace {
  std::vector<T> k1, k2, k3, k4, tmp;
  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

// One classical RK4 step of y' = rhs(y, t). `rhs(y, t, out)` must write the
// derivative of `y` into `out` without touching `y`.
template <class T, class Rhs>
void rk4_step(std::vector<T>& y, double t, double dt, Rhs&& rhs, Rk4Workspace<T>& w) {
  const std::size_t n = y.size();
  w.resize(n);
  rhs(y, t, w.k1);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + (0.5 * dt) * w.k1[i];
  rhs(w.tmp, t + 0.5 * dt, w.k2);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + (0.5 * dt) * w.k2[i];
  rhs(w.tmp, t + 0.5 * dt, w.k3);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + dt * w.k3[i];
  rhs(w.tmp, t + dt, w.k4);
  const double c = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    y[i] += c * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
}

// Number of equal substeps covering `duration` with step <= dt (up to a
// relative slack of 1e-12, so duration/dt that is an integer to rounding is
// not bumped to the next count).
inline std::size_t substep_count(double duration, double dt) {
  if (duration <= 0.0) return 0;
  const double q = duration / dt;
  auto n = static_cast<std::size_t>(std::ceil(q * (1.0 - 1e-12)));
  return n == 0 ? 1 : n;
}

}  // namespace kuramoto
