#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kuramoto {

using Complex = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

// Thrown when an operation needs moments of a law that has none (heavy tails).
struct MomentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a measure cannot support the requested polynomial degree.
struct DegenerateMeasureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed or inconsistent configuration input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical routine leaves its domain of validity (non-finite
// state, failed convergence).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reduce an angle to [0, 2*pi). fmod is exact in IEEE arithmetic, so equal
// inputs reduce to equal outputs across call sites.
inline double wrap_angle(double x) {
  double y = std::fmod(x, two_pi);
  if (y < 0.0) y += two_pi;
  if (y >= two_pi) y = 0.0;
  return y;
}

// Signed angular distance reduced to (-pi, pi].
inline double wrap_symmetric(double x) {
  double y = std::fmod(x, two_pi);
  if (y > pi) y -= two_pi;
  if (y <= -pi) y += two_pi;
  return y;
}

// Distance on the circle between two angles (inputs need not be reduced).
inline double angular_distance(double a, double b) {
  return std::abs(wrap_symmetric(a - b));
}

namespace detail {

// Gauss-Legendre nodes/weights on [a, b] by Newton iteration on the Legendre
// recurrence. Used for internal integrals (absolute moments, densities); the
// measure-adapted rules live in orthopoly.hpp.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                           std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[i] = xm - xl * z;
    x[n - 1 - i] = xm + xl * z;
    w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace detail

}  // namespace kuramoto
