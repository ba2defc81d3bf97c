#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/measures.hpp"

namespace kuramoto {

// Three-term recurrence of the polynomials orthonormal under a frequency law:
//   omega P_m = b_m P_{m+1} + a_m P_m + b_{m-1} P_{m-1},  P_0 = 1, b_m > 0.
struct RecurrenceCoefficients {
  std::vector<double> a;  // a_0 .. a_{m_max}
  std::vector<double> b;  // b_0 .. b_{m_max-1}, all positive

  std::size_t m_max() const { return a.empty() ? 0 : a.size() - 1; }
};

struct QuadratureNode {
  double node;
  double weight;
};

namespace detail {

// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL, also
// accumulating the first component of each eigenvector into z (gives Gauss
// weights as z^2 when z starts as (1, 0, ..., 0)).
// d: diagonal (size n), e: subdiagonal (size >= n, e[n-1] scratch).
inline void tridiag_eigen_first_row(std::vector<double>& d, std::vector<double>& e,
                                    std::vector<double>& z) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return;
  e.resize(n);
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-15 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NumericsError("tridiagonal eigensolver failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double bb = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * bb;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - bb;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Orthonormal-polynomial coefficients of the discrete measure sum w_q
// delta(x_q) by the Stieltjes procedure (Lanczos on the node values).
inline RecurrenceCoefficients stieltjes(const std::vector<double>& x,
                                        const std::vector<double>& w,
                                        std::size_t m_max) {
  const std::size_t nq = x.size();
  RecurrenceCoefficients rc;
  rc.a.resize(m_max + 1);
  rc.b.resize(m_max);
  double nu = 0.0;
  for (double v : w) nu += v;
  double xbar = 0.0;
  for (std::size_t q = 0; q < nq; ++q) xbar += w[q] * x[q];
  xbar /= nu;
  // Degeneracy is judged against the spread of the node set, so narrow but
  // genuine measures are not rejected.
  double spread = 0.0;
  for (double v : x) spread = std::max(spread, std::abs(v - xbar));
  std::vector<double> p_prev(nq, 0.0), p_cur(nq, 1.0 / std::sqrt(nu)), r(nq);
  for (std::size_t m = 0; m <= m_max; ++m) {
    double am = 0.0;
    for (std::size_t q = 0; q < nq; ++q) am += w[q] * x[q] * p_cur[q] * p_cur[q];
    rc.a[m] = am;
    if (m == m_max) break;
    for (std::size_t q = 0; q < nq; ++q) {
      r[q] = (x[q] - am) * p_cur[q];
      if (m > 0) r[q] -= rc.b[m - 1] * p_prev[q];
    }
    double b2 = 0.0;
    for (std::size_t q = 0; q < nq; ++q) b2 += w[q] * r[q] * r[q];
    const double bm = std::sqrt(std::max(b2, 0.0));
    if (!(bm > 1e-7 * spread))
      throw DegenerateMeasureError("measure support too small");
    rc.b[m] = bm;
    for (std::size_t q = 0; q < nq; ++q) {
      p_prev[q] = p_cur[q];
      p_cur[q] = r[q] / bm;
    }
  }
  return rc;
}

// Analytic recurrences used only to bootstrap the quadrature that the
// Stieltjes procedure runs on.
inline RecurrenceCoefficients hermite_like(double mean, double sd, std::size_t m_max) {
  RecurrenceCoefficients rc;
  rc.a.assign(m_max + 1, mean);
  rc.b.resize(m_max);
  for (std::size_t n = 0; n < m_max; ++n) rc.b[n] = sd * std::sqrt(static_cast<double>(n + 1));
  return rc;
}

inline RecurrenceCoefficients legendre_like(double lo, double hi, std::size_t m_max) {
  RecurrenceCoefficients rc;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  rc.a.assign(m_max + 1, mid);
  rc.b.resize(m_max);
  for (std::size_t n = 0; n < m_max; ++n) {
    const double nn = static_cast<double>(n + 1);
    rc.b[n] = half * nn / std::sqrt((2.0 * nn - 1.0) * (2.0 * nn + 1.0));
  }
  return rc;
}

inline std::size_t distinct_support_size(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double scale = 1.0;
  for (double v : xs) scale = std::max(scale, std::abs(v));
  std::size_t count = xs.empty() ? 0 : 1;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] - xs[i - 1] > 1e-12 * scale) ++count;
  return count;
}

}  // namespace detail

// Gauss rule adapted to the coefficients: nodes are eigenvalues of the n x n
// Jacobi matrix, weights the squared first eigenvector components. Requires
// n <= m_max + 1. Nodes come back ascending; weights sum to 1.
inline std::vector<QuadratureNode> gauss_nodes(const RecurrenceCoefficients& rc,
                                               std::size_t n) {
  if (n == 0 || n > rc.m_max() + 1)
    throw std::invalid_argument("gauss_nodes: need 1 <= n <= m_max + 1");
  std::vector<double> d(rc.a.begin(), rc.a.begin() + static_cast<long>(n));
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = rc.b[i];
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;
  detail::tridiag_eigen_first_row(d, e, z);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  std::vector<QuadratureNode> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {d[order[i]], z[order[i]] * z[order[i]]};
  return out;
}

namespace detail {

// Quadrature the Stieltjes procedure runs on: exact for atom lists, a
// same-family Gauss rule of the requested size otherwise.
inline std::vector<QuadratureNode> bootstrap_quadrature(const FrequencyLaw& g,
                                                        std::size_t n) {
  if (!has_all_moments(g))
    throw MomentError("moments do not exist for the requested frequency law");
  if (const auto* at = std::get_if<FrequencyAtoms>(&g)) {
    std::vector<QuadratureNode> out;
    out.reserve(at->atoms.size());
    for (const auto& [x, w] : at->atoms) out.push_back({x, w});
    return out;
  }
  if (const auto* gg = std::get_if<GaussianFrequency>(&g))
    return gauss_nodes(hermite_like(gg->mean, gg->sd, n), n);
  if (const auto* u = std::get_if<UniformFrequency>(&g))
    return gauss_nodes(legendre_like(u->lo, u->hi, n), n);
  const auto& b = std::get<BimodalGaussianFrequency>(g);
  auto lo = gauss_nodes(hermite_like(-b.omega0, b.sd, n), n);
  auto hi = gauss_nodes(hermite_like(b.omega0, b.sd, n), n);
  std::vector<QuadratureNode> out;
  out.reserve(2 * n);
  for (const auto& q : lo) out.push_back({q.node, 0.5 * q.weight});
  for (const auto& q : hi) out.push_back({q.node, 0.5 * q.weight});
  std::sort(out.begin(), out.end(),
            [](const QuadratureNode& p, const QuadratureNode& q) { return p.node < q.node; });
  return out;
}

}  // namespace detail

// Recurrence coefficients of the polynomials orthonormal under g, up to
// degree m_max, by the Stieltjes procedure on a bootstrap quadrature of size
// >= 4*m_max + 2. Atom lists must carry at least m_max + 1 distinct points.
inline RecurrenceCoefficients recurrence_coefficients(const FrequencyLaw& g,
                                                      std::size_t m_max) {
  if (!has_all_moments(g))
    throw MomentError("moments do not exist for the requested frequency law");
  if (const auto* at = std::get_if<FrequencyAtoms>(&g)) {
    std::vector<double> xs;
    for (const auto& [x, w] : at->atoms) xs.push_back(x);
    if (detail::distinct_support_size(xs) < m_max + 1)
      throw DegenerateMeasureError("measure support too small");
  }
  const std::size_t nq = std::max<std::size_t>(4 * m_max + 2, 40);
  const auto quad = detail::bootstrap_quadrature(g, nq);
  std::vector<double> x, w;
  x.reserve(quad.size());
  w.reserve(quad.size());
  for (const auto& q : quad) {
    x.push_back(q.node);
    w.push_back(q.weight);
  }
  return detail::stieltjes(x, w, m_max);
}

inline RecurrenceCoefficients recurrence_coefficients(const MeasureSpec& spec,
                                                      std::size_t m_max) {
  return recurrence_coefficients(spec.frequency(), m_max);
}

// Evaluate P_0..P_m at omega into out (out.size() must be m + 1).
inline void eval_poly_all(const RecurrenceCoefficients& rc, std::size_t m, double omega,
                          std::span<double> out) {
  if (m > rc.m_max())
    throw std::invalid_argument("eval_poly: degree exceeds available coefficients");
  out[0] = 1.0;
  if (m == 0) return;
  out[1] = (omega - rc.a[0]) / rc.b[0];
  for (std::size_t j = 1; j < m; ++j)
    out[j + 1] = ((omega - rc.a[j]) * out[j] - rc.b[j - 1] * out[j - 1]) / rc.b[j];
}

inline double eval_poly(const RecurrenceCoefficients& rc, std::size_t m, double omega) {
  std::vector<double> p(m + 1);
  eval_poly_all(rc, m, omega, p);
  return p[m];
}

// Max deviation of the Gram matrix <P_i, P_j>_g from the identity, i, j <=
// m_max, measured with a fresh quadrature (not the bootstrap one).
inline double orthonormality_residual(const RecurrenceCoefficients& rc,
                                      const FrequencyLaw& g, std::size_t m_max) {
  if (m_max > rc.m_max())
    throw std::invalid_argument("orthonormality_residual: degree exceeds coefficients");
  const std::size_t nq = std::max<std::size_t>(4 * m_max + 2, 60);
  const auto quad = detail::bootstrap_quadrature(g, nq);
  const std::size_t dim = m_max + 1;
  std::vector<double> gram(dim * dim, 0.0);
  std::vector<double> p(dim);
  for (const auto& q : quad) {
    eval_poly_all(rc, m_max, q.node, p);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i; j < dim; ++j) gram[i * dim + j] += q.weight * p[i] * p[j];
  }
  double resid = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      const double target = (i == j) ? 1.0 : 0.0;
      resid = std::max(resid, std::abs(gram[i * dim + j] - target));
    }
  return resid;
}

}  // namespace kuramoto
