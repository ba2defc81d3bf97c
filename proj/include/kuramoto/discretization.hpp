#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/measures.hpp"
#include "kuramoto/orthopoly.hpp"

namespace kuramoto {

// Finite atomic approximation sum_q w_q delta(theta_q, omega_q) of an initial
// measure. Weights are positive and sum to 1 (to rounding). When built from a
// product spec the nodes form a tensor grid, omega-major: block i holds the
// n_theta phase nodes attached to omega_i.
struct DiscretizedMeasure {
  struct Node {
    double theta;
    double omega;
    double weight;
  };
  std::vector<Node> nodes;
  std::optional<MeasureSpec> source;  // absent for raw particle ensembles
  std::size_t n_omega = 0;            // tensor metadata; 0 when not a grid
  std::size_t n_theta = 0;
  bool equispaced_theta = false;
};

namespace detail {

// Phase nodes/weights for one omega block, weights summing to 1.
inline void phase_grid(const PhaseLaw& law, std::size_t n_theta,
                       std::vector<double>& theta, std::vector<double>& u,
                       bool& equispaced) {
  theta.clear();
  u.clear();
  equispaced = false;
  if (const auto* pm = std::get_if<PointMassPhase>(&law)) {
    theta.push_back(wrap_angle(pm->theta0));
    u.push_back(1.0);
    return;
  }
  if (const auto* at = std::get_if<PhaseAtoms>(&law)) {
    for (const auto& [th, w] : at->atoms) {
      theta.push_back(wrap_angle(th));
      u.push_back(w);
    }
    return;
  }
  equispaced = true;
  theta.resize(n_theta);
  u.resize(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j)
    theta[j] = two_pi * static_cast<double>(j) / static_cast<double>(n_theta);
  if (std::holds_alternative<UniformPhase>(law)) {
    const double w = 1.0 / static_cast<double>(n_theta);
    for (auto& v : u) v = w;
    return;
  }
  // Wrapped gaussian: equispaced nodes weighted by the density, normalized.
  double sum = 0.0;
  for (std::size_t j = 0; j < n_theta; ++j) {
    u[j] = phase_density(law, theta[j]);
    sum += u[j];
  }
  for (auto& v : u) v /= sum;
}

}  // namespace detail

// Tensor discretization of a product measure: Gauss nodes in omega adapted to
// the frequency law, equispaced (or atomic) nodes in theta weighted by the
// phase law.
inline DiscretizedMeasure build_discretization(const MeasureSpec& spec,
                                               std::size_t n_omega,
                                               std::size_t n_theta) {
  if (n_omega == 0 || n_theta == 0)
    throw std::invalid_argument("build_discretization: resolutions must be positive");
  DiscretizedMeasure out;
  out.source = spec;

  std::vector<QuadratureNode> wq;
  if (const auto* at = std::get_if<FrequencyAtoms>(&spec.frequency())) {
    for (const auto& [x, w] : at->atoms) wq.push_back({x, w});
  } else {
    const auto rc = recurrence_coefficients(spec.frequency(), n_omega);
    wq = gauss_nodes(rc, n_omega);
  }
  double vsum = 0.0;
  for (const auto& q : wq) vsum += q.weight;
  for (auto& q : wq) q.weight /= vsum;

  std::vector<double> theta, u;
  bool equispaced = false;
  detail::phase_grid(spec.phase(), n_theta, theta, u, equispaced);

  out.n_omega = wq.size();
  out.n_theta = theta.size();
  out.equispaced_theta = equispaced;
  out.nodes.reserve(out.n_omega * out.n_theta);
  for (const auto& q : wq)
    for (std::size_t j = 0; j < theta.size(); ++j)
      out.nodes.push_back({theta[j], q.node, q.weight * u[j]});
  return out;
}

// Wrap an N-particle sample as an atomic measure with weights 1/N.
inline DiscretizedMeasure particle_measure(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty())
    throw std::invalid_argument("particle_measure: empty sample");
  DiscretizedMeasure out;
  const double w = 1.0 / static_cast<double>(pairs.size());
  out.nodes.reserve(pairs.size());
  for (const auto& [theta, omega] : pairs) out.nodes.push_back({wrap_angle(theta), omega, w});
  return out;
}

// sum_q w_q P_m(omega_q) e^{i k theta_q}: the (m, k) moment of the atomic
// measure. The k = 0, m = 0 value is the total mass.
inline Complex discretized_moment(const DiscretizedMeasure& h,
                                  const RecurrenceCoefficients& rc, std::size_t m,
                                  long k) {
  std::vector<double> p(m + 1);
  Complex acc(0.0, 0.0);
  for (const auto& node : h.nodes) {
    eval_poly_all(rc, m, node.omega, p);
    const double kk = static_cast<double>(k);
    acc += node.weight * p[m] * Complex(std::cos(kk * node.theta), std::sin(kk * node.theta));
  }
  return acc;
}

}  // namespace kuramoto
