#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "kuramoto/kuramoto.hpp"
#include "oracles.hpp"

using namespace kuramoto;

namespace {

MomentLattice coherent_lattice(std::size_t m_max, std::size_t k_max, double coupling,
                               CouplingFunction f = {}) {
  const MeasureSpec spec(WrappedGaussianPhase{0.9, 1.5}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 16, 64);
  const auto rc = recurrence_coefficients(spec.frequency(), m_max);
  return init_lattice(h, rc, m_max, k_max, coupling, std::move(f));
}

}  // namespace

TEST_CASE("lattice init reproduces hand-computed atomic moments") {
  const PhaseAtoms ph{{{0.3, 0.25}, {1.1, 0.75}}};
  const FrequencyAtoms fr{{{-1.0, 0.5}, {1.0, 0.5}}};
  const auto h = build_discretization(MeasureSpec(ph, fr), 2, 2);
  const auto rc = recurrence_coefficients(fr, 1);
  const auto lat = init_lattice(h, rc, 1, 2, 1.0);

  REQUIRE(lat.z[lat.index(0, 0)] == Complex(1.0, 0.0));
  for (long k : {1l, 2l}) {
    const double kk = static_cast<double>(k);
    const Complex expect = 0.25 * Complex(std::cos(0.3 * kk), std::sin(0.3 * kk)) +
                           0.75 * Complex(std::cos(1.1 * kk), std::sin(1.1 * kk));
    REQUIRE(std::abs(lat.at(0, k) - expect) < 1e-15);
    // P_1(omega) = omega on the symmetric two-atom law, whose mean vanishes.
    REQUIRE(std::abs(lat.at(1, k)) < 1e-15);
  }
  REQUIRE(std::abs(lat.at(1, 0)) < 1e-15);
  REQUIRE_THROWS_AS(init_lattice(h, rc, 2, 2, 1.0), std::invalid_argument);
}

TEST_CASE("closure reads: conjugation and zero padding") {
  const auto lat = coherent_lattice(3, 3, 1.0);
  const Complex v = lat.at(2, 3);
  REQUIRE(lat.at(2, -3) == std::conj(v));
  REQUIRE(lat.at(2, 4) == Complex(0.0, 0.0));
  REQUIRE(lat.at(2, -4) == Complex(0.0, 0.0));
  REQUIRE(lat.at(4, 1) == Complex(0.0, 0.0));
  REQUIRE(lat.at(-1, 1) == Complex(0.0, 0.0));
}

TEST_CASE("sine-coupling rhs matches the hand-written special case") {
  for (double coupling : {0.0, 1.7}) {
    const auto lat = coherent_lattice(5, 6, coupling);
    const auto lib = moments_rhs(lat);
    const auto ref = oracle::sine_lattice_rhs(lat.z, 5, 6, lat.coeffs, coupling);
    REQUIRE(lib.size() == ref.size());
    for (std::size_t i = 0; i < lib.size(); ++i) REQUIRE(std::abs(lib[i] - ref[i]) < 1e-14);
  }
}

TEST_CASE("linearization about incoherence drives the expected entries") {
  // State: Z^0_0 = 1, Z^0_1 = zeta, everything else 0. For the standard
  // gaussian ladder (a = 0, b_0 = 1) and f = sin:
  //   dZ^0_1 = (K/2) zeta,  dZ^1_1 = i b_0 zeta,  dZ^0_2 = K zeta^2,
  // and every other entry is stationary.
  const double coupling = 0.8;
  MomentLattice lat;
  lat.m_max = 3;
  lat.k_max = 3;
  lat.coeffs = recurrence_coefficients(GaussianFrequency{0.0, 1.0}, 3);
  lat.coupling = coupling;
  lat.z.assign(16, Complex(0.0, 0.0));
  lat.z[lat.index(0, 0)] = Complex(1.0, 0.0);
  const Complex zeta(0.03, 0.01);
  lat.z[lat.index(0, 1)] = zeta;

  const auto out = moments_rhs(lat);
  std::vector<Complex> expect(16, Complex(0.0, 0.0));
  expect[lat.index(0, 1)] = 0.5 * coupling * zeta;
  expect[lat.index(1, 1)] = Complex(0.0, 1.0) * lat.coeffs.b[0] * zeta;
  expect[lat.index(0, 2)] = coupling * zeta * zeta;
  for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(std::abs(out[i] - expect[i]) < 1e-15);
}

TEST_CASE("empirical moments of a finite ensemble obey the lattice equation") {
  const MeasureSpec spec(WrappedGaussianPhase{2.0, 1.0}, GaussianFrequency{0.1, 0.9});
  const auto pairs = sample_pairs(spec, 40, 99);
  const auto rc = recurrence_coefficients(spec.frequency(), 5);
  const auto h = particle_measure(pairs);

  const auto multi = CouplingFunction::from_fourier(
      {{1, Complex(0.0, -0.5)}, {2, Complex(0.06, -0.02)}});
  for (const auto& f : {CouplingFunction::sine(), multi}) {
    const auto s = make_state(pairs, 0.9, f);
    const auto drift = rhs(s);
    const auto lat = init_lattice(h, rc, 5, 5, 0.9, f);
    const auto out = moments_rhs(lat);
    const long k_hi = f.max_mode() > 1 ? 3 : 4;  // stay clear of the k truncation
    std::vector<double> p(5);
    for (std::size_t m = 0; m <= 4; ++m) {
      for (long k = 1; k <= k_hi; ++k) {
        Complex lhs(0.0, 0.0);
        const double kk = static_cast<double>(k);
        for (std::size_t j = 0; j < s.size(); ++j) {
          eval_poly_all(rc, m, s.omega[j], p);
          lhs += p[m] * Complex(0.0, kk) * drift[j] *
                 Complex(std::cos(kk * s.theta[j]), std::sin(kk * s.theta[j]));
        }
        lhs /= static_cast<double>(s.size());
        REQUIRE(std::abs(lhs - out[lat.index(m, static_cast<std::size_t>(k))]) < 1e-13);
      }
    }
  }
}

TEST_CASE("incoherence is an exact fixed point of the truncated system") {
  const MeasureSpec spec(UniformPhase{}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 12, 64);
  const auto rc = recurrence_coefficients(spec.frequency(), 6);
  const auto lat = init_lattice(h, rc, 6, 6, 1.0);
  for (std::size_t m = 0; m <= 6; ++m)
    for (std::size_t k = 1; k <= 6; ++k)
      REQUIRE(std::abs(lat.z[lat.index(m, k)]) < 1e-14);
  const auto out = moments_rhs(lat);
  for (const auto& v : out) REQUIRE(std::abs(v) < 1e-13);

  const auto series = integrate_moments(lat, 3.0, default_time_step(lat), 50);
  REQUIRE(!series.blowup_time.has_value());
  const auto last = lattice_at(series, series.states.size() - 1);
  for (std::size_t m = 0; m <= 6; ++m)
    for (std::size_t k = 1; k <= 6; ++k)
      REQUIRE(std::abs(last.z[last.index(m, k)]) < 1e-12);
}

TEST_CASE("uncoupled lattice reproduces the free flow of the discretized measure") {
  const MeasureSpec spec(WrappedGaussianPhase{1.2, 2.0}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 12, 48);
  const auto rc = recurrence_coefficients(spec.frequency(), 32);
  const auto lat = init_lattice(h, rc, 32, 1, 0.0);
  const auto series = integrate_moments(lat, 2.0, 1e-3, 500);
  REQUIRE(!series.blowup_time.has_value());
  const auto last = lattice_at(series, series.states.size() - 1);

  Complex exact(0.0, 0.0);
  for (const auto& node : h.nodes) {
    const double arg = node.theta + 2.0 * node.omega;
    exact += node.weight * Complex(std::cos(arg), std::sin(arg));
  }
  REQUIRE(std::abs(last.at(0, 1) - exact) < 2e-6);
}

TEST_CASE("truncated lattice tracks the characteristics solver while subcritical") {
  const MeasureSpec spec(WrappedGaussianPhase{0.0, 0.7213475204444817}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 16, 64);
  const auto rc = recurrence_coefficients(spec.frequency(), 20);

  const auto lat = init_lattice(h, rc, 20, 20, 1.0);
  const auto series = integrate_moments(lat, 1.0, default_time_step(lat), 1000000);
  REQUIRE(!series.blowup_time.has_value());
  const auto last = lattice_at(series, series.states.size() - 1);

  auto e = make_characteristic_ensemble(h, 1.0);
  advance_characteristics(e, 1.0, 1e-3);
  REQUIRE(std::abs(last.at(0, 1) - continuum_phase_moment(e, 1)) < 1e-5);
  REQUIRE(std::abs(last.at(2, 3) - continuum_moment(e, rc, 2, 3)) < 5e-5);
}

TEST_CASE("supercritical strong coupling trips the blow-up detector") {
  const MeasureSpec spec(WrappedGaussianPhase{0.0, 0.7213475204444817}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 8, 32);
  const auto rc = recurrence_coefficients(spec.frequency(), 1);
  const auto lat = init_lattice(h, rc, 1, 1, 50.0);
  const auto series = integrate_moments(lat, 1.0, default_time_step(lat));
  REQUIRE(series.blowup_time.has_value());
  REQUIRE(*series.blowup_time > 0.01);
  REQUIRE(*series.blowup_time < 0.5);
  REQUIRE(series.times.back() == Catch::Approx(*series.blowup_time));
  double zmax = 0.0;
  bool finite = true;
  for (const auto& v : series.states.back()) {
    if (!std::isfinite(std::abs(v))) finite = false;
    zmax = std::max(zmax, std::abs(v));
  }
  REQUIRE((!finite || zmax > lattice_blowup_threshold));
}

TEST_CASE("invariants hold along a healthy run") {
  const auto lat = coherent_lattice(8, 8, 1.0);
  const auto series = integrate_moments(lat, 2.0, default_time_step(lat), 100);
  REQUIRE(!series.blowup_time.has_value());
  const auto rep = invariant_report(series);
  REQUIRE(rep.z00_error == 0.0);
  REQUIRE(rep.k0_drift == 0.0);
  REQUIRE(rep.z0k_excess <= 1e-6);
  REQUIRE_THROWS_AS(lattice_at(series, series.states.size()), std::invalid_argument);
}

TEST_CASE("default step shrinks as the lattice grows or stiffens") {
  const auto small = coherent_lattice(4, 4, 1.0);
  const auto tall = coherent_lattice(16, 16, 1.0);
  REQUIRE(default_time_step(small) > 0.0);
  REQUIRE(default_time_step(tall) < default_time_step(small));
  const auto strong = coherent_lattice(4, 4, 25.0);
  REQUIRE(default_time_step(strong) < default_time_step(small));
}
