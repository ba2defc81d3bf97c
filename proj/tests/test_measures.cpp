#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "kuramoto/discretization.hpp"
#include "kuramoto/measures.hpp"
#include "kuramoto/rng.hpp"
#include "oracles.hpp"

using namespace kuramoto;

TEST_CASE("measure spec validation") {
  REQUIRE_NOTHROW(MeasureSpec(UniformPhase{}, GaussianFrequency{0.0, 1.0}));
  REQUIRE_THROWS_AS(MeasureSpec(UniformPhase{}, LorentzianFrequency{0.0, 1.0}), MomentError);
  REQUIRE_THROWS_WITH(MeasureSpec(UniformPhase{}, LorentzianFrequency{0.0, 1.0}),
                      Catch::Matchers::ContainsSubstring("moments do not exist"));
  REQUIRE_THROWS_AS(MeasureSpec(UniformPhase{}, GaussianFrequency{0.0, -1.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(MeasureSpec(UniformPhase{}, UniformFrequency{2.0, 1.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(MeasureSpec(PhaseAtoms{{{0.0, 0.5}, {1.0, 0.2}}}, GaussianFrequency{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(MeasureSpec(PhaseAtoms{{{0.0, -0.5}, {1.0, 1.5}}}, GaussianFrequency{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(MeasureSpec(UniformPhase{}, FrequencyAtoms{{}}), std::invalid_argument);
}

TEST_CASE("sampling is a pure function of spec, size, seed") {
  const MeasureSpec spec(WrappedGaussianPhase{1.0, 2.0}, GaussianFrequency{0.5, 1.5});
  const auto a = sample_pairs(spec, 500, 42);
  const auto b = sample_pairs(spec, 500, 42);
  REQUIRE(a == b);
  const auto c = sample_pairs(spec, 500, 43);
  REQUIRE(a != c);
  for (const auto& [th, om] : a) {
    REQUIRE(th >= 0.0);
    REQUIRE(th < two_pi);
  }
}

TEST_CASE("point-mass and atom laws sample their support") {
  const MeasureSpec spec(PointMassPhase{7.0}, FrequencyAtoms{{{-1.0, 0.25}, {2.0, 0.75}}});
  const auto pairs = sample_pairs(spec, 2000, 7);
  std::size_t hits_hi = 0;
  for (const auto& [th, om] : pairs) {
    REQUIRE(th == Catch::Approx(wrap_angle(7.0)).margin(0.0));
    REQUIRE((om == -1.0 || om == 2.0));
    if (om == 2.0) ++hits_hi;
  }
  // Binomial(2000, 0.75): five sigma is ~97.
  REQUIRE(std::abs(static_cast<double>(hits_hi) - 1500.0) < 100.0);
}

TEST_CASE("sample moments obey the law of large numbers") {
  const std::size_t n = 200000;
  const MeasureSpec spec(UniformPhase{}, GaussianFrequency{0.3, 1.2});
  const auto pairs = sample_pairs(spec, n, 2026);
  for (unsigned p = 1; p <= 4; ++p) {
    double mean = 0.0;
    for (const auto& [th, om] : pairs) mean += std::pow(om, static_cast<double>(p));
    mean /= static_cast<double>(n);
    const double expect = raw_moment(spec.frequency(), p);
    const double var = raw_moment(spec.frequency(), 2 * p) - expect * expect;
    REQUIRE(std::abs(mean - expect) < 6.0 * std::sqrt(var / static_cast<double>(n)));
  }
  // Phase uniformity: first circular moment vanishes like 1/sqrt(N).
  Complex z(0.0, 0.0);
  for (const auto& [th, om] : pairs) z += Complex(std::cos(th), std::sin(th));
  REQUIRE(std::abs(z) / static_cast<double>(n) < 6.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("absolute moments: closed forms and quadrature paths") {
  const FrequencyLaw std_gauss = GaussianFrequency{0.0, 1.0};
  REQUIRE(absolute_moment(std_gauss, 0) == 1.0);
  REQUIRE(absolute_moment(std_gauss, 1) ==
          Catch::Approx(0.79788456080286541).epsilon(1e-13));
  REQUIRE(absolute_moment(std_gauss, 2) == Catch::Approx(1.0).epsilon(1e-13));
  REQUIRE(absolute_moment(std_gauss, 3) ==
          Catch::Approx(1.5957691216057308).epsilon(1e-13));

  // Off-center gaussian goes through the quadrature path; frozen reference.
  const FrequencyLaw off = GaussianFrequency{1.3, 0.8};
  REQUIRE(absolute_moment(off, 3) == Catch::Approx(4.7104349615654044).epsilon(1e-11));
  // Even order: absolute equals raw, which has a closed form.
  REQUIRE(absolute_moment(off, 4) == Catch::Approx(raw_moment(off, 4)).epsilon(1e-11));
  REQUIRE(raw_moment(off, 4) == Catch::Approx(10.5745).epsilon(1e-13));

  const FrequencyLaw bimodal = BimodalGaussianFrequency{1.5, 0.5};
  REQUIRE(absolute_moment(bimodal, 3) == Catch::Approx(4.5000385008482695).epsilon(1e-11));

  const FrequencyLaw box = UniformFrequency{-1.0, 1.0};
  REQUIRE(absolute_moment(box, 2) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(absolute_moment(box, 3) == Catch::Approx(0.25).epsilon(1e-14));
  REQUIRE(absolute_moment(UniformFrequency{1.0, 3.0}, 1) == Catch::Approx(2.0).epsilon(1e-14));

  const FrequencyLaw atoms = FrequencyAtoms{{{-2.0, 0.25}, {1.0, 0.75}}};
  REQUIRE(absolute_moment(atoms, 3) == Catch::Approx(0.25 * 8.0 + 0.75).epsilon(1e-14));

  REQUIRE_THROWS_AS(absolute_moment(LorentzianFrequency{}, 1), MomentError);
  REQUIRE(absolute_moment(LorentzianFrequency{}, 0) == 1.0);
}

TEST_CASE("raw moments") {
  REQUIRE(raw_moment(GaussianFrequency{0.0, 1.0}, 4) == Catch::Approx(3.0).epsilon(1e-13));
  REQUIRE(raw_moment(GaussianFrequency{0.0, 1.0}, 5) == Catch::Approx(0.0).margin(1e-13));
  REQUIRE(raw_moment(GaussianFrequency{2.0, 3.0}, 2) == Catch::Approx(13.0).epsilon(1e-13));
  REQUIRE(raw_moment(UniformFrequency{-1.0, 1.0}, 2) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(raw_moment(UniformFrequency{-1.0, 1.0}, 3) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(raw_moment(UniformFrequency{1.0, 3.0}, 3) == Catch::Approx(10.0).epsilon(1e-14));
  REQUIRE(raw_moment(BimodalGaussianFrequency{1.5, 0.5}, 2) ==
          Catch::Approx(1.5 * 1.5 + 0.25).epsilon(1e-13));
  REQUIRE(raw_moment(BimodalGaussianFrequency{1.5, 0.5}, 1) == Catch::Approx(0.0).margin(1e-13));
  REQUIRE_THROWS_AS(raw_moment(LorentzianFrequency{}, 1), MomentError);

  // Cross-check the gaussian binomial expansion against test-side Simpson.
  const double mean = 0.7, sd = 1.4;
  auto integrand = [&](double x) {
    const double d = (x - mean) / sd;
    return x * x * x * std::exp(-0.5 * d * d) / (sd * std::sqrt(two_pi));
  };
  const double ref = oracle::simpson(integrand, mean - 14 * sd, mean + 14 * sd, 4000);
  REQUIRE(raw_moment(GaussianFrequency{mean, sd}, 3) == Catch::Approx(ref).epsilon(1e-10));
}

TEST_CASE("carleman verdicts") {
  REQUIRE(carleman_check(UniformFrequency{-2.0, 2.0}).verdict == CarlemanVerdict::Determinate);
  REQUIRE(carleman_check(FrequencyAtoms{{{0.0, 0.5}, {3.0, 0.5}}}).verdict ==
          CarlemanVerdict::Determinate);
  REQUIRE(carleman_check(GaussianFrequency{0.0, 1.0}).verdict ==
          CarlemanVerdict::ConsistentWithDeterminate);
  REQUIRE(carleman_check(GaussianFrequency{1.0, 2.0}).verdict ==
          CarlemanVerdict::ConsistentWithDeterminate);
  REQUIRE(carleman_check(BimodalGaussianFrequency{1.0, 0.5}).verdict ==
          CarlemanVerdict::ConsistentWithDeterminate);
  const auto rep = carleman_check(GaussianFrequency{0.0, 1.0}, 24);
  REQUIRE(rep.terms.size() == 24);
  REQUIRE(rep.partial_sum > 0.0);
  for (double t : rep.terms) {
    REQUIRE(t > 0.0);
    REQUIRE(t <= 1.0);
  }

  // A moment sequence growing like (n!)^3 defeats the criterion.
  std::vector<double> fast;
  double fact = 1.0;
  for (int n = 1; n <= 24; ++n) {
    fact *= n;
    fast.push_back(fact * fact * fact);
  }
  REQUIRE(carleman_from_moments(fast).verdict == CarlemanVerdict::Inconclusive);
  REQUIRE_THROWS_AS(carleman_check(LorentzianFrequency{}), MomentError);
}

TEST_CASE("densities normalize and reject unsupported laws") {
  const PhaseLaw wg = WrappedGaussianPhase{2.0, 0.8};
  auto f = [&](double th) { return phase_density(wg, th); };
  REQUIRE(oracle::simpson(f, 0.0, two_pi, 2000) == Catch::Approx(1.0).epsilon(1e-10));
  REQUIRE(phase_density(wg, 1.0) == Catch::Approx(phase_density(wg, 1.0 + two_pi)).epsilon(1e-14));
  REQUIRE(phase_density(PhaseLaw{UniformPhase{}}, 0.3) == Catch::Approx(1.0 / two_pi));
  REQUIRE_THROWS_AS(phase_density(PhaseLaw{PointMassPhase{0.0}}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(phase_density(PhaseLaw{PhaseAtoms{{{0.0, 1.0}}}}, 0.0),
                    std::invalid_argument);

  const FrequencyLaw g = GaussianFrequency{0.5, 2.0};
  auto fg = [&](double om) { return frequency_density(g, om); };
  REQUIRE(oracle::simpson(fg, 0.5 - 30.0, 0.5 + 30.0, 4000) == Catch::Approx(1.0).epsilon(1e-10));
  REQUIRE_THROWS_AS(frequency_density(FrequencyLaw{FrequencyAtoms{{{0.0, 1.0}}}}, 0.0),
                    std::invalid_argument);

  const MeasureSpec spec(wg, g);
  REQUIRE(measure_density(spec, 1.0, 2.0) ==
          Catch::Approx(phase_density(wg, 1.0) * frequency_density(g, 2.0)));
}

TEST_CASE("tensor discretization: weights form a probability vector") {
  const MeasureSpec spec(UniformPhase{}, FrequencyAtoms{{{-1.0, 0.5}, {1.0, 0.5}}});
  const auto h = build_discretization(spec, 2, 4);
  REQUIRE(h.nodes.size() == 8);
  REQUIRE(h.n_omega == 2);
  REQUIRE(h.n_theta == 4);
  REQUIRE(h.equispaced_theta);
  for (const auto& node : h.nodes) REQUIRE(node.weight == Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("gauss nodes of the standard gaussian marginal (frozen reference)") {
  const MeasureSpec spec(PointMassPhase{0.25}, GaussianFrequency{0.0, 1.0});
  const auto h = build_discretization(spec, 5, 32);
  REQUIRE(h.nodes.size() == 5);
  const double ref_nodes[5] = {-2.8569700138728056, -1.3556261799742659, 0.0,
                               1.3556261799742659, 2.8569700138728056};
  const double ref_weights[5] = {0.011257411327720677, 0.22207592200561257,
                                 8.0 / 15.0, 0.22207592200561257, 0.011257411327720677};
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(h.nodes[i].theta == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(h.nodes[i].omega == Catch::Approx(ref_nodes[i]).margin(1e-10));
    REQUIRE(h.nodes[i].weight == Catch::Approx(ref_weights[i]).margin(1e-12));
  }
}

TEST_CASE("discretization invariants across specs and resolutions") {
  const std::vector<PhaseLaw> phases{UniformPhase{}, WrappedGaussianPhase{0.5, 2.0},
                                     PointMassPhase{1.0},
                                     PhaseAtoms{{{0.1, 0.3}, {2.0, 0.7}}}};
  const std::vector<FrequencyLaw> freqs{GaussianFrequency{0.0, 1.0},
                                        UniformFrequency{-2.0, 1.0},
                                        FrequencyAtoms{{{-1.0, 0.25}, {0.5, 0.75}}},
                                        BimodalGaussianFrequency{1.0, 0.4}};
  for (const auto& ph : phases) {
    for (const auto& fr : freqs) {
      const MeasureSpec spec(ph, fr);
      for (const auto [no, nt] : {std::pair<std::size_t, std::size_t>{3, 8},
                                  {8, 16}, {16, 64}}) {
        const auto h = build_discretization(spec, no, nt);
        double sum = 0.0;
        for (const auto& node : h.nodes) {
          REQUIRE(node.weight >= 0.0);
          REQUIRE(node.theta >= 0.0);
          REQUIRE(node.theta < two_pi);
          sum += node.weight;
        }
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
        REQUIRE(h.nodes.size() == h.n_omega * h.n_theta);
      }
    }
  }
}

TEST_CASE("particle measures carry equal weights and no source") {
  const MeasureSpec spec(UniformPhase{}, GaussianFrequency{});
  const auto pairs = sample_pairs(spec, 64, 11);
  const auto h = particle_measure(pairs);
  REQUIRE_FALSE(h.source.has_value());
  REQUIRE(h.nodes.size() == 64);
  double sum = 0.0;
  for (const auto& node : h.nodes) sum += node.weight;
  REQUIRE(std::abs(sum - 1.0) < 1e-12);
  REQUIRE_THROWS_AS(particle_measure({}), std::invalid_argument);
}

TEST_CASE("substream seeds do not collide over a wide index range") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ull, 1ull, 2026ull})
    for (std::uint64_t i = 0; i < 4096; ++i) seen.insert(substream_seed(base, i));
  REQUIRE(seen.size() == 3 * 4096);
}
