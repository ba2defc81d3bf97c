#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/rng.hpp"

namespace kuramoto {

// ---------------------------------------------------------------------------
// Phase laws (distributions on the circle)

struct UniformPhase {};

// Wrapped normal: theta = wrap(center + sigma * z), sigma = 1/sqrt(concentration).
struct WrappedGaussianPhase {
  double center = 0.0;
  double concentration = 1.0;
};

struct PointMassPhase {
  double theta0 = 0.0;
};

// Finite atom list {(theta_i, weight_i)}, weights > 0 summing to 1.
struct PhaseAtoms {
  std::vector<std::pair<double, double>> atoms;
};

using PhaseLaw = std::variant<UniformPhase, WrappedGaussianPhase, PointMassPhase, PhaseAtoms>;

// ---------------------------------------------------------------------------
// Frequency laws (distributions on the real line)

struct GaussianFrequency {
  double mean = 0.0;
  double sd = 1.0;
};

struct UniformFrequency {
  double lo = -1.0;
  double hi = 1.0;
};

struct FrequencyAtoms {
  std::vector<std::pair<double, double>> atoms;  // (omega_i, weight_i)
};

// Mixture (1/2) N(-omega0, sd^2) + (1/2) N(omega0, sd^2).
struct BimodalGaussianFrequency {
  double omega0 = 1.0;
  double sd = 1.0;
};

// Cauchy/Lorentzian. Representable so its rejection path is exercisable, but
// it has no moments of order >= 1: every moment-dependent operation throws.
struct LorentzianFrequency {
  double center = 0.0;
  double gamma = 1.0;
};

using FrequencyLaw = std::variant<GaussianFrequency, UniformFrequency, FrequencyAtoms,
                                  BimodalGaussianFrequency, LorentzianFrequency>;

inline bool has_all_moments(const FrequencyLaw& g) {
  return !std::holds_alternative<LorentzianFrequency>(g);
}

inline bool has_compact_support(const FrequencyLaw& g) {
  return std::holds_alternative<UniformFrequency>(g) ||
         std::holds_alternative<FrequencyAtoms>(g);
}

namespace detail {

inline void validate_atom_list(const std::vector<std::pair<double, double>>& atoms,
                               const char* what) {
  if (atoms.empty())
    throw std::invalid_argument(std::string(what) + ": atom list is empty");
  double sum = 0.0;
  for (const auto& [x, w] : atoms) {
    if (!std::isfinite(x) || !std::isfinite(w))
      throw std::invalid_argument(std::string(what) + ": atom is not finite");
    if (w <= 0.0)
      throw std::invalid_argument(std::string(what) + ": atom weight must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": atom weights must sum to 1");
}

// Exact renormalization after validation keeps downstream sums at 1 to
// rounding.
inline void normalize_atoms(std::vector<std::pair<double, double>>& atoms) {
  double sum = 0.0;
  for (const auto& a : atoms) sum += a.second;
  for (auto& a : atoms) a.second /= sum;
}

}  // namespace detail

inline void validate_phase_law(const PhaseLaw& law) {
  if (const auto* wg = std::get_if<WrappedGaussianPhase>(&law)) {
    if (!(wg->concentration > 0.0) || !std::isfinite(wg->concentration) ||
        !std::isfinite(wg->center))
      throw std::invalid_argument("wrapped-gaussian phase law: bad parameters");
  } else if (const auto* pm = std::get_if<PointMassPhase>(&law)) {
    if (!std::isfinite(pm->theta0))
      throw std::invalid_argument("point-mass phase law: bad position");
  } else if (const auto* at = std::get_if<PhaseAtoms>(&law)) {
    detail::validate_atom_list(at->atoms, "phase law");
  }
}

inline void validate_frequency_law(const FrequencyLaw& law) {
  if (const auto* g = std::get_if<GaussianFrequency>(&law)) {
    if (!(g->sd > 0.0) || !std::isfinite(g->sd) || !std::isfinite(g->mean))
      throw std::invalid_argument("gaussian frequency law: bad parameters");
  } else if (const auto* u = std::get_if<UniformFrequency>(&law)) {
    if (!(u->hi > u->lo) || !std::isfinite(u->lo) || !std::isfinite(u->hi))
      throw std::invalid_argument("uniform frequency law: bad interval");
  } else if (const auto* at = std::get_if<FrequencyAtoms>(&law)) {
    detail::validate_atom_list(at->atoms, "frequency law");
  } else if (const auto* b = std::get_if<BimodalGaussianFrequency>(&law)) {
    if (!(b->sd > 0.0) || !std::isfinite(b->sd) || !std::isfinite(b->omega0))
      throw std::invalid_argument("bimodal frequency law: bad parameters");
  } else if (const auto* lz = std::get_if<LorentzianFrequency>(&law)) {
    if (!(lz->gamma > 0.0) || !std::isfinite(lz->center))
      throw std::invalid_argument("lorentzian frequency law: bad parameters");
  }
}

// Product initial measure h = phase law x frequency law. Immutable once
// constructed; construction rejects frequency laws without finite moments.
class MeasureSpec {
 public:
  MeasureSpec(PhaseLaw phase, FrequencyLaw frequency)
      : phase_(std::move(phase)), frequency_(std::move(frequency)) {
    validate_phase_law(phase_);
    validate_frequency_law(frequency_);
    if (!has_all_moments(frequency_))
      throw MomentError("moments do not exist for the requested frequency law");
    if (auto* at = std::get_if<PhaseAtoms>(&phase_)) detail::normalize_atoms(at->atoms);
    if (auto* at = std::get_if<FrequencyAtoms>(&frequency_)) detail::normalize_atoms(at->atoms);
  }

  const PhaseLaw& phase() const { return phase_; }
  const FrequencyLaw& frequency() const { return frequency_; }

 private:
  PhaseLaw phase_;
  FrequencyLaw frequency_;
};

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline double sample_atom(const std::vector<std::pair<double, double>>& atoms, double u) {
  double cum = 0.0;
  for (const auto& [x, w] : atoms) {
    cum += w;
    if (u < cum) return x;
  }
  return atoms.back().first;
}

inline double sample_phase(const PhaseLaw& law, CounterRng& rng) {
  if (std::holds_alternative<UniformPhase>(law)) return two_pi * rng.next_double();
  if (const auto* wg = std::get_if<WrappedGaussianPhase>(&law)) {
    const double sigma = 1.0 / std::sqrt(wg->concentration);
    return wrap_angle(wg->center + sigma * rng.next_gaussian());
  }
  if (const auto* pm = std::get_if<PointMassPhase>(&law)) return wrap_angle(pm->theta0);
  const auto& atoms = std::get<PhaseAtoms>(law).atoms;
  return wrap_angle(sample_atom(atoms, rng.next_double()));
}

inline double sample_frequency(const FrequencyLaw& law, CounterRng& rng) {
  if (const auto* g = std::get_if<GaussianFrequency>(&law))
    return g->mean + g->sd * rng.next_gaussian();
  if (const auto* u = std::get_if<UniformFrequency>(&law))
    return u->lo + (u->hi - u->lo) * rng.next_double();
  if (const auto* at = std::get_if<FrequencyAtoms>(&law))
    return sample_atom(at->atoms, rng.next_double());
  if (const auto* b = std::get_if<BimodalGaussianFrequency>(&law)) {
    const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
    return sign * b->omega0 + b->sd * rng.next_gaussian();
  }
  throw MomentError("moments do not exist for the requested frequency law");
}

}  // namespace detail

// Draw N i.i.d. (theta, omega) pairs from the product measure. Pure function
// of (spec, n, seed); phases come back reduced to [0, 2*pi).
inline std::vector<std::pair<double, double>> sample_pairs(const MeasureSpec& spec,
                                                           std::size_t n,
                                                           std::uint64_t seed) {
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  CounterRng rng(seed);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = detail::sample_phase(spec.phase(), rng);
    const double omega = detail::sample_frequency(spec.frequency(), rng);
    out.emplace_back(theta, omega);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Moments of the frequency marginal

namespace detail {

// integral |w|^n dN(mean, sd^2) by Gauss-Legendre panels split at 0.
inline double abs_moment_gaussian_quad(double mean, double sd, unsigned n) {
  const double reach = (std::sqrt(static_cast<double>(n)) + 12.0) * sd;
  const double lo = mean - reach, hi = mean + reach;
  std::vector<double> breaks{lo};
  if (lo < 0.0 && hi > 0.0) breaks.push_back(0.0);
  breaks.push_back(hi);
  const double inv_norm = 1.0 / (sd * std::sqrt(two_pi));
  double total = 0.0;
  std::vector<double> x, w;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    gauss_legendre(200, breaks[p], breaks[p + 1], x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = (x[i] - mean) / sd;
      total += w[i] * std::pow(std::abs(x[i]), static_cast<double>(n)) *
               inv_norm * std::exp(-0.5 * d * d);
    }
  }
  return total;
}

}  // namespace detail

// n-th absolute moment integral |omega|^n dg(omega). n = 0 gives 1.
inline double absolute_moment(const FrequencyLaw& g, unsigned n) {
  if (!has_all_moments(g)) {
    if (n == 0) return 1.0;
    throw MomentError("moments do not exist for the requested frequency law");
  }
  if (n == 0) return 1.0;
  if (const auto* gg = std::get_if<GaussianFrequency>(&g)) {
    if (gg->mean == 0.0) {
      // 2^{n/2} Gamma((n+1)/2) / sqrt(pi) * sd^n
      return std::exp(0.5 * n * std::log(2.0) + std::lgamma(0.5 * (n + 1)) -
                      0.5 * std::log(pi) + n * std::log(gg->sd));
    }
    return detail::abs_moment_gaussian_quad(gg->mean, gg->sd, n);
  }
  if (const auto* u = std::get_if<UniformFrequency>(&g)) {
    // integral of |w|^n / (hi - lo); antiderivative |w|^n w / (n+1).
    auto prim = [n](double w) {
      return std::pow(std::abs(w), static_cast<double>(n)) * w / (n + 1.0);
    };
    return (prim(u->hi) - prim(u->lo)) / (u->hi - u->lo);
  }
  if (const auto* at = std::get_if<FrequencyAtoms>(&g)) {
    double s = 0.0;
    for (const auto& [x, w] : at->atoms) s += w * std::pow(std::abs(x), static_cast<double>(n));
    return s;
  }
  const auto& b = std::get<BimodalGaussianFrequency>(g);
  return 0.5 * (detail::abs_moment_gaussian_quad(-b.omega0, b.sd, n) +
                detail::abs_moment_gaussian_quad(b.omega0, b.sd, n));
}

// Signed raw moment integral omega^n dg(omega), in closed form.
inline double raw_moment(const FrequencyLaw& g, unsigned n) {
  if (n == 0) return 1.0;
  if (!has_all_moments(g))
    throw MomentError("moments do not exist for the requested frequency law");
  if (const auto* gg = std::get_if<GaussianFrequency>(&g)) {
    // E[(mean + sd Z)^n] via binomial expansion; E[Z^j] = (j-1)!! for even j.
    double total = 0.0;
    double binom = 1.0;
    for (unsigned j = 0; j <= n; ++j) {
      if (j % 2 == 0) {
        double dfact = 1.0;
        for (unsigned i = 2; i <= j; i += 2) dfact *= (i - 1);
        total += binom * std::pow(gg->mean, static_cast<double>(n - j)) *
                 std::pow(gg->sd, static_cast<double>(j)) * dfact;
      }
      binom *= static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    return total;
  }
  if (const auto* u = std::get_if<UniformFrequency>(&g)) {
    double s = 0.0;  // (hi^{n+1} - lo^{n+1}) / ((n+1)(hi-lo)), summed stably
    for (unsigned j = 0; j <= n; ++j)
      s += std::pow(u->hi, static_cast<double>(j)) * std::pow(u->lo, static_cast<double>(n - j));
    return s / (n + 1.0);
  }
  if (const auto* at = std::get_if<FrequencyAtoms>(&g)) {
    double s = 0.0;
    for (const auto& [x, w] : at->atoms) s += w * std::pow(x, static_cast<double>(n));
    return s;
  }
  const auto& b = std::get<BimodalGaussianFrequency>(g);
  const double m1 = raw_moment(GaussianFrequency{-b.omega0, b.sd}, n);
  const double m2 = raw_moment(GaussianFrequency{b.omega0, b.sd}, n);
  return 0.5 * (m1 + m2);
}

// ---------------------------------------------------------------------------
// Carleman determinacy check

enum class CarlemanVerdict {
  Determinate,               // compact support, exact
  ConsistentWithDeterminate, // partial sums grow like a divergent series
  Inconclusive,              // terms decay too fast to call from finitely many
};

struct CarlemanReport {
  CarlemanVerdict verdict;
  double partial_sum = 0.0;
  std::vector<double> terms;  // t_n = (M_n + 1)^{-1/n}, n = 1..n_terms
};

namespace detail {

// Slope of log t_n vs log n over the last half of the sequence. The harmonic
// borderline has slope -1; anything decaying at most that fast is consistent
// with a divergent sum.
inline CarlemanVerdict carleman_verdict_from_terms(const std::vector<double>& terms) {
  const std::size_t n = terms.size();
  const std::size_t lo = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = lo; i < n; ++i) {
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(std::max(terms[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  const double denom = cnt * sxx - sx * sx;
  if (denom <= 0.0) return CarlemanVerdict::Inconclusive;
  const double slope = (cnt * sxy - sx * sy) / denom;
  return slope >= -1.05 ? CarlemanVerdict::ConsistentWithDeterminate
                        : CarlemanVerdict::Inconclusive;
}

}  // namespace detail

// Heuristic verdict from a raw absolute-moment sequence M_1, M_2, ...
inline CarlemanReport carleman_from_moments(const std::vector<double>& abs_moments) {
  if (abs_moments.size() < 4)
    throw std::invalid_argument("carleman check needs at least 4 moments");
  CarlemanReport rep{CarlemanVerdict::Inconclusive, 0.0, {}};
  rep.terms.reserve(abs_moments.size());
  for (std::size_t i = 0; i < abs_moments.size(); ++i) {
    const double m = abs_moments[i];
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("carleman check: moment sequence must be finite");
    rep.terms.push_back(std::pow(m + 1.0, -1.0 / static_cast<double>(i + 1)));
    rep.partial_sum += rep.terms.back();
  }
  rep.verdict = detail::carleman_verdict_from_terms(rep.terms);
  return rep;
}

inline CarlemanReport carleman_check(const FrequencyLaw& g, unsigned n_terms = 30) {
  if (!has_all_moments(g))
    throw MomentError("moments do not exist for the requested frequency law");
  std::vector<double> ms;
  ms.reserve(n_terms);
  for (unsigned n = 1; n <= n_terms; ++n) ms.push_back(absolute_moment(g, n));
  CarlemanReport rep = carleman_from_moments(ms);
  if (has_compact_support(g)) rep.verdict = CarlemanVerdict::Determinate;
  return rep;
}

inline CarlemanReport carleman_check(const MeasureSpec& spec, unsigned n_terms = 30) {
  return carleman_check(spec.frequency(), n_terms);
}

// ---------------------------------------------------------------------------
// Densities (for laws that have one)

inline double phase_density(const PhaseLaw& law, double theta) {
  if (std::holds_alternative<UniformPhase>(law)) return 1.0 / two_pi;
  if (const auto* wg = std::get_if<WrappedGaussianPhase>(&law)) {
    const double sigma = 1.0 / std::sqrt(wg->concentration);
    // Wrapped normal; the image sum converges fast for sigma <~ 2*pi.
    double s = 0.0;
    const int images = 1 + static_cast<int>(std::ceil(3.0 * sigma / two_pi + 2.0));
    const double d0 = wrap_symmetric(theta - wg->center);
    const double c = 1.0 / (sigma * std::sqrt(two_pi));
    for (int k = -images; k <= images; ++k) {
      const double d = (d0 + two_pi * k) / sigma;
      s += c * std::exp(-0.5 * d * d);
    }
    return s;
  }
  throw std::invalid_argument("phase law has no density");
}

inline double frequency_density(const FrequencyLaw& law, double omega) {
  if (const auto* g = std::get_if<GaussianFrequency>(&law)) {
    const double d = (omega - g->mean) / g->sd;
    return std::exp(-0.5 * d * d) / (g->sd * std::sqrt(two_pi));
  }
  if (const auto* u = std::get_if<UniformFrequency>(&law))
    return (omega >= u->lo && omega <= u->hi) ? 1.0 / (u->hi - u->lo) : 0.0;
  if (const auto* b = std::get_if<BimodalGaussianFrequency>(&law)) {
    const double dm = (omega + b->omega0) / b->sd;
    const double dp = (omega - b->omega0) / b->sd;
    return 0.5 * (std::exp(-0.5 * dm * dm) + std::exp(-0.5 * dp * dp)) /
           (b->sd * std::sqrt(two_pi));
  }
  throw std::invalid_argument("frequency law has no density");
}

// Joint density of the product measure at (theta, omega).
inline double measure_density(const MeasureSpec& spec, double theta, double omega) {
  return phase_density(spec.phase(), theta) * frequency_density(spec.frequency(), omega);
}

}  // namespace kuramoto
