#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kuramoto/common.hpp"
#include "kuramoto/continuum.hpp"
#include "kuramoto/momentsys.hpp"
#include "kuramoto/oscillators.hpp"

namespace kuramoto {

// Shortest decimal that round-trips a double (17 significant digits).
inline std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

using MomentIndex = std::pair<std::size_t, long>;  // (m, k)

namespace detail {

inline std::string moment_column(std::size_t m, long k) {
  return "Z" + std::to_string(m) + "_" + std::to_string(k);
}

inline void trajectory_header(std::ostream& os, const std::vector<MomentIndex>& extra,
                              bool with_source) {
  os << "t,re_Z01,im_Z01,r";
  for (const auto& [m, k] : extra)
    os << ",re_" << moment_column(m, k) << ",im_" << moment_column(m, k);
  if (with_source) os << ",source";
  os << "\n";
}

inline void trajectory_row(std::ostream& os, double t, Complex z01,
                           const std::vector<Complex>& extra, std::string_view source) {
  os << format_float(t) << ',' << format_float(z01.real()) << ','
     << format_float(z01.imag()) << ',' << format_float(std::abs(z01));
  for (const auto& z : extra)
    os << ',' << format_float(z.real()) << ',' << format_float(z.imag());
  if (!source.empty()) os << ',' << source;
  os << "\n";
}

}  // namespace detail

// Columns: t, re_Z01, im_Z01, r, then one re/im pair per requested extra
// moment. `rc` may be null when no extra moments are requested.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 const std::vector<MomentIndex>& extra_moments = {},
                                 const RecurrenceCoefficients* rc = nullptr,
                                 std::string_view source = {}) {
  if (!extra_moments.empty() && rc == nullptr)
    throw std::invalid_argument("trajectory CSV: moment columns need recurrence coefficients");
  detail::trajectory_header(os, extra_moments, !source.empty());
  OscillatorState s;
  s.omega = traj.omega;
  s.coupling = traj.coupling;
  s.f = traj.f;
  std::vector<Complex> extra(extra_moments.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    s.theta = traj.thetas[i];
    for (std::size_t j = 0; j < extra_moments.size(); ++j)
      extra[j] = empirical_moment(s, *rc, extra_moments[j].first, extra_moments[j].second);
    detail::trajectory_row(os, traj.times[i], traj.order_params[i], extra, source);
  }
}

// Same layout, rows tagged source=continuum.
inline void write_trajectory_csv(std::ostream& os, const CharacteristicSeries& series,
                                 const std::vector<MomentIndex>& extra_moments = {},
                                 const RecurrenceCoefficients* rc = nullptr,
                                 std::string_view source = "continuum") {
  if (!extra_moments.empty() && rc == nullptr)
    throw std::invalid_argument("trajectory CSV: moment columns need recurrence coefficients");
  detail::trajectory_header(os, extra_moments, !source.empty());
  std::vector<Complex> extra(extra_moments.size());
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const auto e = ensemble_at(series, i);
    for (std::size_t j = 0; j < extra_moments.size(); ++j)
      extra[j] = continuum_moment(e, *rc, extra_moments[j].first, extra_moments[j].second);
    detail::trajectory_row(os, series.times[i], continuum_phase_moment(e, 1), extra, source);
  }
}

// Long format, one row per stored (t, m, k).
inline void write_lattice_csv(std::ostream& os, const LatticeSeries& series) {
  os << "t,m,k,re_Z,im_Z\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const auto& state = series.states[i];
    for (std::size_t m = 0; m <= series.m_max; ++m)
      for (std::size_t k = 0; k <= series.k_max; ++k) {
        const Complex z = state[m * (series.k_max + 1) + k];
        os << format_float(series.times[i]) << ',' << m << ',' << k << ','
           << format_float(z.real()) << ',' << format_float(z.imag()) << "\n";
      }
  }
}

// One row per degree; the top degree has no b coefficient.
inline void write_recurrence_csv(std::ostream& os, const RecurrenceCoefficients& rc) {
  os << "n,a,b\n";
  for (std::size_t n = 0; n < rc.a.size(); ++n) {
    os << n << ',' << format_float(rc.a[n]) << ',';
    if (n < rc.b.size()) os << format_float(rc.b[n]);
    os << "\n";
  }
}

}  // namespace kuramoto
