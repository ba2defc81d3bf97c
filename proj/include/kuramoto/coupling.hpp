#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "kuramoto/common.hpp"

namespace kuramoto {

// Real 2*pi-periodic coupling function with finite Fourier support,
//   f(x) = sum_l f_l e^{ilx},  f_{-l} = conj(f_l),  f_0 real.
// Only the modes l >= 1 and the constant term are stored.
class CouplingFunction {
 public:
  struct Mode {
    int l;             // harmonic index, >= 1
    Complex coeff;     // f_l
  };

  // Default coupling is f(x) = sin(x), i.e. f_1 = 1/(2i).
  CouplingFunction() : modes_{{1, Complex(0.0, -0.5)}} {}

  static CouplingFunction sine() { return CouplingFunction{}; }

  // Build from an explicit coefficient table. Either side of each +-l pair
  // may be given; if both are present they must be conjugate. f_0 must be
  // real. Coefficients below 1e-300 in magnitude are dropped.
  static CouplingFunction from_fourier(const std::map<int, Complex>& table) {
    CouplingFunction f;
    f.f0_ = 0.0;
    f.modes_.clear();
    std::map<int, Complex> pos;
    for (const auto& [l, c] : table) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw std::invalid_argument("coupling coefficient is not finite");
      if (l == 0) {
        if (std::abs(c.imag()) > 1e-12 * std::max(1.0, std::abs(c.real())))
          throw std::invalid_argument("constant coupling coefficient must be real");
        f.f0_ = c.real();
        continue;
      }
      const int al = std::abs(l);
      const Complex as_pos = (l > 0) ? c : std::conj(c);
      auto it = pos.find(al);
      if (it == pos.end()) {
        pos.emplace(al, as_pos);
      } else if (std::abs(it->second - as_pos) >
                 1e-12 * std::max(1.0, std::abs(as_pos))) {
        throw std::invalid_argument(
            "coupling coefficients violate f(-l) = conj(f(l))");
      }
    }
    for (const auto& [l, c] : pos)
      if (std::abs(c) > 1e-300) f.modes_.push_back({l, c});
    return f;
  }

  double constant_term() const { return f0_; }
  const std::vector<Mode>& positive_modes() const { return modes_; }

  int max_mode() const {
    int m = 0;
    for (const auto& mode : modes_) m = std::max(m, mode.l);
    return m;
  }

  double eval(double x) const {
    double v = f0_;
    for (const auto& mode : modes_) {
      const double c = std::cos(mode.l * x);
      const double s = std::sin(mode.l * x);
      v += 2.0 * (mode.coeff.real() * c - mode.coeff.imag() * s);
    }
    return v;
  }

  // sum_l |f_l|, a bound on sup|f|.
  double sup_bound() const {
    double m = std::abs(f0_);
    for (const auto& mode : modes_) m += 2.0 * std::abs(mode.coeff);
    return m;
  }

  // sum_l |l| |f_l|, a Lipschitz constant of f.
  double lipschitz_constant() const {
    double m = 0.0;
    for (const auto& mode : modes_) m += 2.0 * mode.l * std::abs(mode.coeff);
    return m;
  }

  bool is_sine() const {
    return f0_ == 0.0 && modes_.size() == 1 && modes_[0].l == 1 &&
           modes_[0].coeff == Complex(0.0, -0.5);
  }

 private:
  double f0_ = 0.0;
  std::vector<Mode> modes_;  // l >= 1, ascending
};

}  // namespace kuramoto
