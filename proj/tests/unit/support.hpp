#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "weierlab/cgrid.hpp"

namespace wt {

using namespace weierlab;
using cgrid::ComplexField;
using cgrid::Grid;
using cgrid::RealField;

inline ComplexField field(const Grid& g, const std::function<cplx(cplx)>& fn) {
  return ComplexField::from_function(g, fn);
}

inline double max_of(const RealField& r, std::size_t band = 0) {
  return cgrid::summarize(r, band).interior_max;
}

inline double max_diff(const ComplexField& a, const ComplexField& b) { return (a - b).max_abs(); }

inline double min_of(const RealField& r) {
  double m = r.values.front();
  for (double v : r.values) m = std::min(m, v);
  return m;
}

inline double order_of(double coarse, double fine) { return std::log2(coarse / fine); }

/// Smooth random omega: a low-degree polynomial in z and zbar with small
/// random coefficients, plus a random constant.
struct RandomOmega {
  cplx c0, c1, c2, c3, c4;
  explicit RandomOmega(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    auto draw = [&](double s) { return cplx{s * n(rng), s * n(rng)}; };
    c0 = draw(1.0), c1 = draw(1.0), c2 = draw(0.5), c3 = draw(0.5), c4 = draw(0.3);
  }
  cplx operator()(cplx z) const {
    const cplx zb = std::conj(z);
    return c0 + c1 * z + c2 * zb + c3 * z * z + c4 * z * zb;
  }
};

}  // namespace wt
