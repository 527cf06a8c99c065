#ifndef MWT_SPECIAL_HPP
#define MWT_SPECIAL_HPP

#include <cmath>

#include "mwt/common.hpp"

namespace mwt {

// Hankel functions of the second kind for real positive argument, matching
// the e^{+j omega t} time convention (outgoing 2D waves ~ H0^(2)(kr)).

inline cplx hankel2(int order, double x) {
  if (!(x > 0.0)) throw NumericalError("hankel2: argument must be > 0");
  const double nu = static_cast<double>(order);
  return cplx(std::cyl_bessel_j(nu, x), -std::cyl_neumann(nu, x));
}

inline cplx hankel2_0(double x) { return hankel2(0, x); }
inline cplx hankel2_1(double x) { return hankel2(1, x); }

}  // namespace mwt

#endif  // MWT_SPECIAL_HPP
