#ifndef MWT_TESTS_ORACLES_HPP
#define MWT_TESTS_ORACLES_HPP

// Independent reference implementations used only by the test suite:
//  - complex-argument Bessel J_n by ascending power series
//  - partial-wave series for a homogeneous circular cylinder lit by a line
//    source (analytic solution of the scattering problem)
//  - brute-force O(n^4) discrete convolution
//  - adaptive Simpson / polar Gauss quadrature of the cell-integrated
//    Green's function
//  - central finite differences

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/forward.hpp"
#include "mwt/special.hpp"

namespace oracle {

using mwt::cplx;

// J_n(z) for complex z by the ascending series; accurate for |z| up to ~30.
inline cplx bessel_j_series(int n, cplx z) {
  const bool flip = n < 0;
  if (flip) n = -n;
  const cplx half = 0.5 * z;
  // leading term (z/2)^n / n!
  cplx term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / static_cast<double>(k);
  cplx sum = term;
  const cplx q = -half * half;
  for (int m = 1; m < 400; ++m) {
    term *= q / static_cast<double>(m) / static_cast<double>(m + n);
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  if (flip && (n % 2)) sum = -sum;
  return sum;
}

inline cplx bessel_j_series_prime(int n, cplx z) {
  return 0.5 * (bessel_j_series(n - 1, z) - bessel_j_series(n + 1, z));
}

inline cplx hankel2_signed(int n, double x) {
  const bool flip = n < 0;
  if (flip) n = -n;
  cplx h = mwt::hankel2(static_cast<double>(n), x);
  if (flip && (n % 2)) h = -h;
  return h;
}

inline cplx hankel2_signed_prime(int n, double x) {
  return 0.5 * (hankel2_signed(n - 1, x) - hankel2_signed(n + 1, x));
}

// ---------------------------------------------------------------------------
// Homogeneous cylinder (radius a, interior wavenumber k_c) centered at the
// origin in a background k_b, lit by a unit line source at (tx_x, tx_y).
// Fields follow the same source normalization as the solver under test:
// E_i(r) = -(omega mu0 / 4) H0^(2)(k_b |r - r_tx|).
// ---------------------------------------------------------------------------

struct CylinderSeries {
  double a = 0.0;
  double k_b = 0.0;
  cplx k_c;
  double omega = 0.0;
  double tx_rho = 0.0;
  double tx_phi = 0.0;
  int n_terms = 70;
  std::vector<cplx> b;  // scattered-wave coefficients, order 0..n_terms
  std::vector<cplx> c;  // interior coefficients

  CylinderSeries(double radius, double background_k, cplx interior_k, double omega_,
                 double tx_x, double tx_y, int terms = 70)
      : a(radius), k_b(background_k), k_c(interior_k), omega(omega_), n_terms(terms) {
    tx_rho = std::hypot(tx_x, tx_y);
    tx_phi = std::atan2(tx_y, tx_x);
    if (tx_rho <= a) throw std::runtime_error("cylinder oracle: source inside the cylinder");
    b.resize(static_cast<std::size_t>(n_terms) + 1);
    c.resize(static_cast<std::size_t>(n_terms) + 1);
    for (int n = 0; n <= n_terms; ++n) {
      // continuity of E_z and dE_z/drho at rho = a:
      //   A_n J_n(k_b a) + b_n H_n(k_b a)            = c_n J_n(k_c a)
      //   k_b [A_n J_n'(k_b a) + b_n H_n'(k_b a)]    = k_c c_n J_n'(k_c a)
      // with A_n = H_n^(2)(k_b tx_rho) from the addition theorem.
      const cplx A = hankel2_signed(n, k_b * tx_rho);
      const cplx jb = bessel_j_series(n, cplx(k_b * a, 0.0));
      const cplx jbp = bessel_j_series_prime(n, cplx(k_b * a, 0.0));
      const cplx hb = hankel2_signed(n, k_b * a);
      const cplx hbp = hankel2_signed_prime(n, k_b * a);
      const cplx jc = bessel_j_series(n, k_c * a);
      const cplx jcp = bessel_j_series_prime(n, k_c * a);
      // solve [ hb  -jc ; k_b hbp  -k_c jcp ] [b_n; c_n] = -A [jb; k_b jbp]
      const cplx a11 = hb, a12 = -jc;
      const cplx a21 = k_b * hbp, a22 = -k_c * jcp;
      const cplx r1 = -A * jb;
      const cplx r2 = -A * k_b * jbp;
      const cplx det = a11 * a22 - a12 * a21;
      b[static_cast<std::size_t>(n)] = (r1 * a22 - a12 * r2) / det;
      c[static_cast<std::size_t>(n)] = (a11 * r2 - r1 * a21) / det;
    }
  }

  cplx source_scale() const { return cplx(0.0, 0.0) - 0.25 * omega * mwt::kMu0; }

  // total field at an interior point (rho < a)
  cplx interior_total(double x, double y) const {
    const double rho = std::hypot(x, y);
    const double phi = std::atan2(y, x);
    cplx sum = c[0] * bessel_j_series(0, k_c * rho);
    for (int n = 1; n <= n_terms; ++n) {
      // order -n contributes the conjugate-free mirror term: coefficients of
      // +n and -n are equal, so the pair sums to 2 cos(n dphi) times the term
      sum += 2.0 * std::cos(n * (phi - tx_phi)) * c[static_cast<std::size_t>(n)] *
             bessel_j_series(n, k_c * rho);
    }
    return source_scale() * sum;
  }

  // scattered field at an exterior point (rho > a)
  cplx exterior_scattered(double x, double y) const {
    const double rho = std::hypot(x, y);
    const double phi = std::atan2(y, x);
    cplx sum = b[0] * hankel2_signed(0, k_b * rho);
    for (int n = 1; n <= n_terms; ++n)
      sum += 2.0 * std::cos(n * (phi - tx_phi)) * b[static_cast<std::size_t>(n)] *
             hankel2_signed(n, k_b * rho);
    return source_scale() * sum;
  }
};

// ---------------------------------------------------------------------------
// Brute-force discrete convolution with the displacement-indexed kernel.
// ---------------------------------------------------------------------------

inline std::vector<cplx> direct_convolution(const mwt::GreenKernel& kern,
                                            const std::vector<cplx>& src) {
  const int n = kern.grid.n;
  std::vector<cplx> out(src.size(), cplx(0.0, 0.0));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      cplx acc(0.0, 0.0);
      for (int rr = 0; rr < n; ++rr)
        for (int cc = 0; cc < n; ++cc)
          acc += kern.internal_at(r - rr, c - cc) * src[static_cast<std::size_t>(rr) * n + cc];
      out[static_cast<std::size_t>(r) * n + c] = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature of k^2 * integral over an equal-area disc of the 2D Green's
// function (-j/4) H0^(2)(k |r - r'|), evaluated at the disc center (self
// coefficient, radial 1D integral kills the log singularity) or at distance
// R from the center (polar 2D Gauss-Legendre).
// ---------------------------------------------------------------------------

namespace quaddetail {

// nodes/weights for 32-point Gauss-Legendre on [-1, 1], computed on first use
// by Newton iteration on the Legendre polynomial.
inline const std::vector<std::pair<double, double>>& gauss32() {
  static const std::vector<std::pair<double, double>> table = [] {
    const int n = 32;
    std::vector<std::pair<double, double>> t(n);
    for (int i = 0; i < n; ++i) {
      double x = std::cos(mwt::kPi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      t[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * pp * pp)};
    }
    return t;
  }();
  return table;
}

inline cplx gauss_1d(const std::function<cplx(double)>& f, double lo, double hi) {
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  cplx acc(0.0, 0.0);
  for (const auto& [x, w] : gauss32()) acc += w * f(mid + half * x);
  return half * acc;
}

}  // namespace quaddetail

inline cplx disc_self_coefficient_quadrature(double k, double a) {
  // k^2 * int_0^a (-j/4) H0^(2)(k rho) 2 pi rho d rho, panelled for accuracy
  auto f = [&](double rho) {
    return cplx(0.0, -0.25) * mwt::hankel2_0(k * rho) * 2.0 * mwt::kPi * rho * k * k;
  };
  cplx acc(0.0, 0.0);
  const int panels = 64;
  for (int p = 0; p < panels; ++p)
    acc += quaddetail::gauss_1d(f, a * p / panels, a * (p + 1) / panels);
  return acc;
}

inline cplx disc_offset_coefficient_quadrature(double k, double a, double R) {
  // k^2 * integral over the disc of (-j/4) H0^(2)(k |R x_hat - r'|)
  auto outer = [&](double rho) {
    auto inner = [&](double phi) {
      const double dist = std::sqrt(R * R + rho * rho - 2.0 * R * rho * std::cos(phi));
      return cplx(0.0, -0.25) * mwt::hankel2_0(k * dist);
    };
    return rho * quaddetail::gauss_1d(inner, 0.0, 2.0 * mwt::kPi);
  };
  cplx acc(0.0, 0.0);
  const int panels = 16;
  for (int p = 0; p < panels; ++p)
    acc += quaddetail::gauss_1d(outer, a * p / panels, a * (p + 1) / panels);
  return k * k * acc;
}

// ---------------------------------------------------------------------------
// Central finite differences of a scalar function of one parameter.
// ---------------------------------------------------------------------------

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle

#endif  // MWT_TESTS_ORACLES_HPP
