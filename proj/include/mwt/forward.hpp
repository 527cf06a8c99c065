#ifndef MWT_FORWARD_HPP
#define MWT_FORWARD_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/fft.hpp"
#include "mwt/phantom.hpp"
#include "mwt/special.hpp"

namespace mwt {

struct FieldMap {
  Grid grid;
  std::vector<cplx> values;  // V/m, n*n row-major
  int view_index = -1;
};

struct ScatteringMatrix {
  int nv = 0;
  int nr = 0;
  double frequency = 0.0;
  std::uint64_t fingerprint = 0;
  std::vector<cplx> values;  // nv*nr row-major, one row per transmitter view

  cplx& at(int v, int r) { return values[static_cast<std::size_t>(v) * nr + r]; }
  const cplx& at(int v, int r) const { return values[static_cast<std::size_t>(v) * nr + r]; }

  double frobenius_norm() const {
    double s = 0.0;
    for (const cplx& v : values) s += std::norm(v);
    return std::sqrt(s);
  }
};

// ---------------------------------------------------------------------------
// Discretized Green operators. Each square cell is replaced by the equal-area
// disc (radius a = cell/sqrt(pi)); the disc-integrated 2D Green's function has
// closed forms, including the self term. Coefficients absorb the k^2 factor of
// the volume integral, so the domain operator is E -> conv(C, chi .* E).
// ---------------------------------------------------------------------------

struct GreenKernel {
  Grid grid;
  double k = 0.0;            // background wavenumber (lossless, real)
  double cell_radius = 0.0;  // equal-area disc radius
  cplx self_term;
  std::vector<cplx> internal;       // (2n-1)^2, displacement-indexed
  std::vector<cplx> spectrum;       // pad*pad FFT of the embedded kernel
  std::vector<cplx> spectrum_adj;   // pad*pad FFT of the conjugated kernel
  int pad = 0;
  int n_receivers = 0;
  std::vector<cplx> external;       // n_receivers x (n*n), row-major

  cplx internal_at(int dr, int dc) const {
    const int n = grid.n;
    return internal[static_cast<std::size_t>(dr + n - 1) * (2 * n - 1) + (dc + n - 1)];
  }
};

inline double real_wavenumber(const ExperimentConfig& config) {
  if (config.background.sigma_b != 0.0)
    throw ConfigError("forward solver supports lossless backgrounds only (sigma_b = 0)");
  return wavenumber(config.background, config.frequency).real();
}

inline GreenKernel build_green_kernel(const ExperimentConfig& config) {
  config.validate();
  GreenKernel kern;
  kern.grid = config.grid;
  kern.k = real_wavenumber(config);
  const int n = config.grid.n;
  const double cell = config.grid.cell_size();
  const double a = cell / std::sqrt(kPi);
  kern.cell_radius = a;
  const double ka = kern.k * a;

  // Closed forms for the equal-area disc: self term and off-cell coefficient.
  kern.self_term = cplx(0.0, -0.5 * kPi * ka) * hankel2_1(ka) - 1.0;
  const cplx off_scale = cplx(0.0, -0.5 * kPi * ka) * std::cyl_bessel_j(1.0, ka);

  const int m = 2 * n - 1;
  kern.internal.resize(static_cast<std::size_t>(m) * m);
  for (int dr = -(n - 1); dr <= n - 1; ++dr) {
    for (int dc = -(n - 1); dc <= n - 1; ++dc) {
      cplx v;
      if (dr == 0 && dc == 0) {
        v = kern.self_term;
      } else {
        const double dist = cell * std::sqrt(static_cast<double>(dr) * dr +
                                             static_cast<double>(dc) * dc);
        v = off_scale * hankel2_0(kern.k * dist);
      }
      kern.internal[static_cast<std::size_t>(dr + n - 1) * m + (dc + n - 1)] = v;
    }
  }

  // Embed at wrapped displacement indices for circular convolution.
  kern.pad = next_pow2(m);
  const int pad = kern.pad;
  std::vector<cplx> embedded(static_cast<std::size_t>(pad) * pad, cplx(0.0, 0.0));
  for (int dr = -(n - 1); dr <= n - 1; ++dr) {
    for (int dc = -(n - 1); dc <= n - 1; ++dc) {
      const int r = (dr + pad) % pad;
      const int c = (dc + pad) % pad;
      embedded[static_cast<std::size_t>(r) * pad + c] =
          kern.internal[static_cast<std::size_t>(dr + n - 1) * m + (dc + n - 1)];
    }
  }
  kern.spectrum_adj.resize(embedded.size());
  for (std::size_t i = 0; i < embedded.size(); ++i)
    kern.spectrum_adj[i] = std::conj(embedded[i]);
  fft2(embedded, pad, pad);
  kern.spectrum = std::move(embedded);
  fft2(kern.spectrum_adj, pad, pad);

  // Cell-to-receiver coefficients (same disc closed form; receivers are
  // always outside the cells that carry contrast).
  kern.n_receivers = config.array.count;
  kern.external.resize(static_cast<std::size_t>(kern.n_receivers) * config.grid.cell_count());
  for (int rx = 0; rx < kern.n_receivers; ++rx) {
    const double rx_x = config.array.x(rx), rx_y = config.array.y(rx);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double dist = std::hypot(rx_x - config.grid.cell_x(c),
                                       rx_y - config.grid.cell_y(r));
        kern.external[static_cast<std::size_t>(rx) * config.grid.cell_count() +
                      static_cast<std::size_t>(r) * n + c] =
            off_scale * hankel2_0(kern.k * dist);
      }
    }
  }
  return kern;
}

namespace fwddetail {

inline std::vector<cplx> convolve(const GreenKernel& kern, const std::vector<cplx>& src,
                                  const std::vector<cplx>& spectrum) {
  const int n = kern.grid.n;
  const int pad = kern.pad;
  if (src.size() != kern.grid.cell_count())
    throw DataError("internal operator: source shape mismatch");
  std::vector<cplx> work(static_cast<std::size_t>(pad) * pad, cplx(0.0, 0.0));
  for (int r = 0; r < n; ++r)
    std::memcpy(&work[static_cast<std::size_t>(r) * pad], &src[static_cast<std::size_t>(r) * n],
                static_cast<std::size_t>(n) * sizeof(cplx));
  fft2(work, pad, pad);
  for (std::size_t i = 0; i < work.size(); ++i) work[i] *= spectrum[i];
  ifft2(work, pad, pad);
  std::vector<cplx> out(kern.grid.cell_count());
  for (int r = 0; r < n; ++r)
    std::memcpy(&out[static_cast<std::size_t>(r) * n], &work[static_cast<std::size_t>(r) * pad],
                static_cast<std::size_t>(n) * sizeof(cplx));
  return out;
}

}  // namespace fwddetail

// K s : discrete convolution with the internal kernel via zero-padded FFT.
inline std::vector<cplx> apply_internal_operator(const GreenKernel& kern,
                                                 const std::vector<cplx>& src) {
  return fwddetail::convolve(kern, src, kern.spectrum);
}

// K^H s (the kernel is even in the displacement, so the adjoint is
// convolution with the conjugated kernel).
inline std::vector<cplx> apply_internal_adjoint(const GreenKernel& kern,
                                                const std::vector<cplx>& src) {
  return fwddetail::convolve(kern, src, kern.spectrum_adj);
}

// A_e s : cell sources to receiver samples.
inline std::vector<cplx> apply_external(const GreenKernel& kern, const std::vector<cplx>& src) {
  if (src.size() != kern.grid.cell_count())
    throw DataError("external operator: source shape mismatch");
  std::vector<cplx> out(static_cast<std::size_t>(kern.n_receivers), cplx(0.0, 0.0));
  const std::size_t nc = kern.grid.cell_count();
  for (int rx = 0; rx < kern.n_receivers; ++rx) {
    const cplx* row = &kern.external[static_cast<std::size_t>(rx) * nc];
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < nc; ++i) acc += row[i] * src[i];
    out[static_cast<std::size_t>(rx)] = acc;
  }
  return out;
}

inline std::vector<cplx> apply_external_adjoint(const GreenKernel& kern,
                                                const std::vector<cplx>& y) {
  if (y.size() != static_cast<std::size_t>(kern.n_receivers))
    throw DataError("external adjoint: receiver count mismatch");
  const std::size_t nc = kern.grid.cell_count();
  std::vector<cplx> out(nc, cplx(0.0, 0.0));
  for (int rx = 0; rx < kern.n_receivers; ++rx) {
    const cplx* row = &kern.external[static_cast<std::size_t>(rx) * nc];
    const cplx w = y[static_cast<std::size_t>(rx)];
    for (std::size_t i = 0; i < nc; ++i) out[i] += std::conj(row[i]) * w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Incident field of an ideal unit line source at transmitter `view`.
// ---------------------------------------------------------------------------

inline FieldMap incident_field(const ExperimentConfig& config, int view) {
  config.validate();
  if (view < 0 || view >= config.array.count)
    throw ConfigError("incident_field: view index out of range");
  const double k = real_wavenumber(config);
  const double omega = 2.0 * kPi * config.frequency;
  // Unit-current line source: E_i(r) = -(omega mu0 / 4) H0^(2)(k |r - r_tx|).
  const double tx_x = config.array.x(view), tx_y = config.array.y(view);
  FieldMap field;
  field.grid = config.grid;
  field.view_index = view;
  field.values.resize(config.grid.cell_count());
  const int n = config.grid.n;
  const double scale = -0.25 * omega * kMu0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double dist = std::hypot(tx_x - config.grid.cell_x(c), tx_y - config.grid.cell_y(r));
      if (dist < 1e-12)
        throw ConfigError("incident_field: transmitter coincides with a cell center");
      field.values[static_cast<std::size_t>(r) * n + c] = scale * hankel2_0(k * dist);
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// Krylov solve of the domain equation (I - K diag(chi)) x = rhs via conjugate
// gradients on the normal equations. The reported residual is the relative
// data-space residual ||rhs - A x|| / ||rhs||, which is non-increasing.
// ---------------------------------------------------------------------------

namespace fwddetail {

inline double norm2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

inline cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace fwddetail

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

// Generic CGNR for operator pair (A, A^H).
inline std::vector<cplx> cgnr_solve(
    const std::function<std::vector<cplx>(const std::vector<cplx>&)>& apply,
    const std::function<std::vector<cplx>(const std::vector<cplx>&)>& apply_adjoint,
    const std::vector<cplx>& rhs, const std::vector<cplx>& x0, double tol, int max_iter,
    SolveStats* stats = nullptr) {
  using fwddetail::norm2;
  const double rhs_norm = norm2(rhs);
  std::vector<cplx> x = x0;
  if (rhs_norm == 0.0) {
    std::fill(x.begin(), x.end(), cplx(0.0, 0.0));
    if (stats) *stats = {0, 0.0};
    return x;
  }
  std::vector<cplx> r = apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
  double res = norm2(r) / rhs_norm;
  std::vector<cplx> z = apply_adjoint(r);
  std::vector<cplx> d = z;
  double rho = 0.0;
  for (const cplx& v : z) rho += std::norm(v);
  int it = 0;
  while (res > tol && it < max_iter) {
    if (rho == 0.0) break;  // stationary point of the normal equations
    std::vector<cplx> w = apply(d);
    double wn = 0.0;
    for (const cplx& v : w) wn += std::norm(v);
    if (wn == 0.0) break;
    const double alpha = rho / wn;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * d[i];
      r[i] -= alpha * w[i];
    }
    z = apply_adjoint(r);
    double rho_new = 0.0;
    for (const cplx& v : z) rho_new += std::norm(v);
    const double beta = rho_new / rho;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = z[i] + beta * d[i];
    rho = rho_new;
    res = norm2(r) / rhs_norm;
    ++it;
  }
  if (stats) *stats = {it, res};
  if (res > tol)
    throw NumericalError("cgnr_solve: no convergence after " + std::to_string(it) +
                         " iterations (residual " + std::to_string(res) + ")");
  return x;
}

inline std::vector<cplx> solve_domain(const GreenKernel& kern, const std::vector<cplx>& chi,
                                      const std::vector<cplx>& rhs, double tol, int max_iter,
                                      SolveStats* stats = nullptr) {
  auto apply = [&](const std::vector<cplx>& x) {
    std::vector<cplx> src(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) src[i] = chi[i] * x[i];
    std::vector<cplx> out = apply_internal_operator(kern, src);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - out[i];
    return out;
  };
  auto apply_adjoint = [&](const std::vector<cplx>& y) {
    std::vector<cplx> t = apply_internal_adjoint(kern, y);
    std::vector<cplx> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - std::conj(chi[i]) * t[i];
    return out;
  };
  return cgnr_solve(apply, apply_adjoint, rhs, rhs, tol, max_iter, stats);
}

// Adjoint-system solve (I - K diag(chi))^H y = rhs, used by DBIM.
inline std::vector<cplx> solve_domain_adjoint(const GreenKernel& kern,
                                              const std::vector<cplx>& chi,
                                              const std::vector<cplx>& rhs, double tol,
                                              int max_iter, SolveStats* stats = nullptr) {
  auto apply = [&](const std::vector<cplx>& y) {
    std::vector<cplx> t = apply_internal_adjoint(kern, y);
    std::vector<cplx> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - std::conj(chi[i]) * t[i];
    return out;
  };
  auto apply_adjoint = [&](const std::vector<cplx>& x) {
    std::vector<cplx> src(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) src[i] = chi[i] * x[i];
    std::vector<cplx> out = apply_internal_operator(kern, src);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - out[i];
    return out;
  };
  return cgnr_solve(apply, apply_adjoint, rhs, rhs, tol, max_iter, stats);
}

inline FieldMap solve_total_field(const GreenKernel& kern, const ContrastMap& chi,
                                  const FieldMap& incident, double tol, int max_iter = 2000,
                                  SolveStats* stats = nullptr) {
  if (!(tol > 0.0) || tol > 1e-2)
    throw ConfigError("solve_total_field: tol must be in (0, 1e-2]");
  if (!(chi.grid == incident.grid) || !(chi.grid == kern.grid))
    throw DataError("solve_total_field: grid mismatch");
  for (const cplx& v : chi.chi)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DataError("solve_total_field: non-finite contrast");
  FieldMap total;
  total.grid = incident.grid;
  total.view_index = incident.view_index;
  total.values = solve_domain(kern, chi.chi, incident.values, tol, max_iter, stats);
  return total;
}

// E_s at receivers from a solved total field.
inline std::vector<cplx> scattered_field(const ContrastMap& chi, const FieldMap& total,
                                         const GreenKernel& kern) {
  if (!(chi.grid == total.grid) || !(chi.grid == kern.grid))
    throw DataError("scattered_field: grid/kernel mismatch");
  std::vector<cplx> src(chi.chi.size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = chi.chi[i] * total.values[i];
  return apply_external(kern, src);
}

// Antennas must lie outside every cell carrying contrast.
inline void validate_antenna_clearance(const ExperimentConfig& config, const ContrastMap& chi) {
  const double guard = config.grid.cell_size();
  for (int a = 0; a < config.array.count; ++a) {
    const double ax = config.array.x(a), ay = config.array.y(a);
    const int n = config.grid.n;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (chi.chi[static_cast<std::size_t>(r) * n + c] == cplx(0.0, 0.0)) continue;
        if (std::hypot(ax - config.grid.cell_x(c), ay - config.grid.cell_y(r)) < guard)
          throw DataError("antenna " + std::to_string(a) +
                          " lies inside a nonzero-contrast cell");
      }
    }
  }
}

struct ScatteringOptions {
  double tol = 1.0e-6;
  int max_iter = 2000;
};

inline ScatteringMatrix scattering_matrix(const ContrastMap& chi,
                                          const ExperimentConfig& config,
                                          const GreenKernel& kern,
                                          const ScatteringOptions& opts = {}) {
  validate_antenna_clearance(config, chi);
  ScatteringMatrix out;
  out.nv = config.array.count;
  out.nr = config.array.count;
  out.frequency = config.frequency;
  out.fingerprint = config.fingerprint();
  out.values.assign(static_cast<std::size_t>(out.nv) * out.nr, cplx(0.0, 0.0));
  std::vector<std::string> failures(static_cast<std::size_t>(out.nv));
  parallel_for(static_cast<std::size_t>(out.nv), [&](std::size_t v) {
    try {
      const FieldMap inc = incident_field(config, static_cast<int>(v));
      const FieldMap tot = solve_total_field(kern, chi, inc, opts.tol, opts.max_iter);
      const std::vector<cplx> row = scattered_field(chi, tot, kern);
      std::copy(row.begin(), row.end(), out.values.begin() + static_cast<std::ptrdiff_t>(v) * out.nr);
    } catch (const Error& e) {
      failures[v] = e.what();
    }
  });
  for (std::size_t v = 0; v < failures.size(); ++v)
    if (!failures[v].empty())
      throw NumericalError("scattering_matrix: view " + std::to_string(v) + ": " + failures[v]);
  return out;
}

inline ScatteringMatrix scattering_matrix(const Phantom& phantom,
                                          const ExperimentConfig& config,
                                          const GreenKernel& kern,
                                          const ScatteringOptions& opts = {}) {
  if (!(phantom.dielectrics.grid == config.grid))
    throw DataError("scattering_matrix: phantom and config grids differ");
  const ContrastMap chi = contrast_of(phantom.dielectrics, config.background, config.frequency);
  return scattering_matrix(chi, config, kern, opts);
}

// ---------------------------------------------------------------------------
// AWGN at a prescribed SNR, accounted over the whole matrix. An infinite
// snr_db is the no-noise sentinel.
// ---------------------------------------------------------------------------

inline ScatteringMatrix add_awgn(const ScatteringMatrix& s, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return s;
  if (!std::isfinite(snr_db)) throw ConfigError("add_awgn: snr_db must be finite or +inf");
  double signal_power = 0.0;
  for (const cplx& v : s.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DataError("add_awgn: non-finite scattering entry");
    signal_power += std::norm(v);
  }
  if (signal_power == 0.0)
    throw DataError("add_awgn: zero-signal matrix with finite SNR requested");
  const double noise_power = signal_power * from_db(-snr_db);
  const double comp_std = std::sqrt(noise_power / (2.0 * static_cast<double>(s.values.size())));
  ScatteringMatrix out = s;
  for (cplx& v : out.values)
    v += cplx(normal(rng, 0.0, comp_std), normal(rng, 0.0, comp_std));
  return out;
}

// ---------------------------------------------------------------------------
// Dense reference solver (oracle for the FFT-CG path); O(n^6), guarded.
// ---------------------------------------------------------------------------

inline FieldMap dense_mom_solve(const ContrastMap& chi, const FieldMap& incident,
                                const ExperimentConfig& config) {
  if (config.grid.n > 32)
    throw ConfigError("dense_mom_solve: grid larger than 32x32 refused");
  if (!(chi.grid == incident.grid) || !(chi.grid == config.grid))
    throw DataError("dense_mom_solve: grid mismatch");
  const GreenKernel kern = build_green_kernel(config);
  const int n = config.grid.n;
  const auto nc = static_cast<Eigen::Index>(config.grid.cell_count());
  Eigen::MatrixXcd A(nc, nc);
  for (int pr = 0; pr < n; ++pr) {
    for (int pc = 0; pc < n; ++pc) {
      const Eigen::Index p = static_cast<Eigen::Index>(pr) * n + pc;
      for (int qr = 0; qr < n; ++qr) {
        for (int qc = 0; qc < n; ++qc) {
          const Eigen::Index q = static_cast<Eigen::Index>(qr) * n + qc;
          cplx v = -kern.internal_at(pr - qr, pc - qc) * chi.chi[static_cast<std::size_t>(q)];
          if (p == q) v += 1.0;
          A(p, q) = v;
        }
      }
    }
  }
  Eigen::VectorXcd b(nc);
  for (Eigen::Index i = 0; i < nc; ++i) b(i) = incident.values[static_cast<std::size_t>(i)];
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  const Eigen::VectorXcd x = lu.solve(b);
  if (!x.allFinite()) throw NumericalError("dense_mom_solve: singular system");
  FieldMap out;
  out.grid = config.grid;
  out.view_index = incident.view_index;
  out.values.resize(config.grid.cell_count());
  for (Eigen::Index i = 0; i < nc; ++i) out.values[static_cast<std::size_t>(i)] = x(i);
  return out;
}

// ---------------------------------------------------------------------------
// MWTS scattering-matrix file: magic, u32 Nv, u32 Nr, f64 frequency,
// interleaved (re, im) f64 row-major payload, 32-byte config fingerprint.
// ---------------------------------------------------------------------------

inline void write_scattering(const std::string& path, const ScatteringMatrix& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open scattering file for writing: " + path);
  out.write("MWTS", 4);
  const std::uint32_t nv = static_cast<std::uint32_t>(s.nv), nr = static_cast<std::uint32_t>(s.nr);
  out.write(reinterpret_cast<const char*>(&nv), 4);
  out.write(reinterpret_cast<const char*>(&nr), 4);
  out.write(reinterpret_cast<const char*>(&s.frequency), 8);
  for (const cplx& v : s.values) {
    const double re = v.real(), im = v.imag();
    out.write(reinterpret_cast<const char*>(&re), 8);
    out.write(reinterpret_cast<const char*>(&im), 8);
  }
  std::uint64_t fp[4] = {s.fingerprint, splitmix64(s.fingerprint),
                         splitmix64(splitmix64(s.fingerprint)),
                         splitmix64(splitmix64(splitmix64(s.fingerprint)))};
  out.write(reinterpret_cast<const char*>(fp), 32);
  if (!out) throw DataError("failed writing scattering file: " + path);
}

inline ScatteringMatrix read_scattering(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scattering file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MWTS", 4) != 0)
    throw DataError("not an MWTS scattering file: " + path);
  std::uint32_t nv = 0, nr = 0;
  double freq = 0.0;
  if (!in.read(reinterpret_cast<char*>(&nv), 4) || !in.read(reinterpret_cast<char*>(&nr), 4) ||
      !in.read(reinterpret_cast<char*>(&freq), 8))
    throw DataError("truncated scattering file: " + path);
  if (nv == 0 || nr == 0 || nv > (1u << 16) || nr > (1u << 16))
    throw DataError("implausible scattering shape in " + path);
  ScatteringMatrix s;
  s.nv = static_cast<int>(nv);
  s.nr = static_cast<int>(nr);
  s.frequency = freq;
  s.values.resize(static_cast<std::size_t>(nv) * nr);
  for (cplx& v : s.values) {
    double re = 0.0, im = 0.0;
    if (!in.read(reinterpret_cast<char*>(&re), 8) || !in.read(reinterpret_cast<char*>(&im), 8))
      throw DataError("truncated scattering payload: " + path);
    v = cplx(re, im);
  }
  std::uint64_t fp[4] = {0, 0, 0, 0};
  if (!in.read(reinterpret_cast<char*>(fp), 32))
    throw DataError("truncated fingerprint in " + path);
  if (fp[1] != splitmix64(fp[0]))
    throw DataError("corrupt fingerprint block in " + path);
  s.fingerprint = fp[0];
  return s;
}

}  // namespace mwt

#endif  // MWT_FORWARD_HPP
