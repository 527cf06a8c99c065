#ifndef MWT_INVERSION_HPP
#define MWT_INVERSION_HPP

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "mwt/forward.hpp"

namespace mwt {

// ---------------------------------------------------------------------------
// Classical iterative baselines: Born (single linearized step), distorted
// Born (DBIM), and contrast-source inversion (CSI). All work on the complex
// contrast chi = (eps_c - eps_b) / eps_b and share the discrete operators of
// the forward solver.
// ---------------------------------------------------------------------------

struct PhysicalBounds {
  double eps_min = 1.0;
  double eps_max = 80.0;
  double sigma_min = 0.0;
  double sigma_max = 4.0;
};

struct InversionOptions {
  int max_iterations = 15;
  double data_tol = 1e-4;       // stop when ||residual|| / ||data|| falls below
  double solver_tol = 1e-6;     // inner domain-equation solves
  int solver_max_iter = 2000;
  int ls_iterations = 30;       // CG steps for the regularized linear subproblem
  double lambda_factor = 1e-2;  // Tikhonov weight relative to sigma_max(J)
  int backtrack_limit = 5;
  PhysicalBounds bounds;
};

inline InversionOptions csi_default_options() {
  InversionOptions o;
  o.max_iterations = 256;
  o.data_tol = 1e-6;  // CSI stops on functional stagnation instead
  return o;
}

struct IterationStats {
  double residual = 0.0;    // relative data residual
  double functional = 0.0;  // method-specific objective value
  double seconds = 0.0;
};

struct InversionResult {
  DielectricMap map;
  std::vector<cplx> chi;
  std::vector<IterationStats> iterations;
  double seconds = 0.0;
};

namespace invdetail {

struct ChiBox {
  double re_min, re_max, im_min, im_max;
};

inline ChiBox chi_box(const ExperimentConfig& config, const PhysicalBounds& b) {
  const double eps_b = config.background.eps_r_b;
  const double omega = 2.0 * kPi * config.frequency;
  ChiBox box;
  box.re_min = (b.eps_min - eps_b) / eps_b;
  box.re_max = (b.eps_max - eps_b) / eps_b;
  // sigma >= 0 maps to Im(chi) <= 0 under the e^{+j omega t} convention.
  box.im_min = -b.sigma_max / (omega * kEps0 * eps_b);
  box.im_max = -b.sigma_min / (omega * kEps0 * eps_b);
  return box;
}

inline void project_chi(std::vector<cplx>& chi, const ChiBox& box) {
  for (cplx& v : chi)
    v = cplx(std::clamp(v.real(), box.re_min, box.re_max),
             std::clamp(v.imag(), box.im_min, box.im_max));
}

inline DielectricMap chi_to_map(const std::vector<cplx>& chi, const ExperimentConfig& config) {
  DielectricMap map(config.grid);
  const double eps_b = config.background.eps_r_b;
  const double omega = 2.0 * kPi * config.frequency;
  for (std::size_t i = 0; i < chi.size(); ++i) {
    map.eps_r[i] = std::max(1.0, eps_b * (1.0 + chi[i].real()));
    map.sigma[i] = std::max(0.0, -omega * kEps0 * eps_b * chi[i].imag());
  }
  return map;
}

inline std::vector<std::vector<cplx>> measured_rows(const ScatteringMatrix& s) {
  std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(s.nv));
  for (int v = 0; v < s.nv; ++v)
    rows[static_cast<std::size_t>(v)] =
        std::vector<cplx>(s.values.begin() + static_cast<std::ptrdiff_t>(v) * s.nr,
                          s.values.begin() + static_cast<std::ptrdiff_t>(v + 1) * s.nr);
  return rows;
}

inline double rows_norm(const std::vector<std::vector<cplx>>& rows) {
  double s = 0.0;
  for (const auto& row : rows)
    for (const cplx& v : row) s += std::norm(v);
  return std::sqrt(s);
}

inline void check_data(const ScatteringMatrix& s, const ExperimentConfig& config) {
  if (s.nv != config.array.count || s.nr != config.array.count)
    throw DataError("inversion: scattering matrix shape does not match the antenna array");
  if (s.frequency > 0.0 && std::abs(s.frequency - config.frequency) > 1e-6 * config.frequency)
    throw DataError("inversion: scattering matrix frequency differs from the configuration");
  for (const cplx& v : s.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DataError("inversion: non-finite scattering entry");
}

// Per-view state fields and predicted receiver rows for a given contrast.
struct ForwardState {
  std::vector<std::vector<cplx>> fields;  // total field per view
  std::vector<std::vector<cplx>> rows;    // predicted scattered samples per view
};

inline ForwardState forward_state(const std::vector<cplx>& chi, const GreenKernel& kern,
                                  const std::vector<std::vector<cplx>>& incident,
                                  const InversionOptions& opts) {
  const std::size_t nv = incident.size();
  ForwardState st;
  st.fields.resize(nv);
  st.rows.resize(nv);
  std::vector<std::string> failures(nv);
  parallel_for(nv, [&](std::size_t v) {
    try {
      st.fields[v] = solve_domain(kern, chi, incident[v], opts.solver_tol, opts.solver_max_iter);
      std::vector<cplx> src(chi.size());
      for (std::size_t i = 0; i < chi.size(); ++i) src[i] = chi[i] * st.fields[v][i];
      st.rows[v] = apply_external(kern, src);
    } catch (const Error& e) {
      failures[v] = e.what();
    }
  });
  for (std::size_t v = 0; v < nv; ++v)
    if (!failures[v].empty())
      throw NumericalError("inversion forward state, view " + std::to_string(v) + ": " +
                           failures[v]);
  return st;
}

inline double relative_residual(const ForwardState& st,
                                const std::vector<std::vector<cplx>>& data, double data_norm) {
  double s = 0.0;
  for (std::size_t v = 0; v < data.size(); ++v)
    for (std::size_t r = 0; r < data[v].size(); ++r) s += std::norm(data[v][r] - st.rows[v][r]);
  return std::sqrt(s) / data_norm;
}

// Distorted Jacobian at (chi, fields): per view
//   J_v dchi = A_e( s + chi .* (I - K chi)^{-1} K s ),  s = dchi .* E_t,v.
inline std::vector<std::vector<cplx>> jacobian_apply(
    const std::vector<cplx>& chi, const ForwardState& st, const GreenKernel& kern,
    const std::vector<cplx>& dchi, const InversionOptions& opts) {
  const std::size_t nv = st.fields.size();
  std::vector<std::vector<cplx>> out(nv);
  std::vector<std::string> failures(nv);
  parallel_for(nv, [&](std::size_t v) {
    try {
      std::vector<cplx> s(dchi.size());
      for (std::size_t i = 0; i < dchi.size(); ++i) s[i] = dchi[i] * st.fields[v][i];
      const std::vector<cplx> ks = apply_internal_operator(kern, s);
      const std::vector<cplx> z =
          solve_domain(kern, chi, ks, opts.solver_tol, opts.solver_max_iter);
      std::vector<cplx> src(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) src[i] = s[i] + chi[i] * z[i];
      out[v] = apply_external(kern, src);
    } catch (const Error& e) {
      failures[v] = e.what();
    }
  });
  for (std::size_t v = 0; v < nv; ++v)
    if (!failures[v].empty())
      throw NumericalError("jacobian apply, view " + std::to_string(v) + ": " + failures[v]);
  return out;
}

// Adjoint: J^H y = sum_v conj(E_t,v) .* ( g_v + K^H (I - K chi)^{-H} (conj(chi) .* g_v) )
// with g_v = A_e^H y_v.
inline std::vector<cplx> jacobian_adjoint(const std::vector<cplx>& chi, const ForwardState& st,
                                          const GreenKernel& kern,
                                          const std::vector<std::vector<cplx>>& y,
                                          const InversionOptions& opts) {
  const std::size_t nv = st.fields.size();
  const std::size_t nc = chi.size();
  std::vector<std::vector<cplx>> partial(nv);
  std::vector<std::string> failures(nv);
  parallel_for(nv, [&](std::size_t v) {
    try {
      const std::vector<cplx> g = apply_external_adjoint(kern, y[v]);
      std::vector<cplx> u(nc);
      for (std::size_t i = 0; i < nc; ++i) u[i] = std::conj(chi[i]) * g[i];
      const std::vector<cplx> w =
          solve_domain_adjoint(kern, chi, u, opts.solver_tol, opts.solver_max_iter);
      const std::vector<cplx> kw = apply_internal_adjoint(kern, w);
      std::vector<cplx> p(nc);
      for (std::size_t i = 0; i < nc; ++i)
        p[i] = std::conj(st.fields[v][i]) * (g[i] + kw[i]);
      partial[v] = std::move(p);
    } catch (const Error& e) {
      failures[v] = e.what();
    }
  });
  for (std::size_t v = 0; v < nv; ++v)
    if (!failures[v].empty())
      throw NumericalError("jacobian adjoint, view " + std::to_string(v) + ": " + failures[v]);
  std::vector<cplx> out(nc, cplx(0.0, 0.0));
  for (const auto& p : partial)
    for (std::size_t i = 0; i < nc; ++i) out[i] += p[i];
  return out;
}

inline double stacked_norm2(const std::vector<std::vector<cplx>>& rows) {
  double s = 0.0;
  for (const auto& row : rows)
    for (const cplx& v : row) s += std::norm(v);
  return s;
}

// Largest singular value of J by power iteration on J^H J.
inline double jacobian_sigma_max(const std::vector<cplx>& chi, const ForwardState& st,
                                 const GreenKernel& kern, const InversionOptions& opts,
                                 std::uint64_t seed) {
  const std::size_t nc = chi.size();
  Rng rng = make_rng(seed, 0x706f776572ULL);
  std::vector<cplx> v(nc);
  for (cplx& x : v) x = cplx(normal(rng, 0.0, 1.0), normal(rng, 0.0, 1.0));
  double lambda = 0.0;
  for (int it = 0; it < 20; ++it) {
    double vn = fwddetail::norm2(v);
    if (vn == 0.0) break;
    for (cplx& x : v) x /= vn;
    const auto jv = jacobian_apply(chi, st, kern, v, opts);
    v = jacobian_adjoint(chi, st, kern, jv, opts);
    lambda = fwddetail::norm2(v);
  }
  if (!(lambda > 0.0)) throw NumericalError("power iteration failed to estimate sigma_max");
  return std::sqrt(lambda);
}

// CG on the regularized normal equations (J^H J + lambda^2 I) x = J^H d.
// Runs a fixed iteration budget; the subproblem only needs an approximate
// solution, so no convergence guarantee is enforced here.
inline std::vector<cplx> tikhonov_step(const std::vector<cplx>& chi, const ForwardState& st,
                                       const GreenKernel& kern,
                                       const std::vector<std::vector<cplx>>& residual_rows,
                                       double lambda, const InversionOptions& opts) {
  const std::size_t nc = chi.size();
  const double lam2 = lambda * lambda;
  auto apply_normal = [&](const std::vector<cplx>& x) {
    const auto jx = jacobian_apply(chi, st, kern, x, opts);
    std::vector<cplx> out = jacobian_adjoint(chi, st, kern, jx, opts);
    for (std::size_t i = 0; i < nc; ++i) out[i] += lam2 * x[i];
    return out;
  };
  std::vector<cplx> b = jacobian_adjoint(chi, st, kern, residual_rows, opts);
  std::vector<cplx> x(nc, cplx(0.0, 0.0));
  std::vector<cplx> r = b;
  std::vector<cplx> d = r;
  double rho = 0.0;
  for (const cplx& v : r) rho += std::norm(v);
  const double rho0 = rho;
  for (int it = 0; it < opts.ls_iterations && rho > 1e-12 * rho0; ++it) {
    const std::vector<cplx> q = apply_normal(d);
    const double dq = fwddetail::dot(d, q).real();
    if (!(dq > 0.0)) break;
    const double alpha = rho / dq;
    for (std::size_t i = 0; i < nc; ++i) {
      x[i] += alpha * d[i];
      r[i] -= alpha * q[i];
    }
    double rho_new = 0.0;
    for (const cplx& v : r) rho_new += std::norm(v);
    const double beta = rho_new / rho;
    for (std::size_t i = 0; i < nc; ++i) d[i] = r[i] + beta * d[i];
    rho = rho_new;
  }
  return x;
}

}  // namespace invdetail

// ---------------------------------------------------------------------------
// Distorted Born iterative method. Each outer iteration linearizes around the
// current contrast, takes a Tikhonov-regularized Gauss-Newton step, and
// backtracks until the data residual decreases.
// ---------------------------------------------------------------------------

inline InversionResult dbim_invert(const ScatteringMatrix& measured,
                                   const ExperimentConfig& config, const GreenKernel& kern,
                                   const InversionOptions& opts = {}) {
  using namespace invdetail;
  check_data(measured, config);
  const auto t_start = std::chrono::steady_clock::now();
  const auto data = measured_rows(measured);
  const double data_norm = rows_norm(data);
  const ChiBox box = chi_box(config, opts.bounds);
  const std::size_t nc = config.grid.cell_count();

  std::vector<std::vector<cplx>> incident(static_cast<std::size_t>(config.array.count));
  for (int v = 0; v < config.array.count; ++v)
    incident[static_cast<std::size_t>(v)] = incident_field(config, v).values;

  InversionResult result;
  result.chi.assign(nc, cplx(0.0, 0.0));
  if (data_norm == 0.0) {
    result.map = chi_to_map(result.chi, config);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
  }

  ForwardState state = forward_state(result.chi, kern, incident, opts);
  double res = relative_residual(state, data, data_norm);
  double lambda = 0.0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto t_it = std::chrono::steady_clock::now();
    if (res <= opts.data_tol) break;
    if (it == 0)
      lambda = opts.lambda_factor *
               jacobian_sigma_max(result.chi, state, kern, opts, config.seed);

    std::vector<std::vector<cplx>> residual_rows(data.size());
    for (std::size_t v = 0; v < data.size(); ++v) {
      residual_rows[v].resize(data[v].size());
      for (std::size_t r = 0; r < data[v].size(); ++r)
        residual_rows[v][r] = data[v][r] - state.rows[v][r];
    }
    const std::vector<cplx> delta =
        tikhonov_step(result.chi, state, kern, residual_rows, lambda, opts);

    bool accepted = false;
    double alpha = 1.0;
    for (int t = 0; t <= opts.backtrack_limit; ++t, alpha *= 0.5) {
      std::vector<cplx> trial = result.chi;
      for (std::size_t i = 0; i < nc; ++i) trial[i] += alpha * delta[i];
      project_chi(trial, box);
      ForwardState trial_state = forward_state(trial, kern, incident, opts);
      const double trial_res = relative_residual(trial_state, data, data_norm);
      if (trial_res < res) {
        result.chi = std::move(trial);
        state = std::move(trial_state);
        res = trial_res;
        accepted = true;
        break;
      }
    }
    IterationStats stats;
    stats.residual = res;
    stats.functional = res * res;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_it).count();
    result.iterations.push_back(stats);
    if (!accepted) break;  // no step length improves the fit
  }

  result.map = chi_to_map(result.chi, config);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

// Single linearized step around the empty background: identical to the first
// DBIM iteration by construction.
inline InversionResult born_invert(const ScatteringMatrix& measured,
                                   const ExperimentConfig& config, const GreenKernel& kern,
                                   const InversionOptions& opts = {}) {
  InversionOptions o = opts;
  o.max_iterations = 1;
  return dbim_invert(measured, config, kern, o);
}

// ---------------------------------------------------------------------------
// Contrast-source inversion. Alternates Polak-Ribiere CG updates of the
// contrast sources with a closed-form pixelwise contrast update. The state
// weight eta_D is frozen after initialization so the recorded functional is
// non-increasing: the source line search is exact and the projected contrast
// update is the exact constrained minimizer of its pixel objective.
// ---------------------------------------------------------------------------

inline InversionResult csi_invert(const ScatteringMatrix& measured,
                                  const ExperimentConfig& config, const GreenKernel& kern,
                                  const InversionOptions& opts = csi_default_options()) {
  using namespace invdetail;
  check_data(measured, config);
  const auto t_start = std::chrono::steady_clock::now();
  const auto data = measured_rows(measured);
  const double data_norm = rows_norm(data);
  const ChiBox box = chi_box(config, opts.bounds);
  const std::size_t nc = config.grid.cell_count();
  const std::size_t nv = data.size();

  std::vector<std::vector<cplx>> incident(nv);
  for (std::size_t v = 0; v < nv; ++v)
    incident[v] = incident_field(config, static_cast<int>(v)).values;

  InversionResult result;
  result.chi.assign(nc, cplx(0.0, 0.0));
  if (data_norm == 0.0) {
    result.map = chi_to_map(result.chi, config);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
  }
  const double eta_s = 1.0 / (data_norm * data_norm);

  // Backpropagation initialization of the contrast sources.
  std::vector<std::vector<cplx>> w(nv), fields(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const std::vector<cplx> g = apply_external_adjoint(kern, data[v]);
    const std::vector<cplx> ag = apply_external(kern, g);
    double gn = 0.0, agn = 0.0;
    for (const cplx& x : g) gn += std::norm(x);
    for (const cplx& x : ag) agn += std::norm(x);
    const double scale = agn > 0.0 ? gn / agn : 0.0;
    w[v].resize(nc);
    for (std::size_t i = 0; i < nc; ++i) w[v][i] = scale * g[i];
    const std::vector<cplx> kw = apply_internal_operator(kern, w[v]);
    fields[v].resize(nc);
    for (std::size_t i = 0; i < nc; ++i) fields[v][i] = incident[v][i] + kw[i];
  }

  auto update_chi = [&]() {
    for (std::size_t i = 0; i < nc; ++i) {
      cplx num(0.0, 0.0);
      double den = 0.0;
      for (std::size_t v = 0; v < nv; ++v) {
        num += w[v][i] * std::conj(fields[v][i]);
        den += std::norm(fields[v][i]);
      }
      if (den > 0.0) result.chi[i] = num / den;  // keep previous value otherwise
    }
    project_chi(result.chi, box);
  };
  update_chi();

  double eta_d_den = 0.0;
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t i = 0; i < nc; ++i) eta_d_den += std::norm(result.chi[i] * incident[v][i]);
  if (eta_d_den == 0.0)
    for (std::size_t v = 0; v < nv; ++v)
      for (const cplx& x : incident[v]) eta_d_den += std::norm(x);
  const double eta_d = 1.0 / eta_d_den;

  std::vector<std::vector<cplx>> rho(nv), r(nv);
  auto refresh_residuals = [&]() {
    for (std::size_t v = 0; v < nv; ++v) {
      const std::vector<cplx> aw = apply_external(kern, w[v]);
      rho[v].resize(data[v].size());
      for (std::size_t k = 0; k < data[v].size(); ++k) rho[v][k] = data[v][k] - aw[k];
      r[v].resize(nc);
      for (std::size_t i = 0; i < nc; ++i)
        r[v][i] = result.chi[i] * fields[v][i] - w[v][i];
    }
  };
  refresh_residuals();
  auto functional = [&]() {
    double fd = 0.0, fs = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      for (const cplx& x : rho[v]) fd += std::norm(x);
      for (const cplx& x : r[v]) fs += std::norm(x);
    }
    return eta_s * fd + eta_d * fs;
  };
  auto data_residual = [&]() {
    double fd = 0.0;
    for (std::size_t v = 0; v < nv; ++v)
      for (const cplx& x : rho[v]) fd += std::norm(x);
    return std::sqrt(fd) / data_norm;
  };

  double f_cur = functional();
  std::vector<std::vector<cplx>> grad_prev(nv), dir(nv);
  double grad_prev_norm2 = 0.0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto t_it = std::chrono::steady_clock::now();

    // Gradient of the functional with respect to each contrast source.
    std::vector<std::vector<cplx>> grad(nv);
    double grad_norm2 = 0.0, pr_inner = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      const std::vector<cplx> g_data = apply_external_adjoint(kern, rho[v]);
      std::vector<cplx> cr(nc);
      for (std::size_t i = 0; i < nc; ++i) cr[i] = std::conj(result.chi[i]) * r[v][i];
      const std::vector<cplx> kcr = apply_internal_adjoint(kern, cr);
      grad[v].resize(nc);
      for (std::size_t i = 0; i < nc; ++i) {
        grad[v][i] = -eta_s * g_data[i] + eta_d * (kcr[i] - r[v][i]);
        grad_norm2 += std::norm(grad[v][i]);
        if (!grad_prev[v].empty())
          pr_inner += (std::conj(grad[v][i]) * (grad[v][i] - grad_prev[v][i])).real();
      }
    }
    if (grad_norm2 == 0.0) break;
    const double beta =
        (grad_prev_norm2 > 0.0) ? std::max(0.0, pr_inner / grad_prev_norm2) : 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      if (dir[v].empty()) dir[v].assign(nc, cplx(0.0, 0.0));
      for (std::size_t i = 0; i < nc; ++i) dir[v][i] = -grad[v][i] + beta * dir[v][i];
    }
    grad_prev = grad;
    grad_prev_norm2 = grad_norm2;

    // Exact line search: both residuals are affine in the step length.
    double num = 0.0, den = 0.0;
    std::vector<std::vector<cplx>> kd(nv), bd(nv), ad(nv);
    for (std::size_t v = 0; v < nv; ++v) {
      ad[v] = apply_external(kern, dir[v]);
      kd[v] = apply_internal_operator(kern, dir[v]);
      bd[v].resize(nc);
      for (std::size_t i = 0; i < nc; ++i)
        bd[v][i] = result.chi[i] * kd[v][i] - dir[v][i];
      for (std::size_t k = 0; k < ad[v].size(); ++k) {
        num -= eta_s * (std::conj(-ad[v][k]) * rho[v][k]).real();
        den += eta_s * std::norm(ad[v][k]);
      }
      for (std::size_t i = 0; i < nc; ++i) {
        num -= eta_d * (std::conj(bd[v][i]) * r[v][i]).real();
        den += eta_d * std::norm(bd[v][i]);
      }
    }
    if (!(den > 0.0)) break;
    const double alpha = num / den;

    for (std::size_t v = 0; v < nv; ++v) {
      for (std::size_t i = 0; i < nc; ++i) {
        w[v][i] += alpha * dir[v][i];
        fields[v][i] += alpha * kd[v][i];
      }
      for (std::size_t k = 0; k < rho[v].size(); ++k) rho[v][k] -= alpha * ad[v][k];
    }
    update_chi();
    for (std::size_t v = 0; v < nv; ++v)
      for (std::size_t i = 0; i < nc; ++i)
        r[v][i] = result.chi[i] * fields[v][i] - w[v][i];

    const double f_new = functional();
    IterationStats stats;
    stats.residual = data_residual();
    stats.functional = f_new;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_it).count();
    result.iterations.push_back(stats);
    if (!std::isfinite(f_new)) throw NumericalError("csi_invert: functional diverged");
    const double drop = f_cur - f_new;
    f_cur = f_new;
    if (drop >= 0.0 && drop < 1e-10 * std::max(f_cur, 1e-300)) break;  // stagnated
    if (stats.residual <= opts.data_tol) break;
  }

  result.map = chi_to_map(result.chi, config);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace mwt

#endif  // MWT_INVERSION_HPP
