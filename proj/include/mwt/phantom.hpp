#ifndef MWT_PHANTOM_HPP
#define MWT_PHANTOM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/fft.hpp"
#include "mwt/raster_io.hpp"

namespace mwt {

// Tissue label codes used in label rasters and record files.
enum TissueLabel : std::uint8_t {
  kLabelBackground = 0,
  kLabelSkin = 1,
  kLabelAdipose = 2,
  kLabelTransitional = 3,
  kLabelFibroGlandular = 4,
};

enum class BreastClass : int { I = 1, II = 2, III = 3, IV = 4 };

inline BreastClass breast_class_from_string(const std::string& s) {
  if (s == "I" || s == "1") return BreastClass::I;
  if (s == "II" || s == "2") return BreastClass::II;
  if (s == "III" || s == "3") return BreastClass::III;
  if (s == "IV" || s == "4") return BreastClass::IV;
  throw ConfigError("unknown breast class: " + s + " (expected I, II, III or IV)");
}

inline std::string to_string(BreastClass c) {
  switch (c) {
    case BreastClass::I: return "I";
    case BreastClass::II: return "II";
    case BreastClass::III: return "III";
    case BreastClass::IV: return "IV";
  }
  return "?";
}

struct PercentRange {
  double min_pct = 0.0;
  double max_pct = 0.0;
};

// Inner-tissue area percentages per breast density class. Skin is excluded
// from the accounting; only adipose/transitional/fibro-glandular count.
struct BreastClassSpec {
  BreastClass class_id = BreastClass::I;
  PercentRange fibro;
  PercentRange transitional;
  PercentRange adipose;
};

inline const BreastClassSpec& class_spec(BreastClass c) {
  static const std::array<BreastClassSpec, 4> specs = {{
      {BreastClass::I, {5.0, 20.0}, {5.0, 15.0}, {65.0, 90.0}},
      {BreastClass::II, {20.0, 30.0}, {10.0, 20.0}, {50.0, 70.0}},
      {BreastClass::III, {30.0, 40.0}, {15.0, 20.0}, {40.0, 55.0}},
      {BreastClass::IV, {40.0, 65.0}, {20.0, 25.0}, {10.0, 40.0}},
  }};
  return specs[static_cast<std::size_t>(static_cast<int>(c) - 1)];
}

struct BreastGeometry {
  double semi_a = 0.0;         // meters
  double semi_b = 0.0;         // meters
  double center_x = 0.0;       // meters
  double center_y = 0.0;       // meters
  double orientation = 0.0;    // radians
  double skin_thickness = 0.0; // meters

  // true if (x, y) lies inside the ellipse with semi-axes shrunk by `inset`.
  bool inside(double x, double y, double inset = 0.0) const {
    const double dx = x - center_x;
    const double dy = y - center_y;
    const double ct = std::cos(orientation), st = std::sin(orientation);
    const double u = ct * dx + st * dy;
    const double v = -st * dx + ct * dy;
    const double a = semi_a - inset, b = semi_b - inset;
    if (a <= 0.0 || b <= 0.0) return false;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

struct GeometryRanges {
  double semi_axis_min = 0.0325;      // full axes in [6.5, 12] cm
  double semi_axis_max = 0.06;
  double center_offset_max = 0.01;    // inside a circle of radius 1 cm
  double skin_min = 0.0015;           // [1.5, 2.5] mm
  double skin_max = 0.0025;
};

inline BreastGeometry sample_geometry(const GeometryRanges& ranges, Rng& rng) {
  BreastGeometry g;
  g.semi_a = uniform_in(rng, ranges.semi_axis_min, ranges.semi_axis_max);
  g.semi_b = uniform_in(rng, ranges.semi_axis_min, ranges.semi_axis_max);
  // uniform over the offset disc
  const double r = ranges.center_offset_max * std::sqrt(uniform_in(rng, 0.0, 1.0));
  const double phi = uniform_in(rng, 0.0, 2.0 * kPi);
  g.center_x = r * std::cos(phi);
  g.center_y = r * std::sin(phi);
  g.orientation = uniform_in(rng, 0.0, 2.0 * kPi);
  g.skin_thickness = uniform_in(rng, ranges.skin_min, ranges.skin_max);
  return g;
}

// ---------------------------------------------------------------------------
// Multifractal-style texture: spectral synthesis with an isotropic power-law
// spectrum ~ |k|^(-spectral_exponent) and uniformly random phases. The result
// is normalized to zero mean and unit variance.
// ---------------------------------------------------------------------------

inline std::vector<double> multifractal_field(const Grid& grid, double spectral_exponent,
                                              Rng& rng) {
  grid.validate();
  if (!(spectral_exponent >= 0.0))
    throw ConfigError("multifractal_field: spectral_exponent must be >= 0");
  const int n = grid.n;
  std::vector<cplx> spec(grid.cell_count());
  for (int r = 0; r < n; ++r) {
    const int kr = r <= n / 2 ? r : r - n;
    for (int c = 0; c < n; ++c) {
      const int kc = c <= n / 2 ? c : c - n;
      const double phase = uniform_in(rng, 0.0, 2.0 * kPi);
      const double kmag = std::sqrt(static_cast<double>(kr) * kr + static_cast<double>(kc) * kc);
      double amp = 0.0;
      if (kmag > 0.0) amp = std::pow(kmag, -0.5 * spectral_exponent);
      spec[static_cast<std::size_t>(r) * n + c] = std::polar(amp, phase);
    }
  }
  ifft2(spec, n, n);
  std::vector<double> field(grid.cell_count());
  for (std::size_t i = 0; i < field.size(); ++i) field[i] = spec[i].real();
  double mean = std::accumulate(field.begin(), field.end(), 0.0) / field.size();
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  var /= field.size();
  if (!(var > 0.0)) throw NumericalError("multifractal_field: degenerate zero-variance field");
  const double inv_std = 1.0 / std::sqrt(var);
  for (double& v : field) v = (v - mean) * inv_std;
  return field;
}

// ---------------------------------------------------------------------------
// Tissue segmentation
// ---------------------------------------------------------------------------

struct TissueLabelMap {
  Grid grid;
  std::vector<std::uint8_t> labels;

  double tissue_percent(std::uint8_t label) const {
    std::size_t inner = 0, hit = 0;
    for (std::uint8_t l : labels) {
      if (l >= kLabelAdipose) {
        ++inner;
        if (l == label) ++hit;
      }
    }
    return inner == 0 ? 0.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(inner);
  }
};

// Target percentages drawn uniformly inside the class ranges shrunk by a 2 pp
// margin; fibro and transitional are drawn, adipose takes the remainder (the
// Table-I ranges make the remainder land inside the adipose range for every
// class). Interior pixels are then labeled by field-value quantiles.
inline TissueLabelMap segment_tissues(const std::vector<double>& field,
                                      const Grid& grid, const BreastGeometry& geometry,
                                      const BreastClassSpec& spec, Rng& rng) {
  grid.validate();
  if (field.size() != grid.cell_count())
    throw DataError("segment_tissues: field shape does not match grid");
  const int n = grid.n;
  TissueLabelMap out;
  out.grid = grid;
  out.labels.assign(grid.cell_count(), kLabelBackground);

  const double half = 0.5 * grid.side_length;
  const double max_extent = std::max(geometry.semi_a, geometry.semi_b) +
                            std::hypot(geometry.center_x - grid.origin_x,
                                       geometry.center_y - grid.origin_y);
  if (max_extent > half)
    throw DataError("segment_tissues: ellipse does not fit inside the grid");

  std::vector<std::size_t> interior;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      const double x = grid.cell_x(c), y = grid.cell_y(r);
      if (geometry.inside(x, y, geometry.skin_thickness)) {
        out.labels[idx] = kLabelAdipose;  // provisional interior
        interior.push_back(idx);
      } else if (geometry.inside(x, y)) {
        out.labels[idx] = kLabelSkin;
      }
    }
  }
  // The sampled skin band can be thinner than one cell; force a closed band by
  // relabeling interior cells that touch the background.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      if (out.labels[idx] < kLabelAdipose) continue;
      const bool edge = r == 0 || c == 0 || r == n - 1 || c == n - 1 ||
                        out.labels[idx - 1] == kLabelBackground ||
                        out.labels[idx + 1] == kLabelBackground ||
                        out.labels[idx - static_cast<std::size_t>(n)] == kLabelBackground ||
                        out.labels[idx + static_cast<std::size_t>(n)] == kLabelBackground;
      if (edge) out.labels[idx] = kLabelSkin;
    }
  }
  interior.erase(std::remove_if(interior.begin(), interior.end(),
                                [&](std::size_t i) { return out.labels[i] != kLabelAdipose; }),
                 interior.end());
  if (interior.size() < 32)
    throw DataError("segment_tissues: interior too small (" +
                    std::to_string(interior.size()) + " cells) for quantile segmentation");

  double fmin = field[interior.front()], fmax = fmin;
  for (std::size_t i : interior) {
    fmin = std::min(fmin, field[i]);
    fmax = std::max(fmax, field[i]);
  }
  if (!(fmax > fmin))
    throw DataError("segment_tissues: degenerate constant field, quantiles undefined");

  constexpr double kMarginPct = 2.0;
  const double fibro_pct = uniform_in(rng, spec.fibro.min_pct + kMarginPct,
                                      spec.fibro.max_pct - kMarginPct);
  const double trans_pct = uniform_in(rng, spec.transitional.min_pct + kMarginPct,
                                      spec.transitional.max_pct - kMarginPct);
  const double adip_pct = 100.0 - fibro_pct - trans_pct;
  if (adip_pct < spec.adipose.min_pct || adip_pct > spec.adipose.max_pct)
    throw DataError("segment_tissues: adipose remainder outside class range");

  // Quantile assignment: lowest field values -> adipose, mid -> transitional,
  // highest -> fibro-glandular. Ties broken by index for determinism.
  std::vector<std::size_t> order = interior;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (field[a] != field[b]) return field[a] < field[b];
    return a < b;
  });
  const std::size_t total = order.size();
  const std::size_t n_fibro =
      static_cast<std::size_t>(std::lround(fibro_pct / 100.0 * static_cast<double>(total)));
  const std::size_t n_trans =
      static_cast<std::size_t>(std::lround(trans_pct / 100.0 * static_cast<double>(total)));
  if (n_fibro + n_trans > total)
    throw DataError("segment_tissues: quantile counts exceed interior size");
  const std::size_t n_adip = total - n_fibro - n_trans;
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_adip) out.labels[order[i]] = kLabelAdipose;
    else if (i < n_adip + n_trans) out.labels[order[i]] = kLabelTransitional;
    else out.labels[order[i]] = kLabelFibroGlandular;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dielectric sampling
// ---------------------------------------------------------------------------

struct TruncatedNormalSpec {
  double mean = 0.0;
  double stddev = 1.0;
  double lower = 0.0;
  double upper = 1.0;

  void validate(const std::string& name) const {
    if (!(stddev > 0.0)) throw ConfigError(name + ": stddev must be > 0");
    if (!(lower < upper)) throw ConfigError(name + ": empty truncation interval");
    if (mean < lower || mean > upper)
      throw ConfigError(name + ": mean outside truncation bounds");
  }
};

struct TissueStats {
  TruncatedNormalSpec eps_r;
  TruncatedNormalSpec sigma;
};

// Defaults at 1 GHz; configuration, not literature ground truth.
struct TissueDielectricStats {
  TissueStats skin{{38.0, 3.0, 30.0, 46.0}, {1.1, 0.2, 0.6, 1.8}};
  TissueStats adipose{{5.0, 1.0, 2.5, 10.0}, {0.10, 0.05, 0.01, 0.4}};
  TissueStats transitional{{20.0, 4.0, 10.0, 32.0}, {0.45, 0.15, 0.1, 1.0}};
  TissueStats fibro{{40.0, 6.0, 28.0, 60.0}, {1.0, 0.3, 0.4, 2.5}};
  double jitter_fraction = 0.10;  // per-pixel std as a fraction of the drawn base value

  const TissueStats& for_label(std::uint8_t label) const {
    switch (label) {
      case kLabelSkin: return skin;
      case kLabelAdipose: return adipose;
      case kLabelTransitional: return transitional;
      case kLabelFibroGlandular: return fibro;
      default: throw ConfigError("no dielectric stats for label " + std::to_string(label));
    }
  }

  void validate() const {
    skin.eps_r.validate("skin.eps_r");
    skin.sigma.validate("skin.sigma");
    adipose.eps_r.validate("adipose.eps_r");
    adipose.sigma.validate("adipose.sigma");
    transitional.eps_r.validate("transitional.eps_r");
    transitional.sigma.validate("transitional.sigma");
    fibro.eps_r.validate("fibro.eps_r");
    fibro.sigma.validate("fibro.sigma");
    if (!(jitter_fraction >= 0.0)) throw ConfigError("jitter_fraction must be >= 0");
  }
};

inline DielectricMap assign_dielectrics(const TissueLabelMap& labels,
                                        const TissueDielectricStats& stats,
                                        const BackgroundMedium& bg, Rng& rng) {
  stats.validate();
  bg.validate();
  DielectricMap map(labels.grid, bg.eps_r_b, bg.sigma_b);

  // One base value per tissue per phantom, then per-pixel jitter.
  struct Base { double eps, sig; };
  std::array<Base, 5> base{};
  for (std::uint8_t l : {kLabelSkin, kLabelAdipose, kLabelTransitional, kLabelFibroGlandular}) {
    const TissueStats& ts = stats.for_label(l);
    base[l].eps = truncated_normal(rng, ts.eps_r.mean, ts.eps_r.stddev, ts.eps_r.lower,
                                   ts.eps_r.upper);
    base[l].sig = truncated_normal(rng, ts.sigma.mean, ts.sigma.stddev, ts.sigma.lower,
                                   ts.sigma.upper);
  }
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const std::uint8_t l = labels.labels[i];
    if (l == kLabelBackground) continue;
    const TissueStats& ts = stats.for_label(l);
    double eps = base[l].eps;
    double sig = base[l].sig;
    if (stats.jitter_fraction > 0.0) {
      eps += normal(rng, 0.0, stats.jitter_fraction * base[l].eps);
      sig += normal(rng, 0.0, stats.jitter_fraction * base[l].sig);
    }
    eps = std::clamp(eps, std::max(1.0, ts.eps_r.lower), ts.eps_r.upper);
    sig = std::clamp(sig, std::max(0.0, ts.sigma.lower), ts.sigma.upper);
    map.eps_r[i] = eps;
    map.sigma[i] = sig;
  }
  return map;
}

// Gaussian blur of both rasters restricted to the inner-tissue support
// (labels 2-4); skin and background are untouched. kernel_std is in pixels;
// 0 is the identity.
inline DielectricMap smooth_correlate(const DielectricMap& map, const TissueLabelMap& labels,
                                      double kernel_std) {
  if (!(kernel_std >= 0.0)) throw ConfigError("smooth_correlate: kernel_std must be >= 0");
  if (!(map.grid == labels.grid))
    throw DataError("smooth_correlate: map and labels grids differ");
  if (kernel_std == 0.0) return map;

  const int n = map.grid.n;
  const int radius = static_cast<int>(std::ceil(3.0 * kernel_std));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  for (int d = -radius; d <= radius; ++d)
    w[static_cast<std::size_t>(d + radius)] = std::exp(-0.5 * d * d / (kernel_std * kernel_std));

  DielectricMap out = map;
  auto in_region = [&](int r, int c) {
    return labels.labels[static_cast<std::size_t>(r) * n + c] >= kLabelAdipose;
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!in_region(r, c)) continue;
      double weight_sum = 0.0, eps_sum = 0.0, sig_sum = 0.0;
      for (int dr = -radius; dr <= radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= n) continue;
        for (int dc = -radius; dc <= radius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= n || !in_region(rr, cc)) continue;
          const double wk = w[static_cast<std::size_t>(dr + radius)] *
                            w[static_cast<std::size_t>(dc + radius)];
          const std::size_t idx = static_cast<std::size_t>(rr) * n + cc;
          weight_sum += wk;
          eps_sum += wk * map.eps_r[idx];
          sig_sum += wk * map.sigma[idx];
        }
      }
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      out.eps_r[idx] = eps_sum / weight_sum;
      out.sigma[idx] = sig_sum / weight_sum;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full generator
// ---------------------------------------------------------------------------

struct PhantomGenConfig {
  Grid grid;
  BackgroundMedium background;
  GeometryRanges geometry;
  TissueDielectricStats stats;
  double spectral_exponent = 3.0;
  double smoothing_std_px = 1.0;
};

inline PhantomGenConfig phantom_gen_from_kv(const KeyValueConfig& kv,
                                            const ExperimentConfig& exp) {
  PhantomGenConfig cfg;
  cfg.grid = exp.grid;
  cfg.background = exp.background;
  cfg.spectral_exponent = kv.get_double("phantom.spectral_exponent", cfg.spectral_exponent);
  cfg.smoothing_std_px = kv.get_double("phantom.smoothing_std_px", cfg.smoothing_std_px);
  cfg.stats.jitter_fraction = kv.get_double("phantom.jitter_fraction", cfg.stats.jitter_fraction);
  auto load = [&](const std::string& name, TissueStats& ts) {
    ts.eps_r.mean = kv.get_double("phantom." + name + ".eps_mean", ts.eps_r.mean);
    ts.eps_r.stddev = kv.get_double("phantom." + name + ".eps_std", ts.eps_r.stddev);
    ts.eps_r.lower = kv.get_double("phantom." + name + ".eps_min", ts.eps_r.lower);
    ts.eps_r.upper = kv.get_double("phantom." + name + ".eps_max", ts.eps_r.upper);
    ts.sigma.mean = kv.get_double("phantom." + name + ".sigma_mean", ts.sigma.mean);
    ts.sigma.stddev = kv.get_double("phantom." + name + ".sigma_std", ts.sigma.stddev);
    ts.sigma.lower = kv.get_double("phantom." + name + ".sigma_min", ts.sigma.lower);
    ts.sigma.upper = kv.get_double("phantom." + name + ".sigma_max", ts.sigma.upper);
  };
  load("skin", cfg.stats.skin);
  load("adipose", cfg.stats.adipose);
  load("transitional", cfg.stats.transitional);
  load("fibro", cfg.stats.fibro);
  cfg.stats.validate();
  return cfg;
}

struct Phantom {
  TissueLabelMap labels;
  DielectricMap dielectrics;
  BreastGeometry geometry;
  BreastClass class_id = BreastClass::I;
  std::uint64_t seed = 0;
};

// Pure function of (class_id, config, seed); retries segmentation rejections
// with a derived stream, up to 10 attempts.
inline Phantom generate_phantom(BreastClass class_id, const PhantomGenConfig& config,
                                std::uint64_t seed) {
  config.grid.validate();
  config.background.validate();
  const BreastClassSpec& spec = class_spec(class_id);
  std::string last_error;
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    Rng rng = make_rng(seed, 0x70686e746dULL, attempt);
    try {
      Phantom p;
      p.class_id = class_id;
      p.seed = seed;
      p.geometry = sample_geometry(config.geometry, rng);
      const std::vector<double> field =
          multifractal_field(config.grid, config.spectral_exponent, rng);
      p.labels = segment_tissues(field, config.grid, p.geometry, spec, rng);
      DielectricMap raw = assign_dielectrics(p.labels, config.stats, config.background, rng);
      p.dielectrics = smooth_correlate(raw, p.labels, config.smoothing_std_px);
      p.dielectrics.validate();
      return p;
    } catch (const DataError& e) {
      last_error = e.what();
    }
  }
  throw DataError("generate_phantom: 10 attempts rejected, last: " + last_error);
}

// ---------------------------------------------------------------------------
// External phantom import (MWTR raster pair). Labels are derived by
// permittivity thresholds: exact background match -> background, eps_r < 10
// -> adipose, 10 <= eps_r < 28 -> transitional, >= 28 -> fibro-glandular;
// tissue cells adjacent to background are relabeled skin.
// ---------------------------------------------------------------------------

inline Phantom import_external_phantom(const std::string& eps_path,
                                       const std::string& sigma_path, const Grid& grid,
                                       const BackgroundMedium& bg) {
  grid.validate();
  const RasterData eps = read_raster(eps_path);
  const RasterData sig = read_raster(sigma_path);
  auto shape_check = [&](const RasterData& r, const std::string& path) {
    if (r.n_rows != grid.n || r.n_cols != grid.n)
      throw DataError("raster shape mismatch: " + path + " is " + std::to_string(r.n_rows) +
                      "x" + std::to_string(r.n_cols) + ", grid expects " +
                      std::to_string(grid.n) + "x" + std::to_string(grid.n));
  };
  shape_check(eps, eps_path);
  shape_check(sig, sigma_path);

  Phantom p;
  p.seed = 0;
  p.labels.grid = grid;
  p.labels.labels.assign(grid.cell_count(), kLabelBackground);
  p.dielectrics = DielectricMap(grid, bg.eps_r_b, bg.sigma_b);
  const int n = grid.n;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      const double e = eps.values[i], s = sig.values[i];
      if (!(e >= 1.0) || !std::isfinite(e))
        throw DataError("imported eps_r < 1 or non-finite at (row " + std::to_string(r) +
                        ", col " + std::to_string(c) + "): " + std::to_string(e));
      if (!(s >= 0.0) || !std::isfinite(s))
        throw DataError("imported sigma < 0 or non-finite at (row " + std::to_string(r) +
                        ", col " + std::to_string(c) + "): " + std::to_string(s));
      p.dielectrics.eps_r[i] = e;
      p.dielectrics.sigma[i] = s;
      if (e == bg.eps_r_b && s == bg.sigma_b) continue;
      if (e < 10.0) p.labels.labels[i] = kLabelAdipose;
      else if (e < 28.0) p.labels.labels[i] = kLabelTransitional;
      else p.labels.labels[i] = kLabelFibroGlandular;
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      if (p.labels.labels[i] == kLabelBackground) continue;
      const bool edge = r == 0 || c == 0 || r == n - 1 || c == n - 1 ||
                        p.labels.labels[i - 1] == kLabelBackground ||
                        p.labels.labels[i + 1] == kLabelBackground ||
                        p.labels.labels[i - static_cast<std::size_t>(n)] == kLabelBackground ||
                        p.labels.labels[i + static_cast<std::size_t>(n)] == kLabelBackground;
      if (edge) p.labels.labels[i] = kLabelSkin;
    }
  }
  return p;
}

inline void export_phantom_rasters(const Phantom& p, const std::string& eps_path,
                                   const std::string& sigma_path,
                                   const std::string& labels_path = {}) {
  const int n = p.dielectrics.grid.n;
  write_raster(eps_path, p.dielectrics.eps_r, n, n);
  write_raster(sigma_path, p.dielectrics.sigma, n, n);
  if (!labels_path.empty()) {
    std::vector<double> lab(p.labels.labels.begin(), p.labels.labels.end());
    write_raster(labels_path, lab, n, n);
  }
}

}  // namespace mwt

#endif  // MWT_PHANTOM_HPP
