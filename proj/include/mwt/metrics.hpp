#ifndef MWT_METRICS_HPP
#define MWT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/fft.hpp"

namespace mwt {

// ---------------------------------------------------------------------------
// Angularly averaged power spectrum of reconstruction ensembles, used to
// measure how much spatial detail a reconstruction method retains.
// ---------------------------------------------------------------------------

// Mean squared spectrum over an ensemble of n x n images. Each image has its
// mean removed before the 2D DFT, the squared magnitudes are averaged across
// the ensemble, and the result is returned DC-centered.
inline std::vector<double> mean_squared_spectrum(const std::vector<std::vector<double>>& images,
                                                 int n) {
  if (images.empty()) throw DataError("mean_squared_spectrum: empty ensemble");
  const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> acc(count, 0.0);
  std::vector<cplx> work(count);
  for (const auto& img : images) {
    if (img.size() != count)
      throw DataError("mean_squared_spectrum: image size does not match grid");
    double mean = 0.0;
    for (double v : img) mean += v;
    mean /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) work[i] = cplx(img[i] - mean, 0.0);
    fft2(work, n, n);
    for (std::size_t i = 0; i < count; ++i) acc[i] += std::norm(work[i]);
  }
  const double inv = 1.0 / static_cast<double>(images.size());
  for (double& v : acc) v *= inv;
  return fftshift2(acc, n, n);
}

struct RadialSpectrum {
  std::vector<double> frequency;   // bin centers, cycles per pixel
  std::vector<double> power;       // mean power per bin
  std::vector<std::size_t> population;  // samples averaged into each bin
};

// Angular average of a DC-centered spectrum into uniform radial-frequency
// bins up to the Nyquist limit 0.5 cycles/pixel. Corner samples beyond the
// Nyquist circle are folded into the last bin so total energy is preserved.
inline RadialSpectrum radial_average(const std::vector<double>& spectrum, int n, int n_bins) {
  if (n_bins < 1) throw ConfigError("radial_average: need at least one bin");
  if (spectrum.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw DataError("radial_average: spectrum size does not match grid");
  RadialSpectrum out;
  out.frequency.resize(static_cast<std::size_t>(n_bins));
  out.power.assign(static_cast<std::size_t>(n_bins), 0.0);
  out.population.assign(static_cast<std::size_t>(n_bins), 0);
  const double bin_width = 0.5 / static_cast<double>(n_bins);
  for (int b = 0; b < n_bins; ++b)
    out.frequency[static_cast<std::size_t>(b)] = (b + 0.5) * bin_width;
  const int c = n / 2;  // DC position after fftshift
  for (int r = 0; r < n; ++r) {
    const double fy = static_cast<double>(r - c) / n;
    for (int col = 0; col < n; ++col) {
      const double fx = static_cast<double>(col - c) / n;
      const double nu = std::hypot(fx, fy);
      int b = static_cast<int>(nu / bin_width);
      if (b >= n_bins) b = n_bins - 1;
      out.power[static_cast<std::size_t>(b)] += spectrum[static_cast<std::size_t>(r) * n + col];
      out.population[static_cast<std::size_t>(b)] += 1;
    }
  }
  for (int b = 0; b < n_bins; ++b)
    if (out.population[static_cast<std::size_t>(b)] > 0)
      out.power[static_cast<std::size_t>(b)] /=
          static_cast<double>(out.population[static_cast<std::size_t>(b)]);
  return out;
}

inline RadialSpectrum radial_spectrum_of(const std::vector<std::vector<double>>& images, int n,
                                         int n_bins) {
  return radial_average(mean_squared_spectrum(images, n), n, n_bins);
}

// Largest radial frequency below which the two spectra stay within +-3 dB of
// each other in every bin, linearly interpolated (in dB) at the first
// violation. Bins where both spectra are negligible are skipped. Returns the
// Nyquist limit 0.5 if the band never splits, and 0 if it starts split.
inline double minus3db_crossover(const RadialSpectrum& estimate, const RadialSpectrum& reference) {
  if (estimate.frequency.size() != reference.frequency.size())
    throw DataError("minus3db_crossover: bin count mismatch");
  double peak = 0.0;
  for (double p : reference.power) peak = std::max(peak, p);
  for (double p : estimate.power) peak = std::max(peak, p);
  if (!(peak > 0.0)) throw DataError("minus3db_crossover: both spectra are empty");
  const double floor_power = 1e-12 * peak;
  const double band_db = 3.0;

  bool have_prev = false;
  double prev_nu = 0.0;
  double prev_db = 0.0;
  for (std::size_t b = 0; b < reference.frequency.size(); ++b) {
    const double ref = reference.power[b];
    const double est = estimate.power[b];
    const double nu = reference.frequency[b];
    if (ref < floor_power && est < floor_power) continue;
    if (ref < floor_power || est < floor_power) {
      // one spectrum vanished: the ratio left the band entirely
      return have_prev ? prev_nu : 0.0;
    }
    const double ratio_db = to_db(est / ref);
    if (std::abs(ratio_db) > band_db) {
      if (!have_prev) return 0.0;
      const double boundary = ratio_db > 0.0 ? band_db : -band_db;
      const double t = (boundary - prev_db) / (ratio_db - prev_db);
      return prev_nu + t * (nu - prev_nu);
    }
    have_prev = true;
    prev_nu = nu;
    prev_db = ratio_db;
  }
  return 0.5;
}

// ---------------------------------------------------------------------------
// Pointwise reconstruction errors
// ---------------------------------------------------------------------------

struct ChannelErrors {
  double eps_nmse = 0.0;    // ||est - ref||^2 / ||ref||^2
  double sigma_nmse = 0.0;
  double eps_rel_rms = 0.0;  // ||est - ref|| / ||ref||
};

inline double nmse(const std::vector<double>& estimate, const std::vector<double>& reference) {
  if (estimate.size() != reference.size()) throw DataError("nmse: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (!(den > 0.0)) throw DataError("nmse: reference has zero norm");
  return num / den;
}

inline ChannelErrors channel_errors(const DielectricMap& estimate, const DielectricMap& reference) {
  if (!(estimate.grid == reference.grid)) throw DataError("channel_errors: grid mismatch");
  ChannelErrors e;
  e.eps_nmse = nmse(estimate.eps_r, reference.eps_r);
  e.eps_rel_rms = std::sqrt(e.eps_nmse);
  double sig_den = 0.0;
  for (double s : reference.sigma) sig_den += s * s;
  if (sig_den > 0.0) {
    e.sigma_nmse = nmse(estimate.sigma, reference.sigma);
  } else {
    double num = 0.0;
    for (std::size_t i = 0; i < estimate.sigma.size(); ++i)
      num += estimate.sigma[i] * estimate.sigma[i];
    e.sigma_nmse = num;  // absolute MSE fallback for lossless references
  }
  return e;
}

inline void write_radial_spectrum_csv(const std::string& path, const RadialSpectrum& estimate,
                                      const RadialSpectrum& reference) {
  if (estimate.frequency.size() != reference.frequency.size())
    throw DataError("write_radial_spectrum_csv: bin count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write spectrum csv: " + path);
  out << "frequency,reference_power,estimate_power,ratio_db\n";
  out.precision(12);
  for (std::size_t b = 0; b < reference.frequency.size(); ++b) {
    double ratio_db = std::numeric_limits<double>::quiet_NaN();
    if (reference.power[b] > 0.0 && estimate.power[b] > 0.0)
      ratio_db = to_db(estimate.power[b] / reference.power[b]);
    out << reference.frequency[b] << ',' << reference.power[b] << ',' << estimate.power[b] << ','
        << ratio_db << "\n";
  }
}

}  // namespace mwt

#endif  // MWT_METRICS_HPP
