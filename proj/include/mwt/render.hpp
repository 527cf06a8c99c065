#ifndef MWT_RENDER_HPP
#define MWT_RENDER_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mwt/core.hpp"

namespace mwt {

// 8-bit grayscale PGM rendering of a raster, with the applied (min, max)
// scale recorded in a text sidecar so pixel values stay interpretable.
// Row 0 of the raster is the bottom of the image, so rows are flipped into
// the top-down PGM order.

struct RenderScale {
  double min = 0.0;
  double max = 0.0;
  bool automatic = true;  // derive from the data
};

inline void render_pgm(const std::string& path, const std::vector<double>& values, int n_rows,
                       int n_cols, RenderScale scale = {}) {
  if (values.size() != static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols))
    throw DataError("render_pgm: payload size does not match shape");
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < n_cols; ++c) {
      const double v = values[static_cast<std::size_t>(r) * n_cols + c];
      if (!std::isfinite(v))
        throw DataError("render_pgm: non-finite value at row " + std::to_string(r) + ", col " +
                        std::to_string(c));
    }
  if (scale.automatic) {
    scale.min = *std::min_element(values.begin(), values.end());
    scale.max = *std::max_element(values.begin(), values.end());
  }
  if (!(scale.max > scale.min)) scale.max = scale.min + 1.0;  // flat images render as black

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open image for writing: " + path);
  out << "P5\n" << n_cols << ' ' << n_rows << "\n255\n";
  const double span = scale.max - scale.min;
  for (int r = n_rows - 1; r >= 0; --r) {
    for (int c = 0; c < n_cols; ++c) {
      const double v = values[static_cast<std::size_t>(r) * n_cols + c];
      const double t = std::clamp((v - scale.min) / span, 0.0, 1.0);
      const unsigned char px = static_cast<unsigned char>(std::lround(t * 255.0));
      out.write(reinterpret_cast<const char*>(&px), 1);
    }
  }
  if (!out) throw DataError("failed writing image: " + path);

  std::ofstream sidecar(path + ".scale.txt");
  if (!sidecar) throw DataError("cannot write scale sidecar for " + path);
  sidecar.precision(12);
  sidecar << "min = " << scale.min << "\nmax = " << scale.max << "\n";
}

}  // namespace mwt

#endif  // MWT_RENDER_HPP
