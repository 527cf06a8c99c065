#ifndef MWT_RASTER_IO_HPP
#define MWT_RASTER_IO_HPP

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mwt/common.hpp"

namespace mwt {

// MWTR raster file: magic "MWTR", u32 n_rows, u32 n_cols, u8 dtype tag
// (f32 = 0, f64 = 1), then a little-endian row-major payload.
// One file per quantity.

namespace rasterio {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError("truncated raster file: " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace rasterio

inline void write_raster(const std::string& path, const std::vector<double>& data,
                         int n_rows, int n_cols, bool as_f32 = false) {
  if (data.size() != static_cast<std::size_t>(n_rows) * n_cols)
    throw DataError("write_raster: payload size does not match shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open raster file for writing: " + path);
  out.write("MWTR", 4);
  rasterio::write_u32(out, static_cast<std::uint32_t>(n_rows));
  rasterio::write_u32(out, static_cast<std::uint32_t>(n_cols));
  const unsigned char tag = as_f32 ? 0 : 1;
  out.write(reinterpret_cast<const char*>(&tag), 1);
  if (as_f32) {
    std::vector<float> f(data.begin(), data.end());
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  } else {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing raster file: " + path);
}

struct RasterData {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> values;
};

inline RasterData read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open raster file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MWTR", 4) != 0)
    throw DataError("not an MWTR raster file: " + path);
  RasterData r;
  r.n_rows = static_cast<int>(rasterio::read_u32(in, path));
  r.n_cols = static_cast<int>(rasterio::read_u32(in, path));
  if (r.n_rows <= 0 || r.n_cols <= 0 || r.n_rows > (1 << 20) || r.n_cols > (1 << 20))
    throw DataError("implausible raster shape in " + path);
  unsigned char tag = 0;
  if (!in.read(reinterpret_cast<char*>(&tag), 1))
    throw DataError("truncated raster file: " + path);
  const std::size_t count = static_cast<std::size_t>(r.n_rows) * r.n_cols;
  r.values.resize(count);
  if (tag == 0) {
    std::vector<float> f(count);
    if (!in.read(reinterpret_cast<char*>(f.data()),
                 static_cast<std::streamsize>(count * sizeof(float))))
      throw DataError("truncated raster payload: " + path);
    for (std::size_t i = 0; i < count; ++i) r.values[i] = static_cast<double>(f[i]);
  } else if (tag == 1) {
    if (!in.read(reinterpret_cast<char*>(r.values.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
      throw DataError("truncated raster payload: " + path);
  } else {
    throw DataError("unknown raster dtype tag " + std::to_string(tag) + " in " + path);
  }
  return r;
}

}  // namespace mwt

#endif  // MWT_RASTER_IO_HPP
