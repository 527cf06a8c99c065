#ifndef MWT_FFT_HPP
#define MWT_FFT_HPP

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "mwt/common.hpp"

namespace mwt {

// Thin FFTW wrapper for in-place 2D complex transforms. Plans are cached per
// (rows, cols, sign); creation is serialized because FFTW's planner is not
// thread-safe, execution with fftw_execute_dft is.
namespace fftdetail {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(rows, cols, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<cplx> scratch(static_cast<std::size_t>(rows) * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE);
    if (!p) throw NumericalError("fftw plan creation failed");
    plans.emplace(key, p);
    return p;
  }
};

inline PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace fftdetail

// In-place forward DFT (negative exponent), unnormalized.
inline void fft2(std::vector<cplx>& data, int rows, int cols) {
  if (data.size() != static_cast<std::size_t>(rows) * cols)
    throw ConfigError("fft2: size mismatch");
  fftw_plan p = fftdetail::cache().get(rows, cols, FFTW_FORWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, buf, buf);
}

// In-place inverse DFT, normalized by 1/(rows*cols).
inline void ifft2(std::vector<cplx>& data, int rows, int cols) {
  if (data.size() != static_cast<std::size_t>(rows) * cols)
    throw ConfigError("ifft2: size mismatch");
  fftw_plan p = fftdetail::cache().get(rows, cols, FFTW_BACKWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, buf, buf);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  for (auto& v : data) v *= scale;
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Swap quadrants so the zero-frequency sample lands at (rows/2, cols/2).
template <typename T>
std::vector<T> fftshift2(const std::vector<T>& data, int rows, int cols) {
  std::vector<T> out(data.size());
  const int hr = rows / 2, hc = cols / 2;
  for (int r = 0; r < rows; ++r) {
    const int rs = (r + hr) % rows;
    for (int c = 0; c < cols; ++c) {
      const int cs = (c + hc) % cols;
      out[static_cast<std::size_t>(rs) * cols + cs] =
          data[static_cast<std::size_t>(r) * cols + c];
    }
  }
  return out;
}

}  // namespace mwt

#endif  // MWT_FFT_HPP
