#ifndef MWT_COMMON_HPP
#define MWT_COMMON_HPP

#include <atomic>
#include <cmath>
#include <complex>
#include <mutex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mwt {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0;       // m/s
inline constexpr double kEps0 = 8.8541878128e-12;          // F/m
inline constexpr double kMu0 = 4.0 * kPi * 1.0e-7;         // H/m

// Error hierarchy mirrors the CLI exit codes: usage/config (2),
// data integrity (3), numerical failure (4).
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(what) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Deterministic seed derivation. Independent streams are obtained by mixing
// the master seed with stream labels through splitmix64 steps; the same
// (seed, labels...) always yields the same stream on every platform.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
  return mix_seed(splitmix64(seed ^ splitmix64(next)), rest...);
}

using Rng = std::mt19937_64;

template <typename... Labels>
Rng make_rng(std::uint64_t seed, Labels... labels) {
  return Rng(mix_seed(seed, static_cast<std::uint64_t>(labels)...));
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

// Truncated normal by rejection with a clamp fallback after 64 attempts.
inline double truncated_normal(Rng& rng, double mean, double stddev,
                               double lo, double hi) {
  if (!(stddev > 0.0)) throw ConfigError("truncated_normal: stddev must be > 0");
  if (!(lo < hi)) throw ConfigError("truncated_normal: empty truncation interval");
  for (int i = 0; i < 64; ++i) {
    const double v = normal(rng, mean, stddev);
    if (v >= lo && v <= hi) return v;
  }
  return std::min(hi, std::max(lo, mean));
}

// FNV-1a over raw bytes; used for record checksums and config fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Worker pool cap shared by the CLI (--threads / MWTOMO_THREADS) and the
// library's parallel loops.
// ---------------------------------------------------------------------------

inline int& thread_cap() {
  static int cap = 0;  // 0 = hardware concurrency
  return cap;
}

inline int effective_threads(std::size_t work_items) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int cap = thread_cap() > 0 ? thread_cap() : hw;
  if (static_cast<std::size_t>(cap) > work_items) cap = static_cast<int>(work_items);
  return cap < 1 ? 1 : cap;
}

// Parallel loop over [0, count). Each index must be independent; results
// written to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const int nthreads = effective_threads(count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  workers.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    workers.emplace_back([&] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) break;
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

inline double to_db(double power_ratio) { return 10.0 * std::log10(power_ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace mwt

#endif  // MWT_COMMON_HPP
