#ifndef MWT_CORE_HPP
#define MWT_CORE_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mwt/common.hpp"

namespace mwt {

// ---------------------------------------------------------------------------
// Raster convention, used bit-exactly everywhere (memory and file formats):
// row-major storage, index (row, col) maps to (y, x) with y increasing with
// the row index, i.e. row 0 is the bottom of the image.
// ---------------------------------------------------------------------------

struct Grid {
  double side_length = 0.15;  // meters, square domain edge
  int n = 32;                 // cells per side
  double origin_x = 0.0;      // domain center, meters
  double origin_y = 0.0;

  double cell_size() const { return side_length / n; }
  std::size_t cell_count() const { return static_cast<std::size_t>(n) * n; }

  double cell_x(int col) const {
    return origin_x + (col - 0.5 * (n - 1)) * cell_size();
  }
  double cell_y(int row) const {
    return origin_y + (row - 0.5 * (n - 1)) * cell_size();
  }

  void validate() const {
    if (n < 8) throw ConfigError("Grid: n must be >= 8, got " + std::to_string(n));
    if (!(side_length > 0.0) || !std::isfinite(side_length))
      throw ConfigError("Grid: side_length must be positive and finite");
  }

  bool operator==(const Grid& o) const {
    return side_length == o.side_length && n == o.n && origin_x == o.origin_x &&
           origin_y == o.origin_y;
  }
};

struct AntennaArray {
  double radius = 0.12;  // meters
  int count = 30;        // transmitters == receivers (multiview-multistatic)

  std::vector<double> angles() const {
    std::vector<double> a(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = 2.0 * kPi * i / count;
    return a;
  }
  double x(int i) const { return radius * std::cos(2.0 * kPi * i / count); }
  double y(int i) const { return radius * std::sin(2.0 * kPi * i / count); }

  void validate() const {
    if (count < 1) throw ConfigError("AntennaArray: count must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("AntennaArray: radius must be > 0");
  }
};

struct BackgroundMedium {
  double eps_r_b = 23.0;  // lossless coupling medium between adipose and fibro-glandular
  double sigma_b = 0.0;   // S/m

  void validate() const {
    if (!(eps_r_b >= 1.0) || !std::isfinite(eps_r_b))
      throw ConfigError("BackgroundMedium: eps_r_b must be >= 1");
    if (!(sigma_b >= 0.0) || !std::isfinite(sigma_b))
      throw ConfigError("BackgroundMedium: sigma_b must be >= 0");
  }
};

struct DielectricMap {
  Grid grid;
  std::vector<double> eps_r;  // n*n, row-major
  std::vector<double> sigma;  // n*n, S/m

  DielectricMap() = default;
  explicit DielectricMap(const Grid& g, double eps_fill = 1.0, double sigma_fill = 0.0)
      : grid(g),
        eps_r(g.cell_count(), eps_fill),
        sigma(g.cell_count(), sigma_fill) {}

  void validate() const {
    grid.validate();
    if (eps_r.size() != grid.cell_count() || sigma.size() != grid.cell_count())
      throw DataError("DielectricMap: raster shape does not match grid");
    for (std::size_t i = 0; i < eps_r.size(); ++i) {
      if (!(eps_r[i] >= 1.0) || !std::isfinite(eps_r[i]))
        throw DataError("DielectricMap: eps_r < 1 or non-finite at linear index " +
                        std::to_string(i));
      if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i]))
        throw DataError("DielectricMap: sigma < 0 or non-finite at linear index " +
                        std::to_string(i));
    }
  }
};

struct ContrastMap {
  Grid grid;
  std::vector<cplx> chi;  // n*n, row-major, 0 outside scatterer support
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// epsilon = eps_r - j sigma / (omega eps0); Im <= 0 under e^{+j omega t}.
inline cplx complex_permittivity(double eps_r, double sigma, double frequency) {
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw ConfigError("complex_permittivity: frequency must be > 0");
  if (!(eps_r >= 1.0) || !std::isfinite(eps_r))
    throw ConfigError("complex_permittivity: eps_r must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("complex_permittivity: sigma must be >= 0");
  const double omega = 2.0 * kPi * frequency;
  return cplx(eps_r, -sigma / (omega * kEps0));
}

inline cplx background_permittivity(const BackgroundMedium& bg, double frequency) {
  return complex_permittivity(bg.eps_r_b, bg.sigma_b, frequency);
}

// chi = eps(p)/eps_b - 1, exactly zero where the map equals the background.
inline ContrastMap contrast_of(const DielectricMap& map, const BackgroundMedium& bg,
                               double frequency) {
  map.validate();
  bg.validate();
  const cplx eps_b = background_permittivity(bg, frequency);
  ContrastMap out;
  out.grid = map.grid;
  out.chi.resize(map.grid.cell_count());
  for (std::size_t i = 0; i < out.chi.size(); ++i) {
    if (map.eps_r[i] == bg.eps_r_b && map.sigma[i] == bg.sigma_b) {
      out.chi[i] = cplx(0.0, 0.0);
    } else {
      out.chi[i] = complex_permittivity(map.eps_r[i], map.sigma[i], frequency) / eps_b - 1.0;
    }
  }
  return out;
}

// k_b = omega sqrt(mu0 eps0 eps_b), branch with Re >= 0 and Im <= 0.
inline cplx wavenumber(const BackgroundMedium& bg, double frequency) {
  bg.validate();
  if (!(frequency > 0.0)) throw ConfigError("wavenumber: frequency must be > 0");
  const double omega = 2.0 * kPi * frequency;
  cplx k = omega * std::sqrt(kMu0 * kEps0 * background_permittivity(bg, frequency));
  if (k.real() < 0.0) k = -k;
  return k;
}

struct ExperimentConfig {
  double frequency = 1.0e9;  // Hz
  Grid grid;
  AntennaArray array;
  BackgroundMedium background;
  double solver_tol = 1.0e-6;
  int solver_max_iter = 2000;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(frequency > 0.0)) throw ConfigError("ExperimentConfig: frequency must be > 0");
    grid.validate();
    array.validate();
    background.validate();
    if (!(solver_tol > 0.0) || solver_tol > 1.0e-2)
      throw ConfigError("ExperimentConfig: solver_tol must be in (0, 1e-2]");
    if (solver_max_iter < 1) throw ConfigError("ExperimentConfig: solver_max_iter >= 1");
  }

  // 64-bit fingerprint of the physical configuration, stored alongside
  // scattering data so mismatched files are detected.
  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a64(&frequency, sizeof(frequency));
    h = fnv1a64(&grid.side_length, sizeof(double), h);
    h = fnv1a64(&grid.n, sizeof(int), h);
    h = fnv1a64(&array.radius, sizeof(double), h);
    h = fnv1a64(&array.count, sizeof(int), h);
    h = fnv1a64(&background.eps_r_b, sizeof(double), h);
    h = fnv1a64(&background.sigma_b, sizeof(double), h);
    return h;
  }
};

// ---------------------------------------------------------------------------
// Structured text configuration: "key = value" lines, '#' comments.
// Unknown keys are kept and queryable so modules can define their own.
// ---------------------------------------------------------------------------

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  static KeyValueConfig parse_text(const std::string& text) {
    KeyValueConfig kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      kv.values_[key] = value;
    }
    return kv;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a number: " + it->second);
    }
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not an integer: " + it->second);
    }
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not an unsigned integer: " + it->second);
    }
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string to_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline ExperimentConfig experiment_from_kv(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  cfg.frequency = kv.get_double("frequency", cfg.frequency);
  cfg.grid.side_length = kv.get_double("grid.side_length", cfg.grid.side_length);
  cfg.grid.n = static_cast<int>(kv.get_int("grid.n", cfg.grid.n));
  cfg.array.radius = kv.get_double("array.radius", cfg.array.radius);
  cfg.array.count = static_cast<int>(kv.get_int("array.count", cfg.array.count));
  cfg.background.eps_r_b = kv.get_double("background.eps_r", cfg.background.eps_r_b);
  cfg.background.sigma_b = kv.get_double("background.sigma", cfg.background.sigma_b);
  cfg.solver_tol = kv.get_double("solver.tol", cfg.solver_tol);
  cfg.solver_max_iter = static_cast<int>(kv.get_int("solver.max_iter", cfg.solver_max_iter));
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

inline KeyValueConfig experiment_to_kv(const ExperimentConfig& cfg) {
  KeyValueConfig kv;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  kv.set("frequency", num(cfg.frequency));
  kv.set("grid.side_length", num(cfg.grid.side_length));
  kv.set("grid.n", std::to_string(cfg.grid.n));
  kv.set("array.radius", num(cfg.array.radius));
  kv.set("array.count", std::to_string(cfg.array.count));
  kv.set("background.eps_r", num(cfg.background.eps_r_b));
  kv.set("background.sigma", num(cfg.background.sigma_b));
  kv.set("solver.tol", num(cfg.solver_tol));
  kv.set("solver.max_iter", std::to_string(cfg.solver_max_iter));
  kv.set("seed", std::to_string(cfg.seed));
  return kv;
}

}  // namespace mwt

#endif  // MWT_CORE_HPP
