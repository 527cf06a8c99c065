#ifndef MWT_DATASET_HPP
#define MWT_DATASET_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/forward.hpp"
#include "mwt/phantom.hpp"

namespace mwt {

// ---------------------------------------------------------------------------
// Fixed-stride binary record store ("MWTD") plus a structured-text manifest.
// Records are append-only and checksummed; stored matrices are noise-free,
// AWGN is applied on the fly at training/evaluation time.
// ---------------------------------------------------------------------------

struct DatasetRecord {
  std::uint64_t phantom_id = 0;
  BreastClass class_id = BreastClass::I;
  std::uint64_t seed = 0;
  DielectricMap dielectrics;
  std::vector<std::uint8_t> labels;
  ScatteringMatrix matrix;
};

namespace datasetdetail {

struct StoreHeader {
  std::uint32_t version = 1;
  std::uint32_t grid_n = 0;
  std::uint32_t nv = 0;
  std::uint32_t nr = 0;
  double frequency = 0.0;
  double side_length = 0.0;
  std::uint64_t config_fingerprint = 0;
};

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 4 + 8 + 8 + 8;

inline std::size_t record_stride(const StoreHeader& h) {
  const std::size_t nc = static_cast<std::size_t>(h.grid_n) * h.grid_n;
  return 8 + 4 + 4 + 8 + 8 * nc + 8 * nc + nc +
         16 * static_cast<std::size_t>(h.nv) * h.nr + 8;
}

}  // namespace datasetdetail

class DatasetStore {
 public:
  static std::string record_file(const std::string& dir) {
    return (std::filesystem::path(dir) / "records.mwtd").string();
  }
  static std::string manifest_file(const std::string& dir) {
    return (std::filesystem::path(dir) / "manifest.txt").string();
  }

  static DatasetStore create(const std::string& dir, const ExperimentConfig& config) {
    std::filesystem::create_directories(dir);
    DatasetStore store;
    store.dir_ = dir;
    store.header_.grid_n = static_cast<std::uint32_t>(config.grid.n);
    store.header_.nv = static_cast<std::uint32_t>(config.array.count);
    store.header_.nr = static_cast<std::uint32_t>(config.array.count);
    store.header_.frequency = config.frequency;
    store.header_.side_length = config.grid.side_length;
    store.header_.config_fingerprint = config.fingerprint();
    std::ofstream out(record_file(dir), std::ios::binary);
    if (!out) throw DataError("cannot create record file in " + dir);
    out.write("MWTD", 4);
    out.write(reinterpret_cast<const char*>(&store.header_.version), 4);
    out.write(reinterpret_cast<const char*>(&store.header_.grid_n), 4);
    out.write(reinterpret_cast<const char*>(&store.header_.nv), 4);
    out.write(reinterpret_cast<const char*>(&store.header_.nr), 4);
    out.write(reinterpret_cast<const char*>(&store.header_.frequency), 8);
    out.write(reinterpret_cast<const char*>(&store.header_.side_length), 8);
    out.write(reinterpret_cast<const char*>(&store.header_.config_fingerprint), 8);
    if (!out) throw DataError("failed writing record file header in " + dir);
    return store;
  }

  static DatasetStore open(const std::string& dir) {
    DatasetStore store;
    store.dir_ = dir;
    std::ifstream in(record_file(dir), std::ios::binary);
    if (!in) throw DataError("cannot open record file in " + dir);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "MWTD", 4) != 0)
      throw DataError("not an MWTD record file: " + record_file(dir));
    auto& h = store.header_;
    if (!in.read(reinterpret_cast<char*>(&h.version), 4) ||
        !in.read(reinterpret_cast<char*>(&h.grid_n), 4) ||
        !in.read(reinterpret_cast<char*>(&h.nv), 4) ||
        !in.read(reinterpret_cast<char*>(&h.nr), 4) ||
        !in.read(reinterpret_cast<char*>(&h.frequency), 8) ||
        !in.read(reinterpret_cast<char*>(&h.side_length), 8) ||
        !in.read(reinterpret_cast<char*>(&h.config_fingerprint), 8))
      throw DataError("truncated record file header: " + record_file(dir));
    if (h.version != 1)
      throw DataError("unsupported record file version " + std::to_string(h.version));
    return store;
  }

  static bool exists(const std::string& dir) {
    return std::filesystem::exists(record_file(dir));
  }

  const datasetdetail::StoreHeader& header() const { return header_; }
  const std::string& dir() const { return dir_; }
  int grid_n() const { return static_cast<int>(header_.grid_n); }

  // Number of whole records currently on disk (trailing partial writes are
  // ignored, which is what makes interrupted builds resumable).
  std::size_t count() const {
    const auto size = std::filesystem::file_size(record_file(dir_));
    if (size < datasetdetail::kHeaderBytes) return 0;
    return (static_cast<std::size_t>(size) - datasetdetail::kHeaderBytes) /
           datasetdetail::record_stride(header_);
  }

  void append(const DatasetRecord& rec) {
    const std::vector<char> bytes = serialize(rec);
    std::ofstream out(record_file(dir_), std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to record file in " + dir_);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed appending record " + std::to_string(rec.phantom_id));
  }

  DatasetRecord read(std::size_t index) const {
    const std::size_t stride = datasetdetail::record_stride(header_);
    std::ifstream in(record_file(dir_), std::ios::binary);
    if (!in) throw DataError("cannot open record file in " + dir_);
    in.seekg(static_cast<std::streamoff>(datasetdetail::kHeaderBytes + index * stride));
    std::vector<char> bytes(stride);
    if (!in.read(bytes.data(), static_cast<std::streamsize>(stride)))
      throw DataError("record " + std::to_string(index) + " truncated or missing");
    return deserialize(bytes, index);
  }

  // true if the record at `index` exists and its checksum verifies.
  bool record_valid(std::size_t index) const {
    if (index >= count()) return false;
    try {
      (void)read(index);
      return true;
    } catch (const DataError&) {
      return false;
    }
  }

  std::vector<char> serialize(const DatasetRecord& rec) const {
    const std::size_t nc = static_cast<std::size_t>(header_.grid_n) * header_.grid_n;
    if (rec.dielectrics.eps_r.size() != nc || rec.labels.size() != nc)
      throw DataError("record raster shape does not match store grid");
    if (rec.matrix.values.size() != static_cast<std::size_t>(header_.nv) * header_.nr)
      throw DataError("record matrix shape does not match store config");
    if (rec.matrix.fingerprint != header_.config_fingerprint)
      throw DataError("record fingerprint does not match store config");
    std::vector<char> bytes;
    bytes.reserve(datasetdetail::record_stride(header_));
    auto put = [&bytes](const void* p, std::size_t n) {
      const char* c = static_cast<const char*>(p);
      bytes.insert(bytes.end(), c, c + n);
    };
    put(&rec.phantom_id, 8);
    const std::uint32_t cls = static_cast<std::uint32_t>(rec.class_id);
    const std::uint32_t reserved = 0;
    put(&cls, 4);
    put(&reserved, 4);
    put(&rec.seed, 8);
    put(rec.dielectrics.eps_r.data(), 8 * nc);
    put(rec.dielectrics.sigma.data(), 8 * nc);
    put(rec.labels.data(), nc);
    for (const cplx& v : rec.matrix.values) {
      const double re = v.real(), im = v.imag();
      put(&re, 8);
      put(&im, 8);
    }
    const std::uint64_t checksum = fnv1a64(bytes.data(), bytes.size());
    put(&checksum, 8);
    return bytes;
  }

  DatasetRecord deserialize(const std::vector<char>& bytes, std::size_t index) const {
    const std::size_t nc = static_cast<std::size_t>(header_.grid_n) * header_.grid_n;
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (fnv1a64(bytes.data(), bytes.size() - 8) != stored)
      throw DataError("record " + std::to_string(index) + " failed its checksum");
    std::size_t off = 0;
    auto get = [&bytes, &off](void* p, std::size_t n) {
      std::memcpy(p, bytes.data() + off, n);
      off += n;
    };
    DatasetRecord rec;
    get(&rec.phantom_id, 8);
    std::uint32_t cls = 0, reserved = 0;
    get(&cls, 4);
    get(&reserved, 4);
    if (cls >= 1 && cls <= 4) rec.class_id = static_cast<BreastClass>(cls);
    get(&rec.seed, 8);
    Grid grid;
    grid.n = static_cast<int>(header_.grid_n);
    grid.side_length = header_.side_length;
    rec.dielectrics = DielectricMap(grid);
    get(rec.dielectrics.eps_r.data(), 8 * nc);
    get(rec.dielectrics.sigma.data(), 8 * nc);
    rec.labels.resize(nc);
    get(rec.labels.data(), nc);
    rec.matrix.nv = static_cast<int>(header_.nv);
    rec.matrix.nr = static_cast<int>(header_.nr);
    rec.matrix.frequency = header_.frequency;
    rec.matrix.fingerprint = header_.config_fingerprint;
    rec.matrix.values.resize(static_cast<std::size_t>(header_.nv) * header_.nr);
    for (cplx& v : rec.matrix.values) {
      double re = 0.0, im = 0.0;
      get(&re, 8);
      get(&im, 8);
      v = cplx(re, im);
    }
    return rec;
  }

 private:
  std::string dir_;
  datasetdetail::StoreHeader header_;
};

// ---------------------------------------------------------------------------
// Database population
// ---------------------------------------------------------------------------

struct BuildOptions {
  ScatteringOptions forward;
  bool resume = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

inline ScatteringMatrix scattering_matrix_from(const DielectricMap& map,
                                               const ExperimentConfig& config,
                                               const GreenKernel& kern,
                                               const ScatteringOptions& opts) {
  const ContrastMap chi = contrast_of(map, config.background, config.frequency);
  return scattering_matrix(chi, config, kern, opts);
}

// Deterministic content per (config, master_seed): record g always uses the
// stream mix(master_seed, g, retry). Generation is parallel in chunks; the
// writer appends in index order.
inline DatasetStore build_dataset(const std::string& dir, const ExperimentConfig& config,
                                  const PhantomGenConfig& gen, std::size_t n_per_class,
                                  std::uint64_t master_seed, const BuildOptions& opts = {}) {
  if (n_per_class < 1) throw ConfigError("build_dataset: n_per_class must be >= 1");
  config.validate();
  DatasetStore store = [&] {
    if (DatasetStore::exists(dir)) {
      if (!opts.resume)
        throw DataError("dataset store already exists in " + dir +
                        " (pass resume to continue an interrupted build)");
      DatasetStore s = DatasetStore::open(dir);
      if (s.header().config_fingerprint != config.fingerprint())
        throw DataError("existing store in " + dir + " was built with a different config");
      return s;
    }
    return DatasetStore::create(dir, config);
  }();

  const std::size_t total = 4 * n_per_class;
  std::size_t done = store.count();
  if (done > total) throw DataError("existing store has more records than requested");
  if (done > 0 && !store.record_valid(done - 1))
    throw DataError("existing store ends with a corrupt record; rebuild required");

  const GreenKernel kern = build_green_kernel(config);

  auto make_record = [&](std::size_t g) {
    const BreastClass cls = static_cast<BreastClass>(1 + static_cast<int>(g / n_per_class));
    std::string last;
    for (std::uint64_t retry = 0; retry < 4; ++retry) {
      const std::uint64_t seed = mix_seed(master_seed, g, retry);
      try {
        DatasetRecord rec;
        rec.phantom_id = g;
        rec.class_id = cls;
        rec.seed = seed;
        Phantom p = generate_phantom(cls, gen, seed);
        rec.dielectrics = std::move(p.dielectrics);
        rec.labels = std::move(p.labels.labels);
        rec.matrix = scattering_matrix_from(rec.dielectrics, config, kern, opts.forward);
        return rec;
      } catch (const Error& e) {
        last = e.what();
      }
    }
    throw NumericalError("build_dataset: record " + std::to_string(g) +
                         " failed after 3 retries: " + last);
  };

  constexpr std::size_t kChunk = 16;
  while (done < total) {
    const std::size_t chunk = std::min(kChunk, total - done);
    std::vector<DatasetRecord> recs(chunk);
    parallel_for(chunk, [&](std::size_t i) { recs[i] = make_record(done + i); });
    for (auto& rec : recs) store.append(rec);
    done += chunk;
    if (opts.progress) opts.progress(done, total);
  }
  return store;
}

// ---------------------------------------------------------------------------
// Split manifest
// ---------------------------------------------------------------------------

enum class Split { Train, Validation, Test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

struct DatasetManifest {
  int format_version = 1;
  std::string config_snapshot;  // key-value text of the experiment config
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> validation_ids;
  std::vector<std::size_t> test_ids;

  const std::vector<std::size_t>& ids(Split s) const {
    switch (s) {
      case Split::Train: return train_ids;
      case Split::Validation: return validation_ids;
      case Split::Test: return test_ids;
    }
    throw ConfigError("unknown split");
  }
};

// Stratified-by-class random split. Per class: counts for validation and test
// are round(fraction * class_count); the remainder goes to training.
inline DatasetManifest partition(const DatasetStore& store,
                                 const std::array<double, 3>& fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (fractions[0] <= 0.0 || fractions[1] <= 0.0 || fractions[2] <= 0.0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("partition: fractions must be positive and sum to 1");
  const std::size_t total = store.count();
  if (total == 0) throw DataError("partition: store is empty");

  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t i = 0; i < total; ++i) {
    const DatasetRecord rec = store.read(i);
    by_class[static_cast<std::size_t>(static_cast<int>(rec.class_id) - 1)].push_back(i);
  }

  DatasetManifest m;
  m.split_seed = seed;
  for (std::size_t c = 0; c < 4; ++c) {
    auto ids = by_class[c];
    if (ids.empty()) continue;
    Rng rng = make_rng(seed, 0x73706c6974ULL, c);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto sz = static_cast<double>(ids.size());
    const std::size_t n_val = static_cast<std::size_t>(std::lround(fractions[1] * sz));
    const std::size_t n_test = static_cast<std::size_t>(std::lround(fractions[2] * sz));
    if (n_val + n_test > ids.size())
      throw ConfigError("partition: class too small for requested fractions");
    std::size_t i = 0;
    for (; i < n_val; ++i) m.validation_ids.push_back(ids[i]);
    for (; i < n_val + n_test; ++i) m.test_ids.push_back(ids[i]);
    for (; i < ids.size(); ++i) m.train_ids.push_back(ids[i]);
  }
  std::sort(m.train_ids.begin(), m.train_ids.end());
  std::sort(m.validation_ids.begin(), m.validation_ids.end());
  std::sort(m.test_ids.begin(), m.test_ids.end());
  return m;
}

namespace datasetdetail {

inline std::string join_ids(const std::vector<std::size_t>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ',';
    out << ids[i];
  }
  return out.str();
}

inline std::vector<std::size_t> split_ids(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  return out;
}

}  // namespace datasetdetail

inline void write_manifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << "format_version = " << m.format_version << "\n";
  out << "split_seed = " << m.split_seed << "\n";
  out << "count.train = " << m.train_ids.size() << "\n";
  out << "count.validation = " << m.validation_ids.size() << "\n";
  out << "count.test = " << m.test_ids.size() << "\n";
  out << "train_ids = " << datasetdetail::join_ids(m.train_ids) << "\n";
  out << "validation_ids = " << datasetdetail::join_ids(m.validation_ids) << "\n";
  out << "test_ids = " << datasetdetail::join_ids(m.test_ids) << "\n";
  std::istringstream cfg(m.config_snapshot);
  std::string line;
  while (std::getline(cfg, line))
    if (!line.empty()) out << "config." << line << "\n";
  if (!out) throw DataError("failed writing manifest: " + path);
}

inline DatasetManifest read_manifest(const std::string& path) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(path);
  DatasetManifest m;
  m.format_version = static_cast<int>(kv.get_int("format_version", 1));
  m.split_seed = kv.get_u64("split_seed", 0);
  m.train_ids = datasetdetail::split_ids(kv.get_string("train_ids", ""));
  m.validation_ids = datasetdetail::split_ids(kv.get_string("validation_ids", ""));
  m.test_ids = datasetdetail::split_ids(kv.get_string("test_ids", ""));
  std::ostringstream cfg;
  for (const auto& [k, v] : kv.entries())
    if (k.rfind("config.", 0) == 0) cfg << k.substr(7) << " = " << v << "\n";
  m.config_snapshot = cfg.str();
  return m;
}

// ---------------------------------------------------------------------------
// Deterministic per-epoch streaming: all records of a split exactly once,
// order shuffled from (shuffle_seed, epoch).
// ---------------------------------------------------------------------------

class SplitStream {
 public:
  SplitStream(const DatasetStore& store, const DatasetManifest& manifest, Split split,
              std::size_t batch_size, std::uint64_t shuffle_seed)
      : store_(store),
        ids_(manifest.ids(split)),
        batch_size_(batch_size),
        shuffle_seed_(shuffle_seed) {
    if (batch_size_ < 1) throw ConfigError("SplitStream: batch_size must be >= 1");
  }

  std::size_t record_count() const { return ids_.size(); }
  std::size_t batch_count() const { return (ids_.size() + batch_size_ - 1) / batch_size_; }

  std::vector<std::size_t> epoch_order(std::size_t epoch) const {
    std::vector<std::size_t> order = ids_;
    Rng rng = make_rng(shuffle_seed_, 0x65706f6368ULL, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  std::vector<DatasetRecord> batch(const std::vector<std::size_t>& order,
                                   std::size_t batch_index) const {
    const std::size_t begin = batch_index * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, order.size());
    if (begin >= end) throw ConfigError("SplitStream: batch index out of range");
    std::vector<DatasetRecord> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(store_.read(order[i]));
    return out;
  }

 private:
  const DatasetStore& store_;
  std::vector<std::size_t> ids_;
  std::size_t batch_size_;
  std::uint64_t shuffle_seed_;
};

}  // namespace mwt

#endif  // MWT_DATASET_HPP
