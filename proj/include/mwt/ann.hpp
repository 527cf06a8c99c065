#ifndef MWT_ANN_HPP
#define MWT_ANN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mwt/dataset.hpp"
#include "mwt/forward.hpp"

namespace mwt {

enum class Activation { Relu, Tanh };

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation: " + s + " (expected relu or tanh)");
}

struct MlpArchitecture {
  int input_dim = 0;
  std::vector<int> hidden;  // widths of the hidden layers
  int output_dim = 0;
  Activation hidden_activation = Activation::Relu;

  void validate() const {
    if (input_dim < 1 || output_dim < 1)
      throw ConfigError("MlpArchitecture: input/output dims must be >= 1");
    for (int w : hidden)
      if (w < 1) throw ConfigError("MlpArchitecture: hidden widths must be >= 1");
  }

  std::vector<int> layer_dims() const {
    std::vector<int> d;
    d.push_back(input_dim);
    d.insert(d.end(), hidden.begin(), hidden.end());
    d.push_back(output_dim);
    return d;
  }
};

struct InputNormalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // clamped at 1e-12
};

struct OutputScaling {
  double eps_min = 1.0, eps_max = 2.0;
  double sigma_min = 0.0, sigma_max = 1.0;
};

struct MlpModel {
  MlpArchitecture arch;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;
  InputNormalization norm;
  OutputScaling scaling;
  Grid output_grid;
  std::uint64_t config_fingerprint = 0;
};

// ---------------------------------------------------------------------------
// Encoders. Inputs: scattering matrix flattened row-major with interleaved
// (re, im), z-scored per feature with training-set statistics. Targets: eps_r
// raster then sigma raster, each min-max scaled to [0, 1] with training-set
// bounds; decoding inverts exactly on in-range values.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd encode_input_raw(const ScatteringMatrix& s) {
  Eigen::VectorXd x(2 * static_cast<Eigen::Index>(s.values.size()));
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    x(static_cast<Eigen::Index>(2 * i)) = s.values[i].real();
    x(static_cast<Eigen::Index>(2 * i + 1)) = s.values[i].imag();
  }
  return x;
}

inline Eigen::VectorXd encode_input(const ScatteringMatrix& s, const InputNormalization& norm) {
  Eigen::VectorXd x = encode_input_raw(s);
  if (x.size() != norm.mean.size())
    throw DataError("encode_input: feature length " + std::to_string(x.size()) +
                    " does not match normalization statistics (" +
                    std::to_string(norm.mean.size()) + ")");
  return (x - norm.mean).cwiseQuotient(norm.stddev);
}

inline Eigen::VectorXd encode_target(const DielectricMap& map, const OutputScaling& sc,
                                     const Grid& output_grid) {
  if (!(map.grid == output_grid)) throw DataError("encode_target: grid mismatch");
  const auto nc = static_cast<Eigen::Index>(map.grid.cell_count());
  Eigen::VectorXd y(2 * nc);
  const double eps_span = sc.eps_max - sc.eps_min;
  const double sig_span = sc.sigma_max - sc.sigma_min;
  if (!(eps_span > 0.0) || !(sig_span > 0.0))
    throw ConfigError("encode_target: degenerate output scaling bounds");
  for (Eigen::Index i = 0; i < nc; ++i) {
    y(i) = (map.eps_r[static_cast<std::size_t>(i)] - sc.eps_min) / eps_span;
    y(nc + i) = (map.sigma[static_cast<std::size_t>(i)] - sc.sigma_min) / sig_span;
  }
  return y;
}

struct DecodeStats {
  std::size_t clamped = 0;  // out-of-training-range values clamped at decode
};

inline DielectricMap decode_target(const Eigen::VectorXd& y, const OutputScaling& sc,
                                   const Grid& output_grid, DecodeStats* stats = nullptr) {
  const auto nc = static_cast<Eigen::Index>(output_grid.cell_count());
  if (y.size() != 2 * nc) throw DataError("decode_target: vector length mismatch");
  DielectricMap map(output_grid);
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < nc; ++i) {
    double u = y(i);
    double v = y(nc + i);
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) ++clamped;
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    map.eps_r[static_cast<std::size_t>(i)] =
        std::max(1.0, sc.eps_min + u * (sc.eps_max - sc.eps_min));
    map.sigma[static_cast<std::size_t>(i)] =
        std::max(0.0, sc.sigma_min + v * (sc.sigma_max - sc.sigma_min));
  }
  if (stats) stats->clamped += clamped;
  return map;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace anndetail {

inline Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  throw ConfigError("unknown activation");
}

inline Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
  }
  throw ConfigError("unknown activation");
}

}  // namespace anndetail

// Batch forward pass; columns are samples. Identity output activation.
inline Eigen::MatrixXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
  if (x.rows() != model.arch.input_dim)
    throw DataError("mlp_forward: input dim mismatch");
  Eigen::MatrixXd a = x;
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (model.weights[l] * a).colwise() + model.biases[l];
    a = (l + 1 < layers) ? anndetail::activate(z, model.arch.hidden_activation) : std::move(z);
  }
  return a;
}

inline Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::VectorXd& x) {
  return mlp_forward_batch(model, x);
}

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean-squared-error loss L = mean over samples of ||y - t||^2 / output_dim.
inline double mlp_loss(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t) {
  const double per = (y - t).squaredNorm() / static_cast<double>(y.rows());
  return per / static_cast<double>(y.cols());
}

// Reverse-mode gradients of mlp_loss for a batch (columns are samples).
inline MlpGradients mlp_backward_batch(const MlpModel& model, const Eigen::MatrixXd& x,
                                       const Eigen::MatrixXd& t, double* loss_out = nullptr) {
  const std::size_t layers = model.weights.size();
  std::vector<Eigen::MatrixXd> acts;   // activations per layer, acts[0] = x
  std::vector<Eigen::MatrixXd> preact; // pre-activations of hidden layers
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (model.weights[l] * acts.back()).colwise() + model.biases[l];
    if (l + 1 < layers) {
      preact.push_back(z);
      acts.push_back(anndetail::activate(z, model.arch.hidden_activation));
    } else {
      acts.push_back(std::move(z));
    }
  }
  const Eigen::MatrixXd& y = acts.back();
  if (loss_out) *loss_out = mlp_loss(y, t);

  MlpGradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  const double scale = 2.0 / (static_cast<double>(y.rows()) * static_cast<double>(y.cols()));
  Eigen::MatrixXd delta = scale * (y - t);
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * acts[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0)
      delta = (model.weights[l].transpose() * delta)
                  .cwiseProduct(anndetail::activate_grad(preact[l - 1],
                                                         model.arch.hidden_activation));
  }
  return g;
}

inline MlpGradients mlp_backward(const MlpModel& model, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& t, double* loss_out = nullptr) {
  return mlp_backward_batch(model, x, t, loss_out);
}

// ---------------------------------------------------------------------------
// ADAM
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 5e-5;

  static AdamState for_model(const MlpModel& model, double lr = 5e-5) {
    AdamState s;
    s.learning_rate = lr;
    for (const auto& w : model.weights) {
      s.m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      s.v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : model.biases) {
      s.m_b.push_back(Eigen::VectorXd::Zero(b.size()));
      s.v_b.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    return s;
  }
};

inline void adam_step(AdamState& state, const MlpGradients& grads, MlpModel& model) {
  for (const auto& gw : grads.weights)
    if (!gw.allFinite()) throw NumericalError("adam_step: non-finite weight gradient");
  for (const auto& gb : grads.biases)
    if (!gb.allFinite()) throw NumericalError("adam_step: non-finite bias gradient");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto update = [&](auto& m, auto& v, const auto& g, auto& p) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const auto m_hat = m / bc1;
    const auto v_hat = v / bc2;
    p -= state.learning_rate *
         m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + state.epsilon).matrix());
  };
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    update(state.m_w[l], state.v_w[l], grads.weights[l], model.weights[l]);
    update(state.m_b[l], state.v_b[l], grads.biases[l], model.biases[l]);
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainHyper {
  double learning_rate = 5e-5;
  int epochs = 30;
  std::size_t batch_size = 100;
  double snr_db = 30.0;       // on-the-fly AWGN; +inf trains noise-free
  std::uint64_t seed = 1;
  Activation activation = Activation::Relu;
  std::vector<int> hidden = {256, 256, 256};
};

struct EpochStats {
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double seconds = 0.0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  std::uint64_t config_hash = 0;
  std::string model_path;
};

inline void write_report_csv(const std::string& path, const TrainingReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training report: " + path);
  out << "epoch,train_loss,validation_loss,seconds\n";
  out.precision(12);
  for (std::size_t e = 0; e < report.epochs.size(); ++e)
    out << (e + 1) << ',' << report.epochs[e].train_loss << ','
        << report.epochs[e].validation_loss << ',' << report.epochs[e].seconds << "\n";
}

// Uniform fan-in initialization: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
inline MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  MlpModel model;
  model.arch = arch;
  const std::vector<int> dims = arch.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng = make_rng(seed, 0x696e6974ULL, l);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uniform_in(rng, -bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

namespace anndetail {

// Per-record deterministic noise streams: training noise is resampled each
// epoch; validation noise is fixed.
inline ScatteringMatrix noisy(const ScatteringMatrix& s, double snr_db, std::uint64_t seed,
                              std::uint64_t record_id, std::uint64_t epoch) {
  if (std::isinf(snr_db)) return s;
  Rng rng = make_rng(seed, 0x6e6f697365ULL, record_id, epoch);
  return add_awgn(s, snr_db, rng);
}

}  // namespace anndetail

inline MlpModel train(const DatasetStore& store, const DatasetManifest& manifest,
                      const TrainHyper& hyper, TrainingReport* report_out = nullptr) {
  if (manifest.train_ids.empty()) throw DataError("train: empty training split");
  Grid grid;
  grid.n = store.grid_n();
  grid.side_length = store.header().side_length;

  // Load splits once; desk-scale stores fit comfortably in memory.
  std::vector<DatasetRecord> train_recs, val_recs;
  train_recs.reserve(manifest.train_ids.size());
  for (std::size_t id : manifest.train_ids) train_recs.push_back(store.read(id));
  val_recs.reserve(manifest.validation_ids.size());
  for (std::size_t id : manifest.validation_ids) val_recs.push_back(store.read(id));

  // Normalization statistics from the training split only (noise-free data).
  const Eigen::Index in_dim = 2 * static_cast<Eigen::Index>(train_recs.front().matrix.values.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(in_dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(in_dim);
  OutputScaling scaling;
  scaling.eps_min = scaling.sigma_min = std::numeric_limits<double>::infinity();
  scaling.eps_max = scaling.sigma_max = -std::numeric_limits<double>::infinity();
  for (const auto& rec : train_recs) {
    const Eigen::VectorXd x = encode_input_raw(rec.matrix);
    mean += x;
    sq += x.cwiseProduct(x);
    for (double e : rec.dielectrics.eps_r) {
      scaling.eps_min = std::min(scaling.eps_min, e);
      scaling.eps_max = std::max(scaling.eps_max, e);
    }
    for (double s : rec.dielectrics.sigma) {
      scaling.sigma_min = std::min(scaling.sigma_min, s);
      scaling.sigma_max = std::max(scaling.sigma_max, s);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(train_recs.size());
  mean *= inv_n;
  Eigen::VectorXd stddev =
      (sq * inv_n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-12);
  if (!(scaling.eps_max > scaling.eps_min)) scaling.eps_max = scaling.eps_min + 1.0;
  if (!(scaling.sigma_max > scaling.sigma_min)) scaling.sigma_max = scaling.sigma_min + 1.0;

  MlpArchitecture arch;
  arch.input_dim = static_cast<int>(in_dim);
  arch.hidden = hyper.hidden;
  arch.output_dim = 2 * static_cast<int>(grid.cell_count());
  arch.hidden_activation = hyper.activation;
  MlpModel model = init_model(arch, hyper.seed);
  model.norm = {mean, stddev};
  model.scaling = scaling;
  model.output_grid = grid;
  model.config_fingerprint = store.header().config_fingerprint;

  // Pre-encode targets; inputs are re-encoded per epoch with fresh noise.
  std::vector<Eigen::VectorXd> train_targets(train_recs.size());
  for (std::size_t i = 0; i < train_recs.size(); ++i)
    train_targets[i] = encode_target(train_recs[i].dielectrics, scaling, grid);

  // Start the output layer as an exact mean-target predictor: zero weights
  // plus the mean scaled target as bias. Under ADAM's bounded per-step size a
  // randomly initialized output layer would spend most of the step budget
  // cancelling its own noise; starting at the mean leaves the whole budget
  // for input-dependent structure.
  {
    Eigen::VectorXd target_mean = Eigen::VectorXd::Zero(arch.output_dim);
    for (const Eigen::VectorXd& t : train_targets) target_mean += t;
    model.biases.back() = target_mean * inv_n;
    model.weights.back().setZero();
  }
  std::vector<Eigen::VectorXd> val_inputs(val_recs.size()), val_targets(val_recs.size());
  for (std::size_t i = 0; i < val_recs.size(); ++i) {
    const ScatteringMatrix noisy = anndetail::noisy(val_recs[i].matrix, hyper.snr_db,
                                                    hyper.seed, manifest.validation_ids[i], 0);
    val_inputs[i] = encode_input(noisy, model.norm);
    val_targets[i] = encode_target(val_recs[i].dielectrics, scaling, grid);
  }

  AdamState adam = AdamState::for_model(model, hyper.learning_rate);
  TrainingReport report;
  report.config_hash = mix_seed(store.header().config_fingerprint, hyper.seed,
                                static_cast<std::uint64_t>(hyper.epochs),
                                static_cast<std::uint64_t>(hyper.batch_size));

  const std::size_t n_train = train_recs.size();
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(hyper.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t sample_sum = 0;
    for (std::size_t begin = 0; begin < n_train; begin += hyper.batch_size) {
      const std::size_t end = std::min(begin + hyper.batch_size, n_train);
      const auto b = static_cast<Eigen::Index>(end - begin);
      Eigen::MatrixXd x(in_dim, b);
      Eigen::MatrixXd t(arch.output_dim, b);
      for (Eigen::Index j = 0; j < b; ++j) {
        const std::size_t rec_idx = order[begin + static_cast<std::size_t>(j)];
        const ScatteringMatrix noisy =
            anndetail::noisy(train_recs[rec_idx].matrix, hyper.snr_db, hyper.seed,
                             manifest.train_ids[rec_idx], static_cast<std::uint64_t>(epoch) + 1);
        x.col(j) = encode_input(noisy, model.norm);
        t.col(j) = train_targets[rec_idx];
      }
      double batch_loss = 0.0;
      const MlpGradients grads = mlp_backward_batch(model, x, t, &batch_loss);
      if (!std::isfinite(batch_loss))
        throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch + 1));
      adam_step(adam, grads, model);
      loss_sum += batch_loss * static_cast<double>(b);
      sample_sum += static_cast<std::size_t>(b);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(sample_sum);
    if (!val_inputs.empty()) {
      Eigen::MatrixXd xv(in_dim, static_cast<Eigen::Index>(val_inputs.size()));
      Eigen::MatrixXd tv(arch.output_dim, static_cast<Eigen::Index>(val_inputs.size()));
      for (std::size_t i = 0; i < val_inputs.size(); ++i) {
        xv.col(static_cast<Eigen::Index>(i)) = val_inputs[i];
        tv.col(static_cast<Eigen::Index>(i)) = val_targets[i];
      }
      stats.validation_loss = mlp_loss(mlp_forward_batch(model, xv), tv);
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(stats);
  }
  if (report_out) *report_out = report;
  return model;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

struct InferResult {
  DielectricMap map;
  double seconds = 0.0;
  bool fingerprint_mismatch = false;  // warning only; supports cross-SNR evaluation
  DecodeStats decode;
};

inline InferResult infer(const MlpModel& model, const ScatteringMatrix& s) {
  InferResult result;
  result.fingerprint_mismatch =
      model.config_fingerprint != 0 && s.fingerprint != 0 &&
      s.fingerprint != model.config_fingerprint;
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd x = encode_input(s, model.norm);
  const Eigen::VectorXd y = mlp_forward(model, x);
  result.map = decode_target(y, model.scaling, model.output_grid, &result.decode);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------
// MWTM model file
// ---------------------------------------------------------------------------

inline void save_model(const std::string& path, const MlpModel& model) {
  std::ostringstream payload;
  auto put = [&payload](const void* p, std::size_t n) {
    payload.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  const std::uint32_t version = 1;
  const std::uint8_t act = model.arch.hidden_activation == Activation::Relu ? 0 : 1;
  const std::uint32_t n_hidden = static_cast<std::uint32_t>(model.arch.hidden.size());
  put(&version, 4);
  put(&act, 1);
  const std::uint32_t in_dim = static_cast<std::uint32_t>(model.arch.input_dim);
  const std::uint32_t out_dim = static_cast<std::uint32_t>(model.arch.output_dim);
  put(&in_dim, 4);
  put(&out_dim, 4);
  put(&n_hidden, 4);
  for (int w : model.arch.hidden) {
    const std::uint32_t wv = static_cast<std::uint32_t>(w);
    put(&wv, 4);
  }
  const std::uint32_t grid_n = static_cast<std::uint32_t>(model.output_grid.n);
  put(&grid_n, 4);
  put(&model.output_grid.side_length, 8);
  put(&model.config_fingerprint, 8);
  put(&model.scaling.eps_min, 8);
  put(&model.scaling.eps_max, 8);
  put(&model.scaling.sigma_min, 8);
  put(&model.scaling.sigma_max, 8);
  put(model.norm.mean.data(), 8 * static_cast<std::size_t>(model.norm.mean.size()));
  put(model.norm.stddev.data(), 8 * static_cast<std::size_t>(model.norm.stddev.size()));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    put(model.weights[l].data(), 8 * static_cast<std::size_t>(model.weights[l].size()));
    put(model.biases[l].data(), 8 * static_cast<std::size_t>(model.biases[l].size()));
  }
  const std::string body = payload.str();
  const std::uint64_t checksum = fnv1a64(body.data(), body.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out.write("MWTM", 4);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.write(reinterpret_cast<const char*>(&checksum), 8);
  if (!out) throw DataError("failed writing model file: " + path);
}

inline MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string all = buf.str();
  if (all.size() < 12 || std::memcmp(all.data(), "MWTM", 4) != 0)
    throw DataError("not an MWTM model file: " + path);
  const std::string body = all.substr(4, all.size() - 12);
  std::uint64_t stored = 0;
  std::memcpy(&stored, all.data() + all.size() - 8, 8);
  if (fnv1a64(body.data(), body.size()) != stored)
    throw DataError("model file failed its checksum: " + path);

  std::size_t off = 0;
  auto get = [&body, &off, &path](void* p, std::size_t n) {
    if (off + n > body.size()) throw DataError("truncated model file: " + path);
    std::memcpy(p, body.data() + off, n);
    off += n;
  };
  std::uint32_t version = 0;
  get(&version, 4);
  if (version != 1) throw DataError("unsupported model file version");
  std::uint8_t act = 0;
  get(&act, 1);
  MlpModel model;
  model.arch.hidden_activation = act == 0 ? Activation::Relu : Activation::Tanh;
  std::uint32_t in_dim = 0, out_dim = 0, n_hidden = 0;
  get(&in_dim, 4);
  get(&out_dim, 4);
  get(&n_hidden, 4);
  model.arch.input_dim = static_cast<int>(in_dim);
  model.arch.output_dim = static_cast<int>(out_dim);
  for (std::uint32_t i = 0; i < n_hidden; ++i) {
    std::uint32_t w = 0;
    get(&w, 4);
    model.arch.hidden.push_back(static_cast<int>(w));
  }
  std::uint32_t grid_n = 0;
  get(&grid_n, 4);
  model.output_grid.n = static_cast<int>(grid_n);
  get(&model.output_grid.side_length, 8);
  get(&model.config_fingerprint, 8);
  get(&model.scaling.eps_min, 8);
  get(&model.scaling.eps_max, 8);
  get(&model.scaling.sigma_min, 8);
  get(&model.scaling.sigma_max, 8);
  model.arch.validate();
  model.norm.mean.resize(static_cast<Eigen::Index>(in_dim));
  model.norm.stddev.resize(static_cast<Eigen::Index>(in_dim));
  get(model.norm.mean.data(), 8 * in_dim);
  get(model.norm.stddev.data(), 8 * in_dim);
  const std::vector<int> dims = model.arch.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    get(w.data(), 8 * static_cast<std::size_t>(w.size()));
    Eigen::VectorXd b(dims[l + 1]);
    get(b.data(), 8 * static_cast<std::size_t>(b.size()));
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  if (off != body.size()) throw DataError("model file has trailing bytes: " + path);
  return model;
}

}  // namespace mwt

#endif  // MWT_ANN_HPP
