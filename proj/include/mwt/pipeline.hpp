#ifndef MWT_PIPELINE_HPP
#define MWT_PIPELINE_HPP

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mwt/ann.hpp"
#include "mwt/dataset.hpp"
#include "mwt/inversion.hpp"
#include "mwt/metrics.hpp"
#include "mwt/raster_io.hpp"
#include "mwt/render.hpp"

namespace mwt {

// ---------------------------------------------------------------------------
// Shared evaluation protocol and the desk-scale end-to-end pipeline, used by
// the command-line driver and by the acceptance suite.
// ---------------------------------------------------------------------------

inline std::uint64_t snr_label(double snr_db) {
  if (std::isinf(snr_db)) return 0xffffffffffffffffULL;
  return static_cast<std::uint64_t>(1000000 + std::llround(snr_db * 1000.0));
}

// The fixed per-record evaluation noise: every method sees the same noisy
// matrix for a given (seed, snr, record).
inline ScatteringMatrix evaluation_noisy(const ScatteringMatrix& s, double snr_db,
                                         std::uint64_t eval_seed, std::uint64_t record_id) {
  if (std::isinf(snr_db) && snr_db > 0.0) return s;
  Rng rng = make_rng(eval_seed, 0x6576616cULL, snr_label(snr_db), record_id);
  return add_awgn(s, snr_db, rng);
}

struct ModelEvaluation {
  std::string name;
  double snr_db = 0.0;
  std::size_t records = 0;
  double mean_nmse_eps = 0.0;
  double mean_nmse_sigma = 0.0;
  double crossover = 0.0;       // vs ground-truth permittivity spectrum
  double mean_infer_seconds = 0.0;
  double max_infer_seconds = 0.0;
  std::size_t decode_clamped = 0;
  RadialSpectrum spectrum;       // reconstruction ensemble
  RadialSpectrum truth_spectrum; // ground-truth ensemble
};

inline ModelEvaluation evaluate_model(const MlpModel& model, const std::string& name,
                                      const DatasetStore& store, const DatasetManifest& manifest,
                                      double snr_db, int spectrum_bins, std::uint64_t eval_seed) {
  if (manifest.test_ids.empty()) throw DataError("evaluate: manifest has no test split");
  ModelEvaluation ev;
  ev.name = name;
  ev.snr_db = snr_db;
  const int n = store.grid_n();
  std::vector<std::vector<double>> est_images, truth_images;
  double infer_sum = 0.0;
  for (std::size_t id : manifest.test_ids) {
    const DatasetRecord rec = store.read(id);
    const ScatteringMatrix noisy = evaluation_noisy(rec.matrix, snr_db, eval_seed, id);
    const InferResult res = infer(model, noisy);
    const ChannelErrors err = channel_errors(res.map, rec.dielectrics);
    ev.mean_nmse_eps += err.eps_nmse;
    ev.mean_nmse_sigma += err.sigma_nmse;
    infer_sum += res.seconds;
    ev.max_infer_seconds = std::max(ev.max_infer_seconds, res.seconds);
    ev.decode_clamped += res.decode.clamped;
    est_images.push_back(res.map.eps_r);
    truth_images.push_back(rec.dielectrics.eps_r);
    ev.records += 1;
  }
  const double inv = 1.0 / static_cast<double>(ev.records);
  ev.mean_nmse_eps *= inv;
  ev.mean_nmse_sigma *= inv;
  ev.mean_infer_seconds = infer_sum * inv;
  ev.spectrum = radial_spectrum_of(est_images, n, spectrum_bins);
  ev.truth_spectrum = radial_spectrum_of(truth_images, n, spectrum_bins);
  ev.crossover = minus3db_crossover(ev.spectrum, ev.truth_spectrum);
  return ev;
}

struct BaselineEvaluation {
  std::string name;
  double snr_db = 0.0;
  std::size_t records = 0;
  double mean_nmse_eps = 0.0;
  double mean_nmse_sigma = 0.0;
  double mean_seconds = 0.0;
};

// Classical single-step Born baseline over the test split, on the same noisy
// matrices the network evaluation sees. `limit` = 0 evaluates all records.
inline BaselineEvaluation born_baseline(const DatasetStore& store,
                                        const DatasetManifest& manifest,
                                        const ExperimentConfig& config, const GreenKernel& kern,
                                        double snr_db, std::uint64_t eval_seed,
                                        std::size_t limit = 0,
                                        const InversionOptions& opts = {}) {
  if (manifest.test_ids.empty()) throw DataError("born_baseline: manifest has no test split");
  BaselineEvaluation ev;
  ev.name = "born";
  ev.snr_db = snr_db;
  std::size_t todo = manifest.test_ids.size();
  if (limit > 0) todo = std::min(todo, limit);
  for (std::size_t i = 0; i < todo; ++i) {
    const std::size_t id = manifest.test_ids[i];
    const DatasetRecord rec = store.read(id);
    const ScatteringMatrix noisy = evaluation_noisy(rec.matrix, snr_db, eval_seed, id);
    const InversionResult res = born_invert(noisy, config, kern, opts);
    const ChannelErrors err = channel_errors(res.map, rec.dielectrics);
    ev.mean_nmse_eps += err.eps_nmse;
    ev.mean_nmse_sigma += err.sigma_nmse;
    ev.mean_seconds += res.seconds;
    ev.records += 1;
  }
  const double inv = 1.0 / static_cast<double>(ev.records);
  ev.mean_nmse_eps *= inv;
  ev.mean_nmse_sigma *= inv;
  ev.mean_seconds *= inv;
  return ev;
}

// ---------------------------------------------------------------------------
// Desk-scale end-to-end pipeline
// ---------------------------------------------------------------------------

struct DeskOptions {
  ExperimentConfig experiment;   // defaults are already desk scale
  PhantomGenConfig phantom;
  std::size_t n_per_class = 500;
  std::array<double, 3> fractions = {0.85, 0.10, 0.05};
  TrainHyper hyper;              // 3 x 256, lr 5e-5, 30 epochs, batch 100
  std::vector<int> sweep_hidden = {64, 64, 64};
  double eval_snr_db = 30.0;
  double robustness_snr_db = 5.0;
  int spectrum_bins = 16;
  std::size_t baseline_limit = 0;  // 0 = full test split
  bool resume = true;              // reuse dataset / models already on disk
  std::function<void(const std::string&)> progress;
};

struct DeskReport {
  TrainingReport train_main;
  TrainingReport train_sweep;
  ModelEvaluation eval_main;        // main net at eval_snr_db
  ModelEvaluation eval_sweep;       // smaller net at eval_snr_db
  ModelEvaluation eval_robustness;  // main net at robustness_snr_db
  BaselineEvaluation eval_born;     // Born baseline at eval_snr_db
  std::size_t dataset_records = 0;
  double total_seconds = 0.0;
};

namespace pipedetail {

inline void say(const DeskOptions& opts, const std::string& msg) {
  if (opts.progress) opts.progress(msg);
}

inline std::string hidden_tag(const std::vector<int>& hidden) {
  std::ostringstream out;
  out << 'h';
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) out << 'x';
    out << hidden[i];
  }
  return out.str();
}

inline std::uint64_t file_fnv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash file: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

inline MlpModel train_or_load(const std::string& model_path, const std::string& report_path,
                              const DatasetStore& store, const DatasetManifest& manifest,
                              const TrainHyper& hyper, bool resume, TrainingReport& report,
                              const DeskOptions& opts) {
  if (resume && std::filesystem::exists(model_path)) {
    try {
      MlpModel model = load_model(model_path);
      if (model.config_fingerprint == store.header().config_fingerprint) {
        say(opts, "reusing model " + model_path);
        report = TrainingReport{};
        std::ifstream csv(report_path);
        std::string line;
        if (csv && std::getline(csv, line)) {  // skip header
          while (std::getline(csv, line)) {
            double epoch_no = 0.0;
            EpochStats e;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &epoch_no, &e.train_loss,
                            &e.validation_loss, &e.seconds) == 4)
              report.epochs.push_back(e);
          }
        }
        if (report.epochs.size() == static_cast<std::size_t>(hyper.epochs)) {
          report.model_path = model_path;
          return model;
        }
      }
    } catch (const DataError&) {
      // stale or incompatible file: retrain below
    }
  }
  say(opts, "training " + model_path);
  MlpModel model = train(store, manifest, hyper, &report);
  save_model(model_path, model);
  write_report_csv(report_path, report);
  report.model_path = model_path;
  return model;
}

}  // namespace pipedetail

inline void write_evaluation_csv(const std::string& path,
                                 const std::vector<ModelEvaluation>& evals,
                                 const BaselineEvaluation* baseline = nullptr) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write evaluation table: " + path);
  out << "name,snr_db,records,mean_nmse_eps,mean_nmse_sigma,crossover,"
         "mean_infer_seconds,max_infer_seconds\n";
  out.precision(12);
  for (const auto& ev : evals)
    out << ev.name << ',' << ev.snr_db << ',' << ev.records << ',' << ev.mean_nmse_eps << ','
        << ev.mean_nmse_sigma << ',' << ev.crossover << ',' << ev.mean_infer_seconds << ','
        << ev.max_infer_seconds << "\n";
  if (baseline)
    out << baseline->name << ',' << baseline->snr_db << ',' << baseline->records << ','
        << baseline->mean_nmse_eps << ',' << baseline->mean_nmse_sigma << ",,"
        << baseline->mean_seconds << ",\n";
}

inline DeskReport run_repro_desk(const std::string& out_dir, const DeskOptions& opts = {}) {
  using pipedetail::say;
  const auto t_start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  ExperimentConfig config = opts.experiment;
  config.validate();
  PhantomGenConfig gen = opts.phantom;
  gen.grid = config.grid;
  gen.background = config.background;

  // Dataset (resumable).
  const std::string store_dir = path("dataset");
  BuildOptions build_opts;
  build_opts.resume = opts.resume;
  build_opts.progress = [&](std::size_t done, std::size_t total) {
    if (done % 100 == 0 || done == total)
      say(opts, "dataset: " + std::to_string(done) + "/" + std::to_string(total));
  };
  DatasetStore store = [&] {
    if (opts.resume && DatasetStore::exists(store_dir)) {
      DatasetStore s = DatasetStore::open(store_dir);
      if (s.header().config_fingerprint == config.fingerprint() &&
          s.count() >= 4 * opts.n_per_class) {
        say(opts, "reusing dataset in " + store_dir);
        return s;
      }
    }
    return build_dataset(store_dir, config, gen, opts.n_per_class, config.seed, build_opts);
  }();

  // Split manifest.
  const std::string manifest_path = DatasetStore::manifest_file(store_dir);
  DatasetManifest manifest;
  if (opts.resume && std::filesystem::exists(manifest_path)) {
    manifest = read_manifest(manifest_path);
  }
  if (manifest.train_ids.empty()) {
    manifest = partition(store, opts.fractions, mix_seed(config.seed, 0x706172ULL));
    manifest.config_snapshot = experiment_to_kv(config).to_text();
    write_manifest(manifest_path, manifest);
  }

  DeskReport report;
  report.dataset_records = store.count();

  // Main network and the architecture-sweep companion.
  TrainHyper main_hyper = opts.hyper;
  TrainHyper sweep_hyper = opts.hyper;
  sweep_hyper.hidden = opts.sweep_hidden;
  const std::string main_tag = pipedetail::hidden_tag(main_hyper.hidden);
  const std::string sweep_tag = pipedetail::hidden_tag(sweep_hyper.hidden);
  MlpModel main_model =
      pipedetail::train_or_load(path("model_" + main_tag + ".mwtm"),
                                path("train_" + main_tag + ".csv"), store, manifest, main_hyper,
                                opts.resume, report.train_main, opts);
  MlpModel sweep_model =
      pipedetail::train_or_load(path("model_" + sweep_tag + ".mwtm"),
                                path("train_" + sweep_tag + ".csv"), store, manifest, sweep_hyper,
                                opts.resume, report.train_sweep, opts);

  // Evaluations on the test split.
  const std::uint64_t eval_seed = mix_seed(config.seed, 0x6e6f697365ULL);
  say(opts, "evaluating " + main_tag + " at " + std::to_string(opts.eval_snr_db) + " dB");
  report.eval_main = evaluate_model(main_model, main_tag, store, manifest, opts.eval_snr_db,
                                    opts.spectrum_bins, eval_seed);
  say(opts, "evaluating " + sweep_tag);
  report.eval_sweep = evaluate_model(sweep_model, sweep_tag, store, manifest, opts.eval_snr_db,
                                     opts.spectrum_bins, eval_seed);
  say(opts, "evaluating " + main_tag + " at " + std::to_string(opts.robustness_snr_db) + " dB");
  report.eval_robustness = evaluate_model(main_model, main_tag + "_lowsnr", store, manifest,
                                          opts.robustness_snr_db, opts.spectrum_bins, eval_seed);
  say(opts, "running Born baseline");
  const GreenKernel kern = build_green_kernel(config);
  report.eval_born = born_baseline(store, manifest, config, kern, opts.eval_snr_db, eval_seed,
                                   opts.baseline_limit);

  // Artifacts.
  write_radial_spectrum_csv(path("spectrum_" + main_tag + ".csv"), report.eval_main.spectrum,
                            report.eval_main.truth_spectrum);
  write_radial_spectrum_csv(path("spectrum_" + sweep_tag + ".csv"), report.eval_sweep.spectrum,
                            report.eval_sweep.truth_spectrum);
  write_evaluation_csv(path("evaluation.csv"),
                       {report.eval_main, report.eval_sweep, report.eval_robustness},
                       &report.eval_born);

  // Render one sample reconstruction next to its ground truth.
  {
    const std::size_t id = manifest.test_ids.front();
    const DatasetRecord rec = store.read(id);
    const ScatteringMatrix noisy = evaluation_noisy(rec.matrix, opts.eval_snr_db, eval_seed, id);
    const InferResult res = infer(main_model, noisy);
    RenderScale scale;
    scale.automatic = false;
    scale.min = 1.0;
    scale.max = 60.0;
    render_pgm(path("sample_truth_eps.pgm"), rec.dielectrics.eps_r, config.grid.n, config.grid.n,
               scale);
    render_pgm(path("sample_ann_eps.pgm"), res.map.eps_r, config.grid.n, config.grid.n, scale);
    write_raster(path("sample_ann_eps.mwtr"), res.map.eps_r, config.grid.n, config.grid.n);
  }

  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  // Run manifest: inputs, hashes, headline numbers.
  {
    std::ofstream out(path("run_manifest.txt"));
    out.precision(12);
    out << "seed = " << config.seed << "\n";
    out << "config_fingerprint = " << config.fingerprint() << "\n";
    out << "dataset_records = " << report.dataset_records << "\n";
    out << "dataset_hash = " << pipedetail::file_fnv(DatasetStore::record_file(store_dir))
        << "\n";
    out << "model_" << main_tag
        << "_hash = " << pipedetail::file_fnv(path("model_" + main_tag + ".mwtm")) << "\n";
    out << "model_" << sweep_tag
        << "_hash = " << pipedetail::file_fnv(path("model_" + sweep_tag + ".mwtm")) << "\n";
    out << "nmse_eps_" << main_tag << " = " << report.eval_main.mean_nmse_eps << "\n";
    out << "nmse_eps_" << sweep_tag << " = " << report.eval_sweep.mean_nmse_eps << "\n";
    out << "nmse_eps_" << main_tag << "_lowsnr = " << report.eval_robustness.mean_nmse_eps
        << "\n";
    out << "nmse_eps_born = " << report.eval_born.mean_nmse_eps << "\n";
    out << "crossover_" << main_tag << " = " << report.eval_main.crossover << "\n";
    out << "crossover_" << sweep_tag << " = " << report.eval_sweep.crossover << "\n";
    out << "mean_infer_seconds = " << report.eval_main.mean_infer_seconds << "\n";
    out << "total_seconds = " << report.total_seconds << "\n";
    std::istringstream cfg(experiment_to_kv(config).to_text());
    std::string line;
    while (std::getline(cfg, line))
      if (!line.empty()) out << "config." << line << "\n";
    if (!out) throw DataError("failed writing run manifest");
  }
  return report;
}

}  // namespace mwt

#endif  // MWT_PIPELINE_HPP
