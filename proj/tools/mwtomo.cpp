// mwtomo: microwave-tomography toolkit driver.
//
// Subcommands: phantom, dataset, forward, train, infer, invert, evaluate,
// render, repro-desk. Exit codes: 0 success, 2 usage/config error, 3 data
// integrity error, 4 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mwt/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--threads", c.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--seed", c.seed, "master seed override")->each([&c](const std::string&) {
    c.seed_given = true;
  });
}

mwt::KeyValueConfig load_kv(const CommonOpts& c) {
  mwt::KeyValueConfig kv;
  if (!c.config_path.empty()) kv = mwt::KeyValueConfig::parse_file(c.config_path);
  for (const std::string& ov : c.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw mwt::ConfigError("--set expects key=value, got: " + ov);
    kv.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  return kv;
}

void apply_threads(const CommonOpts& c) {
  int cap = c.threads;
  if (cap == 0) {
    if (const char* env = std::getenv("MWTOMO_THREADS")) {
      try {
        cap = std::stoi(env);
      } catch (const std::exception&) {
        throw mwt::ConfigError("MWTOMO_THREADS is not an integer: " + std::string(env));
      }
    }
  }
  if (cap < 0) throw mwt::ConfigError("thread cap must be >= 0");
  mwt::thread_cap() = cap;
}

mwt::ExperimentConfig experiment_of(const CommonOpts& c, const mwt::KeyValueConfig& kv) {
  mwt::ExperimentConfig cfg = mwt::experiment_from_kv(kv);
  if (c.seed_given) cfg.seed = c.seed;
  return cfg;
}

void write_run_manifest(const std::string& out_dir, const std::string& subcommand,
                        const mwt::ExperimentConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out((fs::path(out_dir) / "run_manifest.txt").string());
  if (!out) throw mwt::DataError("cannot write run manifest in " + out_dir);
  out << "subcommand = " << subcommand << "\n";
  out << "format_versions = mwtr:1 mwts:1 mwtd:1 mwtm:1\n";
  out << "seed = " << cfg.seed << "\n";
  out << "config_fingerprint = " << cfg.fingerprint() << "\n";
  for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
  std::istringstream cfg_text(mwt::experiment_to_kv(cfg).to_text());
  std::string line;
  while (std::getline(cfg_text, line))
    if (!line.empty()) out << "config." << line << "\n";
}

std::uint64_t file_hash(const std::string& path) { return mwt::pipedetail::file_fnv(path); }

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw mwt::ConfigError("--hidden expects comma-separated widths, got: " + text);
    }
  }
  if (out.empty()) throw mwt::ConfigError("--hidden lists no layers");
  return out;
}

// ---------------------------------------------------------------------------

int cmd_phantom(const CommonOpts& common, const std::string& class_name, std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  const mwt::ExperimentConfig cfg = experiment_of(common, kv);
  const mwt::PhantomGenConfig gen = mwt::phantom_gen_from_kv(kv, cfg);
  const mwt::BreastClass cls = mwt::breast_class_from_string(class_name);
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };

  const mwt::Phantom p = mwt::generate_phantom(cls, gen, cfg.seed);
  mwt::export_phantom_rasters(p, path("eps.mwtr"), path("sigma.mwtr"), path("labels.mwtr"));
  mwt::RenderScale eps_scale{1.0, 60.0, false};
  mwt::render_pgm(path("eps.pgm"), p.dielectrics.eps_r, cfg.grid.n, cfg.grid.n, eps_scale);
  mwt::render_pgm(path("sigma.pgm"), p.dielectrics.sigma, cfg.grid.n, cfg.grid.n);

  std::ofstream meta(path("phantom.txt"));
  meta.precision(12);
  meta << "class = " << mwt::to_string(p.class_id) << "\n"
       << "seed = " << p.seed << "\n"
       << "semi_a = " << p.geometry.semi_a << "\n"
       << "semi_b = " << p.geometry.semi_b << "\n"
       << "center_x = " << p.geometry.center_x << "\n"
       << "center_y = " << p.geometry.center_y << "\n"
       << "orientation = " << p.geometry.orientation << "\n"
       << "skin_thickness = " << p.geometry.skin_thickness << "\n"
       << "pct_adipose = " << p.labels.tissue_percent(mwt::kLabelAdipose) << "\n"
       << "pct_transitional = " << p.labels.tissue_percent(mwt::kLabelTransitional) << "\n"
       << "pct_fibro = " << p.labels.tissue_percent(mwt::kLabelFibroGlandular) << "\n";

  write_run_manifest(out_dir, "phantom", cfg,
                     {{"class", mwt::to_string(cls)},
                      {"eps_hash", std::to_string(file_hash(path("eps.mwtr")))},
                      {"sigma_hash", std::to_string(file_hash(path("sigma.mwtr")))}});
  std::cout << "phantom class " << mwt::to_string(cls) << " written to " << out_dir << "\n";
  return 0;
}

int cmd_dataset(const CommonOpts& common, std::size_t n_per_class, bool resume,
                std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  const mwt::ExperimentConfig cfg = experiment_of(common, kv);
  const mwt::PhantomGenConfig gen = mwt::phantom_gen_from_kv(kv, cfg);
  std::array<double, 3> fractions = {kv.get_double("split.train", 0.85),
                                     kv.get_double("split.validation", 0.10),
                                     kv.get_double("split.test", 0.05)};
  mwt::BuildOptions opts;
  opts.resume = resume;
  opts.progress = [](std::size_t done, std::size_t total) {
    if (done % 50 == 0 || done == total)
      std::cerr << "\rdataset: " << done << "/" << total << std::flush;
  };
  mwt::DatasetStore store = mwt::build_dataset(out_dir, cfg, gen, n_per_class, cfg.seed, opts);
  std::cerr << "\n";
  mwt::DatasetManifest manifest =
      mwt::partition(store, fractions, mwt::mix_seed(cfg.seed, 0x706172ULL));
  manifest.config_snapshot = mwt::experiment_to_kv(cfg).to_text();
  mwt::write_manifest(mwt::DatasetStore::manifest_file(out_dir), manifest);
  write_run_manifest(out_dir, "dataset", cfg,
                     {{"records", std::to_string(store.count())},
                      {"train", std::to_string(manifest.train_ids.size())},
                      {"validation", std::to_string(manifest.validation_ids.size())},
                      {"test", std::to_string(manifest.test_ids.size())}});
  std::cout << "dataset: " << store.count() << " records, split "
            << manifest.train_ids.size() << "/" << manifest.validation_ids.size() << "/"
            << manifest.test_ids.size() << "\n";
  return 0;
}

int cmd_forward(const CommonOpts& common, const std::string& eps_path,
                const std::string& sigma_path, double snr_db, const std::string& out_path) {
  const mwt::KeyValueConfig kv = load_kv(common);
  const mwt::ExperimentConfig cfg = experiment_of(common, kv);
  const mwt::Phantom p =
      mwt::import_external_phantom(eps_path, sigma_path, cfg.grid, cfg.background);
  const mwt::GreenKernel kern = mwt::build_green_kernel(cfg);
  mwt::ScatteringOptions sopts;
  sopts.tol = cfg.solver_tol;
  sopts.max_iter = cfg.solver_max_iter;
  mwt::ScatteringMatrix s = mwt::scattering_matrix(p, cfg, kern, sopts);
  if (std::isfinite(snr_db)) {
    mwt::Rng rng = mwt::make_rng(cfg.seed, 0x666f726eULL);
    s = mwt::add_awgn(s, snr_db, rng);
  }
  mwt::write_scattering(out_path, s);
  std::cout << "scattering matrix " << s.nv << "x" << s.nr << " written to " << out_path
            << " (hash " << file_hash(out_path) << ")\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& dataset_dir,
              const std::string& hidden, int epochs, std::size_t batch, double lr, double snr_db,
              const std::string& activation, std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  mwt::DatasetStore store = mwt::DatasetStore::open(dataset_dir);
  mwt::DatasetManifest manifest =
      mwt::read_manifest(mwt::DatasetStore::manifest_file(dataset_dir));
  mwt::ExperimentConfig cfg = mwt::experiment_from_kv(
      mwt::KeyValueConfig::parse_text(manifest.config_snapshot));
  if (common.seed_given) cfg.seed = common.seed;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };

  mwt::TrainHyper hyper;
  hyper.hidden = parse_hidden(hidden);
  hyper.epochs = epochs;
  hyper.batch_size = batch;
  hyper.learning_rate = lr;
  hyper.snr_db = snr_db;
  hyper.seed = cfg.seed;
  hyper.activation = mwt::activation_from_string(activation);

  mwt::TrainingReport report;
  const mwt::MlpModel model = mwt::train(store, manifest, hyper, &report);
  mwt::save_model(path("model.mwtm"), model);
  mwt::write_report_csv(path("train.csv"), report);
  write_run_manifest(out_dir, "train", cfg,
                     {{"dataset", dataset_dir},
                      {"hidden", hidden},
                      {"epochs", std::to_string(epochs)},
                      {"snr_db", std::to_string(snr_db)},
                      {"model_hash", std::to_string(file_hash(path("model.mwtm")))}});
  std::cout << "trained " << hidden << " net: epoch-1 loss " << report.epochs.front().train_loss
            << ", epoch-" << epochs << " loss " << report.epochs.back().train_loss << "\n";
  return 0;
}

int cmd_infer(const CommonOpts& common, const std::string& model_path,
              const std::string& input_path, double snr_db, std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  (void)kv;
  const mwt::MlpModel model = mwt::load_model(model_path);
  mwt::ScatteringMatrix s = mwt::read_scattering(input_path);
  if (std::isfinite(snr_db)) {
    const std::uint64_t seed = common.seed_given ? common.seed : 1;
    mwt::Rng rng = mwt::make_rng(seed, 0x696e666572ULL);
    s = mwt::add_awgn(s, snr_db, rng);
  }
  const mwt::InferResult res = mwt::infer(model, s);
  if (res.fingerprint_mismatch)
    std::cerr << "warning: input fingerprint differs from the model's training config\n";
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };
  const int n = model.output_grid.n;
  mwt::write_raster(path("eps.mwtr"), res.map.eps_r, n, n);
  mwt::write_raster(path("sigma.mwtr"), res.map.sigma, n, n);
  mwt::RenderScale eps_scale{1.0, 60.0, false};
  mwt::render_pgm(path("eps.pgm"), res.map.eps_r, n, n, eps_scale);
  mwt::render_pgm(path("sigma.pgm"), res.map.sigma, n, n);
  std::ofstream summary(path("infer.txt"));
  summary.precision(12);
  summary << "model = " << model_path << "\ninput = " << input_path
          << "\nseconds = " << res.seconds << "\ndecode_clamped = " << res.decode.clamped
          << "\nfingerprint_mismatch = " << (res.fingerprint_mismatch ? 1 : 0) << "\n";
  mwt::ExperimentConfig stub;
  stub.grid = model.output_grid;
  write_run_manifest(out_dir, "infer", stub,
                     {{"model", model_path},
                      {"input", input_path},
                      {"seconds", std::to_string(res.seconds)}});
  std::cout << "inference in " << res.seconds * 1e3 << " ms, maps written to " << out_dir << "\n";
  return 0;
}

int cmd_invert(const CommonOpts& common, const std::string& method,
               const std::string& input_path, int iters, std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  const mwt::ExperimentConfig cfg = experiment_of(common, kv);
  const mwt::ScatteringMatrix s = mwt::read_scattering(input_path);
  const mwt::GreenKernel kern = mwt::build_green_kernel(cfg);

  mwt::InversionResult res;
  if (method == "born") {
    mwt::InversionOptions opts;
    res = mwt::born_invert(s, cfg, kern, opts);
  } else if (method == "dbim") {
    mwt::InversionOptions opts;
    if (iters > 0) opts.max_iterations = iters;
    res = mwt::dbim_invert(s, cfg, kern, opts);
  } else if (method == "csi") {
    mwt::InversionOptions opts = mwt::csi_default_options();
    if (iters > 0) opts.max_iterations = iters;
    res = mwt::csi_invert(s, cfg, kern, opts);
  } else {
    throw mwt::ConfigError("unknown inversion method: " + method +
                           " (expected born, dbim or csi)");
  }

  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };
  const int n = cfg.grid.n;
  mwt::write_raster(path("eps.mwtr"), res.map.eps_r, n, n);
  mwt::write_raster(path("sigma.mwtr"), res.map.sigma, n, n);
  mwt::RenderScale eps_scale{1.0, 60.0, false};
  mwt::render_pgm(path("eps.pgm"), res.map.eps_r, n, n, eps_scale);
  mwt::render_pgm(path("sigma.pgm"), res.map.sigma, n, n);
  {
    std::ofstream csv(path("residuals.csv"));
    csv << "iteration,residual,functional,seconds\n";
    csv.precision(12);
    for (std::size_t i = 0; i < res.iterations.size(); ++i)
      csv << (i + 1) << ',' << res.iterations[i].residual << ',' << res.iterations[i].functional
          << ',' << res.iterations[i].seconds << "\n";
  }
  std::ofstream summary(path("invert.txt"));
  summary.precision(12);
  summary << "method = " << method << "\ninput = " << input_path
          << "\niterations = " << res.iterations.size() << "\nseconds = " << res.seconds << "\n";
  if (!res.iterations.empty())
    summary << "final_residual = " << res.iterations.back().residual << "\n";
  write_run_manifest(out_dir, "invert", cfg,
                     {{"method", method},
                      {"input", input_path},
                      {"iterations", std::to_string(res.iterations.size())},
                      {"seconds", std::to_string(res.seconds)}});
  std::cout << method << ": " << res.iterations.size() << " iterations in " << res.seconds
            << " s, maps written to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& dataset_dir,
                 const std::vector<std::string>& model_paths, double snr_db, int bins,
                 std::string out_dir) {
  if (model_paths.empty()) throw mwt::ConfigError("nothing to evaluate: no models given");
  mwt::DatasetStore store = mwt::DatasetStore::open(dataset_dir);
  mwt::DatasetManifest manifest =
      mwt::read_manifest(mwt::DatasetStore::manifest_file(dataset_dir));
  mwt::ExperimentConfig cfg = mwt::experiment_from_kv(
      mwt::KeyValueConfig::parse_text(manifest.config_snapshot));
  if (common.seed_given) cfg.seed = common.seed;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };
  const std::uint64_t eval_seed = mwt::mix_seed(cfg.seed, 0x6e6f697365ULL);

  std::vector<mwt::ModelEvaluation> evals;
  for (const std::string& mp : model_paths) {
    const mwt::MlpModel model = mwt::load_model(mp);
    const std::string name = fs::path(mp).stem().string();
    evals.push_back(
        mwt::evaluate_model(model, name, store, manifest, snr_db, bins, eval_seed));
    mwt::write_radial_spectrum_csv(path("spectrum_" + name + ".csv"), evals.back().spectrum,
                                   evals.back().truth_spectrum);
  }
  mwt::write_evaluation_csv(path("evaluation.csv"), evals);
  std::ofstream summary(path("evaluate.txt"));
  summary.precision(12);
  for (const auto& ev : evals)
    summary << ev.name << ": nmse_eps " << ev.mean_nmse_eps << ", nmse_sigma "
            << ev.mean_nmse_sigma << ", crossover " << ev.crossover << " cycles/pixel\n";
  write_run_manifest(out_dir, "evaluate", cfg,
                     {{"dataset", dataset_dir},
                      {"models", std::to_string(model_paths.size())},
                      {"snr_db", std::to_string(snr_db)}});
  for (const auto& ev : evals)
    std::cout << ev.name << ": nmse_eps " << ev.mean_nmse_eps << ", crossover " << ev.crossover
              << "\n";
  return 0;
}

int cmd_render(const std::string& input_path, const std::string& out_path, double scale_min,
               double scale_max, bool fixed_scale) {
  const mwt::RasterData raster = mwt::read_raster(input_path);
  mwt::RenderScale scale;
  if (fixed_scale) {
    scale.automatic = false;
    scale.min = scale_min;
    scale.max = scale_max;
  }
  mwt::render_pgm(out_path, raster.values, raster.n_rows, raster.n_cols, scale);
  std::cout << "rendered " << raster.n_rows << "x" << raster.n_cols << " image to " << out_path
            << "\n";
  return 0;
}

int cmd_repro_desk(const CommonOpts& common, std::size_t n_per_class, bool fresh,
                   std::string out_dir) {
  const mwt::KeyValueConfig kv = load_kv(common);
  mwt::DeskOptions opts;
  opts.experiment = experiment_of(common, kv);
  opts.phantom = mwt::phantom_gen_from_kv(kv, opts.experiment);
  opts.n_per_class = n_per_class;
  opts.resume = !fresh;
  opts.progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const mwt::DeskReport report = mwt::run_repro_desk(out_dir, opts);
  std::cout.precision(6);
  std::cout << "records: " << report.dataset_records << "\n"
            << "train loss (main net): epoch 1 " << report.train_main.epochs.front().train_loss
            << " -> epoch " << report.train_main.epochs.size() << " "
            << report.train_main.epochs.back().train_loss << "\n"
            << "nmse_eps ann " << report.eval_main.mean_nmse_eps << " | born "
            << report.eval_born.mean_nmse_eps << " | low-snr ann "
            << report.eval_robustness.mean_nmse_eps << "\n"
            << "crossover main " << report.eval_main.crossover << " | sweep "
            << report.eval_sweep.crossover << "\n"
            << "mean inference " << report.eval_main.mean_infer_seconds * 1e3 << " ms\n"
            << "total " << report.total_seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D microwave breast tomography toolkit"};
  app.require_subcommand(1);

  CommonOpts common;

  // phantom
  auto* sc_phantom = app.add_subcommand("phantom", "generate one random breast phantom");
  std::string class_name = "II";
  std::string out_dir = "out";
  sc_phantom->add_option("--class", class_name, "breast density class (I..IV)")->required();
  sc_phantom->add_option("--out", out_dir, "output directory");
  add_common(sc_phantom, common);

  // dataset
  auto* sc_dataset = app.add_subcommand("dataset", "build a phantom/scattering dataset");
  std::size_t n_per_class = 500;
  bool resume = false;
  sc_dataset->add_option("--n-per-class", n_per_class, "records per breast class");
  sc_dataset->add_flag("--resume", resume, "continue an interrupted build");
  sc_dataset->add_option("--out", out_dir, "dataset directory");
  add_common(sc_dataset, common);

  // forward
  auto* sc_forward = app.add_subcommand("forward", "solve the forward scattering problem");
  std::string eps_path, sigma_path, out_path = "scattering.mwts";
  double snr_db = std::numeric_limits<double>::infinity();
  sc_forward->add_option("--eps", eps_path, "permittivity raster (MWTR)")->required();
  sc_forward->add_option("--sigma", sigma_path, "conductivity raster (MWTR)")->required();
  sc_forward->add_option("--snr", snr_db, "add white Gaussian noise at this SNR (dB)");
  sc_forward->add_option("--out", out_path, "output scattering file (MWTS)");
  add_common(sc_forward, common);

  // train
  auto* sc_train = app.add_subcommand("train", "train the inversion network");
  std::string dataset_dir, hidden = "256,256,256", activation = "relu";
  int epochs = 30;
  std::size_t batch = 100;
  double lr = 5e-5, train_snr = 30.0;
  sc_train->add_option("--dataset", dataset_dir, "dataset directory")->required();
  sc_train->add_option("--hidden", hidden, "hidden layer widths, comma separated");
  sc_train->add_option("--epochs", epochs, "training epochs");
  sc_train->add_option("--batch", batch, "mini-batch size");
  sc_train->add_option("--lr", lr, "learning rate");
  sc_train->add_option("--snr", train_snr, "training noise SNR in dB (inf = clean)");
  sc_train->add_option("--activation", activation, "hidden activation (relu|tanh)");
  sc_train->add_option("--out", out_dir, "output directory");
  add_common(sc_train, common);

  // infer
  auto* sc_infer = app.add_subcommand("infer", "reconstruct with a trained network");
  std::string model_path, input_path;
  double infer_snr = std::numeric_limits<double>::infinity();
  sc_infer->add_option("--model", model_path, "trained model (MWTM)")->required();
  sc_infer->add_option("--input", input_path, "scattering data (MWTS)")->required();
  sc_infer->add_option("--snr", infer_snr, "add noise before inversion (dB)");
  sc_infer->add_option("--out", out_dir, "output directory");
  add_common(sc_infer, common);

  // invert
  auto* sc_invert = app.add_subcommand("invert", "classical iterative inversion");
  std::string method = "dbim";
  int iters = 0;
  sc_invert->add_option("--method", method, "born | dbim | csi")->required();
  sc_invert->add_option("--input", input_path, "scattering data (MWTS)")->required();
  sc_invert->add_option("--iters", iters, "iteration cap (0 = method default)");
  sc_invert->add_option("--out", out_dir, "output directory");
  add_common(sc_invert, common);

  // evaluate
  auto* sc_evaluate = app.add_subcommand("evaluate", "test-split spectra and error tables");
  std::vector<std::string> model_paths;
  double eval_snr = 30.0;
  int bins = 16;
  sc_evaluate->add_option("--dataset", dataset_dir, "dataset directory")->required();
  sc_evaluate->add_option("--model", model_paths, "model file(s), repeatable")->required();
  sc_evaluate->add_option("--snr", eval_snr, "evaluation noise SNR in dB");
  sc_evaluate->add_option("--bins", bins, "radial spectrum bins");
  sc_evaluate->add_option("--out", out_dir, "output directory");
  add_common(sc_evaluate, common);

  // render
  auto* sc_render = app.add_subcommand("render", "render an MWTR raster to 8-bit PGM");
  std::string render_in, render_out = "out.pgm";
  double scale_min = 0.0, scale_max = 0.0;
  sc_render->add_option("--input", render_in, "raster file (MWTR)")->required();
  sc_render->add_option("--out", render_out, "output image (PGM)");
  auto* min_opt = sc_render->add_option("--min", scale_min, "fixed scale minimum");
  auto* max_opt = sc_render->add_option("--max", scale_max, "fixed scale maximum");
  min_opt->needs(max_opt);
  max_opt->needs(min_opt);

  // repro-desk
  auto* sc_repro = app.add_subcommand("repro-desk", "desk-scale end-to-end pipeline");
  std::size_t repro_n_per_class = 500;
  bool fresh = false;
  sc_repro->add_option("--n-per-class", repro_n_per_class, "records per breast class");
  sc_repro->add_flag("--fresh", fresh, "ignore existing dataset/models and rebuild");
  sc_repro->add_option("--out", out_dir, "output directory");
  add_common(sc_repro, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors map to exit code 2
  }

  try {
    apply_threads(common);
    if (sc_phantom->parsed()) return cmd_phantom(common, class_name, out_dir);
    if (sc_dataset->parsed()) return cmd_dataset(common, n_per_class, resume, out_dir);
    if (sc_forward->parsed())
      return cmd_forward(common, eps_path, sigma_path, snr_db, out_path);
    if (sc_train->parsed())
      return cmd_train(common, dataset_dir, hidden, epochs, batch, lr, train_snr, activation,
                       out_dir);
    if (sc_infer->parsed()) return cmd_infer(common, model_path, input_path, infer_snr, out_dir);
    if (sc_invert->parsed()) return cmd_invert(common, method, input_path, iters, out_dir);
    if (sc_evaluate->parsed())
      return cmd_evaluate(common, dataset_dir, model_paths, eval_snr, bins, out_dir);
    if (sc_render->parsed())
      return cmd_render(render_in, render_out, scale_min, scale_max, !min_opt->empty());
    if (sc_repro->parsed()) return cmd_repro_desk(common, repro_n_per_class, fresh, out_dir);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const mwt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mwt::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mwt::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
