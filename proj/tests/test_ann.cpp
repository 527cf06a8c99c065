#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mwt/ann.hpp"
#include "oracles.hpp"

using namespace mwt;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

MlpModel small_model(std::uint64_t seed = 1) {
  MlpArchitecture arch;
  arch.input_dim = 10;
  arch.hidden = {5};
  arch.output_dim = 3;
  arch.hidden_activation = Activation::Tanh;  // smooth, so finite differences apply
  return init_model(arch, seed);
}

}  // namespace

TEST_SUITE("encoding") {
  TEST_CASE("input encoding interleaves re/im and z-scores features") {
    ScatteringMatrix s;
    s.nv = 1;
    s.nr = 2;
    s.values = {cplx(3.0, -1.0), cplx(0.5, 2.0)};
    const Eigen::VectorXd raw = encode_input_raw(s);
    CHECK(raw.size() == 4);
    CHECK(raw(0) == 3.0);
    CHECK(raw(1) == -1.0);
    CHECK(raw(2) == 0.5);
    CHECK(raw(3) == 2.0);
    InputNormalization norm;
    norm.mean = Eigen::VectorXd::Constant(4, 1.0);
    norm.stddev = Eigen::VectorXd::Constant(4, 2.0);
    const Eigen::VectorXd z = encode_input(s, norm);
    CHECK(z(0) == doctest::Approx(1.0));
    CHECK(z(3) == doctest::Approx(0.5));
    norm.mean = Eigen::VectorXd::Zero(3);
    norm.stddev = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(encode_input(s, norm), DataError);
  }

  TEST_CASE("target scaling round-trips in-range maps exactly") {
    Grid g;
    g.n = 8;
    DielectricMap map(g, 23.0, 0.0);
    Rng rng = make_rng(4);
    for (std::size_t i = 0; i < map.eps_r.size(); ++i) {
      map.eps_r[i] = uniform_in(rng, 5.0, 55.0);
      map.sigma[i] = uniform_in(rng, 0.05, 1.9);
    }
    OutputScaling sc{5.0, 55.0, 0.05, 1.9};
    const Eigen::VectorXd y = encode_target(map, sc, g);
    DecodeStats stats;
    const DielectricMap back = decode_target(y, sc, g, &stats);
    CHECK(stats.clamped == 0);
    for (std::size_t i = 0; i < map.eps_r.size(); ++i) {
      CHECK(back.eps_r[i] == doctest::Approx(map.eps_r[i]).epsilon(1e-12));
      CHECK(back.sigma[i] == doctest::Approx(map.sigma[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("decode clamps out-of-range outputs and enforces physical floors") {
    Grid g;
    g.n = 8;
    Eigen::VectorXd y = Eigen::VectorXd::Constant(2 * g.cell_count(), 0.5);
    y(0) = -0.2;                                     // below range -> clamp to eps_min
    y(static_cast<Eigen::Index>(g.cell_count()) + 1) = 1.4;  // above range, second pixel
    OutputScaling sc{0.2, 60.0, 0.0, 2.0};       // eps_min below the physical floor
    DecodeStats stats;
    const DielectricMap map = decode_target(y, sc, g, &stats);
    CHECK(stats.clamped == 2);
    CHECK(map.eps_r[0] == 1.0);  // physical floor wins over the training minimum
    CHECK(map.sigma[1] == 2.0);
    CHECK_THROWS_AS(decode_target(Eigen::VectorXd::Zero(3), sc, g), DataError);
  }
}

TEST_SUITE("backpropagation") {
  TEST_CASE("gradients match central finite differences on a 10-5-3 net") {
    MlpModel model = small_model(8);
    Rng rng = make_rng(9);
    Eigen::VectorXd x(10), t(3);
    for (int i = 0; i < 10; ++i) x(i) = normal(rng, 0.0, 1.0);
    for (int i = 0; i < 3; ++i) t(i) = normal(rng, 0.0, 1.0);
    const MlpGradients grads = mlp_backward(model, x, t);
    double max_rel = 0.0;
    auto check_param = [&](double& p, double analytic) {
      auto loss_at = [&](double v) {
        const double saved = p;
        p = v;
        const double loss = mlp_loss(mlp_forward(model, x), t);
        p = saved;
        return loss;
      };
      const double fd = oracle::central_difference(loss_at, p, 1e-6);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
    };
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i)
        for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j)
          check_param(model.weights[l](i, j), grads.weights[l](i, j));
      for (Eigen::Index i = 0; i < model.biases[l].size(); ++i)
        check_param(model.biases[l](i), grads.biases[l](i));
    }
    CHECK(max_rel <= 1e-5);
  }

  TEST_CASE("batch loss equals the mean of per-sample losses") {
    MlpModel model = small_model(3);
    Rng rng = make_rng(5);
    Eigen::MatrixXd x(10, 7), t(3, 7);
    for (Eigen::Index j = 0; j < 7; ++j) {
      for (int i = 0; i < 10; ++i) x(i, j) = normal(rng, 0.0, 1.0);
      for (int i = 0; i < 3; ++i) t(i, j) = normal(rng, 0.0, 1.0);
    }
    const double batch = mlp_loss(mlp_forward_batch(model, x), t);
    double mean = 0.0;
    for (Eigen::Index j = 0; j < 7; ++j)
      mean += mlp_loss(mlp_forward(model, x.col(j)), t.col(j));
    CHECK(batch == doctest::Approx(mean / 7.0).epsilon(1e-12));
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step magnitude equals the learning rate") {
    MlpModel model = small_model(2);
    const MlpModel before = model;
    AdamState state = AdamState::for_model(model, 5e-5);
    MlpGradients grads;
    for (const auto& w : model.weights) grads.weights.push_back(Eigen::MatrixXd::Ones(w.rows(), w.cols()));
    for (const auto& b : model.biases) grads.biases.push_back(Eigen::VectorXd::Ones(b.size()));
    adam_step(state, grads, model);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      const Eigen::MatrixXd step = before.weights[l] - model.weights[l];
      CHECK(std::abs(step.maxCoeff() - 5e-5) < 1e-9);
      CHECK(std::abs(step.minCoeff() - 5e-5) < 1e-9);
    }
  }

  TEST_CASE("non-finite gradients are rejected before touching the model") {
    MlpModel model = small_model(2);
    const Eigen::MatrixXd saved = model.weights[0];
    AdamState state = AdamState::for_model(model);
    MlpGradients grads;
    for (const auto& w : model.weights) grads.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : model.biases) grads.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    grads.weights[0](0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(state, grads, model), NumericalError);
    CHECK(model.weights[0] == saved);
    CHECK(state.t == 0);
  }
}

TEST_SUITE("training") {
  // one small dataset shared by the cases below
  static std::string g_dir;

  TEST_CASE("loss decreases and retraining is bit-identical") {
    ExperimentConfig cfg;
    cfg.grid.n = 32;  // coarse enough to be quick, fine enough for phantoms
    cfg.array.count = 6;
    PhantomGenConfig gen;
    gen.grid = cfg.grid;
    g_dir = temp_path("mwt_ann_ds");
    std::filesystem::remove_all(g_dir);
    const DatasetStore store = build_dataset(g_dir, cfg, gen, 5, 13);
    const DatasetManifest manifest = [&] {
      DatasetManifest m = partition(store, {0.6, 0.2, 0.2}, 2);
      m.config_snapshot = experiment_to_kv(cfg).to_text();
      return m;
    }();

    TrainHyper hyper;
    hyper.hidden = {16};
    hyper.epochs = 40;
    hyper.batch_size = 4;
    hyper.learning_rate = 1e-3;
    hyper.snr_db = 30.0;
    TrainingReport report;
    const MlpModel model = train(store, manifest, hyper, &report);
    REQUIRE(report.epochs.size() == 40);
    CHECK(report.epochs.back().train_loss < report.epochs.front().train_loss);
    CHECK(std::isfinite(report.epochs.back().validation_loss));

    const MlpModel again = train(store, manifest, hyper);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      CHECK(model.weights[l] == again.weights[l]);
      CHECK(model.biases[l] == again.biases[l]);
    }

    // inference produces a physical map on the training grid
    const DatasetRecord rec = store.read(manifest.test_ids.front());
    const InferResult result = infer(model, rec.matrix);
    CHECK(result.map.grid.n == cfg.grid.n);
    CHECK(!result.fingerprint_mismatch);
    for (double e : result.map.eps_r) CHECK(e >= 1.0);
    for (double s : result.map.sigma) CHECK(s >= 0.0);

    // model file round-trip is bit exact
    const std::string path = temp_path("model.mwtm");
    save_model(path, model);
    const MlpModel back = load_model(path);
    CHECK(back.arch.input_dim == model.arch.input_dim);
    CHECK(back.arch.hidden == model.arch.hidden);
    CHECK(back.norm.mean == model.norm.mean);
    CHECK(back.scaling.eps_max == model.scaling.eps_max);
    CHECK(back.output_grid.n == model.output_grid.n);
    CHECK(back.config_fingerprint == model.config_fingerprint);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      CHECK(back.weights[l] == model.weights[l]);
      CHECK(back.biases[l] == model.biases[l]);
    }

    // corrupting one payload byte trips the checksum
    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(100);
      const char junk = 0x2f;
      f.write(&junk, 1);
    }
    CHECK_THROWS_AS(load_model(path), DataError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model(path), DataError);
    std::filesystem::remove_all(g_dir);
  }
}

TEST_SUITE("report csv") {
  TEST_CASE("csv lists one line per epoch with a header") {
    TrainingReport report;
    report.epochs.push_back({0.5, 0.6, 1.25});
    report.epochs.push_back({0.25, 0.3, 1.5});
    const std::string path = temp_path("train.csv");
    write_report_csv(path, report);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_loss,validation_loss,seconds");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "1,");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "2,");
    std::remove(path.c_str());
  }
}
