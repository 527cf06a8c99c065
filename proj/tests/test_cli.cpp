#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef MWTOMO_BIN
#error "MWTOMO_BIN must point at the built tool"
#endif

namespace {

namespace fs = std::filesystem;

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "mwtomo_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(MWTOMO_BIN) + " " + args + " > " +
                          (work_dir() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string log_text() {
  std::ifstream in(work_dir() / "last.log");
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string dir_arg(const std::string& name) { return (work_dir() / name).string(); }

// small-array settings shared by the slow subcommands
const std::string kFast = " --set array.count=8 --set solver.tol=1e-5";

}  // namespace

TEST_SUITE("usage errors") {
  TEST_CASE("bad invocations exit with code 2") {
    CHECK(run("") == 2);                                     // no subcommand
    CHECK(run("phantom") == 2);                              // missing required --class
    CHECK(run("phantom --class V --out " + dir_arg("x")) == 2);  // unknown class
    CHECK(run("evaluate --dataset " + dir_arg("none")) == 2);    // no --model
    CHECK(run("render --input a.mwtr --min 1") == 2);        // --min without --max
    CHECK(run("--help") == 0);
  }

  TEST_CASE("invalid thread settings exit with code 2") {
    const std::string cmd = std::string("env MWTOMO_THREADS=abc ") + MWTOMO_BIN +
                            " phantom --class II --out " + dir_arg("threads") + " > " +
                            (work_dir() / "last.log").string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
    CHECK(run("phantom --class II --threads -2 --out " + dir_arg("threads")) == 2);
  }
}

TEST_SUITE("data errors") {
  TEST_CASE("missing input files exit with code 3") {
    CHECK(run("forward --eps missing.mwtr --sigma missing.mwtr --out " +
              dir_arg("s.mwts")) == 3);
    CHECK(run("render --input missing.mwtr --out " + dir_arg("x.pgm")) == 3);
    CHECK(run("train --dataset " + dir_arg("no_such_dataset") + " --out " + dir_arg("t")) == 3);
  }
}

TEST_SUITE("phantom") {
  TEST_CASE("same seed reproduces the rasters byte for byte") {
    const std::string a = dir_arg("ph_a"), b = dir_arg("ph_b"), c = dir_arg("ph_c");
    REQUIRE(run("phantom --class III --seed 42 --out " + a) == 0);
    REQUIRE(run("phantom --class III --seed 42 --out " + b) == 0);
    REQUIRE(run("phantom --class III --seed 43 --out " + c) == 0);
    for (const char* f : {"eps.mwtr", "sigma.mwtr", "labels.mwtr"})
      CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    CHECK(slurp(fs::path(a) / "eps.mwtr") != slurp(fs::path(c) / "eps.mwtr"));
    for (const char* f : {"eps.pgm", "sigma.pgm", "phantom.txt", "run_manifest.txt"})
      CHECK(fs::exists(fs::path(a) / f));
    const std::string manifest = slurp(fs::path(a) / "run_manifest.txt");
    CHECK(manifest.find("subcommand = phantom") != std::string::npos);
    CHECK(manifest.find("seed = 42") != std::string::npos);
  }
}

TEST_SUITE("render") {
  TEST_CASE("fixed and automatic scales both produce a PGM with a sidecar") {
    const std::string src = dir_arg("ph_a") + "/eps.mwtr";
    REQUIRE(fs::exists(src));
    const std::string out = dir_arg("render.pgm");
    CHECK(run("render --input " + src + " --out " + out) == 0);
    CHECK(slurp(out).substr(0, 2) == "P5");
    CHECK(fs::exists(out + ".scale.txt"));
    CHECK(run("render --input " + src + " --out " + out + " --min 1 --max 60") == 0);
    CHECK(slurp(out + ".scale.txt").find("60") != std::string::npos);
  }
}

TEST_SUITE("forward and invert") {
  TEST_CASE("phantom data round-trips through the solver and a Born step") {
    const std::string ph = dir_arg("ph_a");
    const std::string mwts = dir_arg("scatter.mwts");
    REQUIRE(run("forward --eps " + ph + "/eps.mwtr --sigma " + ph + "/sigma.mwtr --out " +
                mwts + kFast) == 0);
    REQUIRE(fs::exists(mwts));

    CHECK(run("invert --method warp --input " + mwts + " --out " + dir_arg("inv") + kFast) == 2);

    const std::string inv = dir_arg("inv_born");
    REQUIRE(run("invert --method born --input " + mwts + " --out " + inv + kFast) == 0);
    for (const char* f : {"eps.mwtr", "sigma.mwtr", "eps.pgm", "residuals.csv", "invert.txt",
                          "run_manifest.txt"})
      CHECK(fs::exists(fs::path(inv) / f));
    std::ifstream csv(fs::path(inv) / "residuals.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "iteration,residual,functional,seconds");

    // mismatched grid between data and config is a data error
    CHECK(run("invert --method born --input " + mwts + " --out " + dir_arg("inv_bad") +
              " --set array.count=6") == 3);
  }
}

TEST_SUITE("dataset, train, infer, evaluate") {
  TEST_CASE("the learned pipeline runs end to end on a tiny dataset") {
    const std::string ds = dir_arg("dataset");
    const std::string splits =
        " --set split.train=0.34 --set split.validation=0.33 --set split.test=0.33";
    REQUIRE(run("dataset --n-per-class 3 --seed 5 --out " + ds + kFast + splits) == 0);
    CHECK(fs::exists(fs::path(ds) / "records.mwtd"));
    CHECK(fs::exists(fs::path(ds) / "manifest.txt"));
    // rebuilding without --resume is refused, with --resume it is a no-op
    CHECK(run("dataset --n-per-class 3 --seed 5 --out " + ds + kFast + splits) == 3);
    CHECK(run("dataset --n-per-class 3 --seed 5 --resume --out " + ds + kFast + splits) == 0);

    const std::string tr = dir_arg("train");
    REQUIRE(run("train --dataset " + ds + " --hidden 16 --epochs 3 --batch 2 --lr 1e-3 --out " +
                tr) == 0);
    REQUIRE(fs::exists(fs::path(tr) / "model.mwtm"));
    std::ifstream csv(fs::path(tr) / "train.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "epoch,train_loss,validation_loss,seconds");
    int epochs = 0;
    while (std::getline(csv, line))
      if (!line.empty()) ++epochs;
    CHECK(epochs == 3);

    const std::string inf = dir_arg("infer");
    REQUIRE(run("infer --model " + tr + "/model.mwtm --input " + dir_arg("scatter.mwts") +
                " --out " + inf) == 0);
    for (const char* f : {"eps.mwtr", "sigma.mwtr", "infer.txt"})
      CHECK(fs::exists(fs::path(inf) / f));

    const std::string ev = dir_arg("eval");
    REQUIRE(run("evaluate --dataset " + ds + " --model " + tr + "/model.mwtm --bins 8 --out " +
                ev) == 0);
    CHECK(fs::exists(fs::path(ev) / "evaluation.csv"));
    CHECK(fs::exists(fs::path(ev) / "spectrum_model.csv"));
    const std::string table = slurp(fs::path(ev) / "evaluation.csv");
    CHECK(table.find("model") != std::string::npos);
  }
}
