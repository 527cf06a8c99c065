#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mwt/metrics.hpp"

using namespace mwt;

namespace {

std::vector<double> random_image(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x696d67ULL);
  std::vector<double> img(static_cast<std::size_t>(n) * n);
  for (double& v : img) v = normal(rng, 0.0, 1.0);
  return img;
}

}  // namespace

TEST_SUITE("squared spectrum") {
  TEST_CASE("parseval: spectrum energy equals image energy times n^2") {
    const int n = 16;
    const std::vector<double> img = random_image(n, 3);
    double mean = 0.0;
    for (double v : img) mean += v;
    mean /= img.size();
    double spatial = 0.0;
    for (double v : img) spatial += (v - mean) * (v - mean);
    const auto spec = mean_squared_spectrum({img}, n);
    double spectral = 0.0;
    for (double v : spec) spectral += v;
    // unnormalized DFT: sum |X|^2 = N * sum |x|^2 with N = n^2
    const double expected = spatial * n * n;
    CHECK(std::abs(spectral - expected) <= 1e-9 * expected);
  }

  TEST_CASE("mean removal zeroes the DC bin") {
    const int n = 8;
    std::vector<double> img = random_image(n, 4);
    for (double& v : img) v += 100.0;  // large offset must not leak into the spectrum
    const auto spec = mean_squared_spectrum({img}, n);
    CHECK(spec[static_cast<std::size_t>(n / 2) * n + n / 2] < 1e-18 * spec[0] + 1e-12);
  }

  TEST_CASE("ensemble average is the mean of per-image spectra") {
    const int n = 8;
    const std::vector<double> a = random_image(n, 5), b = random_image(n, 6);
    const auto sa = mean_squared_spectrum({a}, n);
    const auto sb = mean_squared_spectrum({b}, n);
    const auto both = mean_squared_spectrum({a, b}, n);
    for (std::size_t i = 0; i < both.size(); ++i)
      CHECK(both[i] == doctest::Approx(0.5 * (sa[i] + sb[i])).epsilon(1e-12));
    CHECK_THROWS_AS(mean_squared_spectrum({}, n), DataError);
    CHECK_THROWS_AS(mean_squared_spectrum({std::vector<double>(3, 0.0)}, n), DataError);
  }
}

TEST_SUITE("radial average") {
  TEST_CASE("populations cover every sample and energy is preserved") {
    const int n = 16, bins = 8;
    const auto spec = mean_squared_spectrum({random_image(n, 7)}, n);
    const RadialSpectrum rad = radial_average(spec, n, bins);
    std::size_t pop = 0;
    double energy = 0.0;
    for (int b = 0; b < bins; ++b) {
      pop += rad.population[static_cast<std::size_t>(b)];
      energy += rad.power[static_cast<std::size_t>(b)] *
                static_cast<double>(rad.population[static_cast<std::size_t>(b)]);
    }
    CHECK(pop == static_cast<std::size_t>(n) * n);
    double total = 0.0;
    for (double v : spec) total += v;
    CHECK(std::abs(energy - total) <= 1e-9 * total);
    CHECK(rad.frequency.front() == doctest::Approx(0.5 / bins * 0.5));
    CHECK(rad.frequency.back() == doctest::Approx(0.5 - 0.25 / bins));
  }

  TEST_CASE("white noise has a flat radial spectrum") {
    const int n = 32, bins = 8;
    std::vector<std::vector<double>> images;
    for (std::uint64_t i = 0; i < 300; ++i) images.push_back(random_image(n, 100 + i));
    const RadialSpectrum rad = radial_spectrum_of(images, n, bins);
    const double mid = rad.power[static_cast<std::size_t>(bins / 2)];
    for (int b = 0; b < bins; ++b) {
      const double db = to_db(rad.power[static_cast<std::size_t>(b)] / mid);
      CHECK(std::abs(db) < 1.0);
    }
  }
}

TEST_SUITE("crossover") {
  TEST_CASE("identical spectra never split: crossover is the Nyquist limit") {
    const int n = 16, bins = 8;
    const RadialSpectrum rad = radial_spectrum_of({random_image(n, 9)}, n, bins);
    CHECK(minus3db_crossover(rad, rad) == 0.5);
  }

  TEST_CASE("a uniform ratio beyond the band splits immediately") {
    RadialSpectrum ref;
    ref.frequency = {0.1, 0.2, 0.3, 0.4};
    ref.power = {1.0, 1.0, 1.0, 1.0};
    ref.population = {4, 4, 4, 4};
    RadialSpectrum est = ref;
    for (double& p : est.power) p *= 0.25;  // -6 dB everywhere (also +6 dB case below)
    CHECK(minus3db_crossover(est, ref) == 0.0);
    for (double& p : est.power) p *= 16.0;  // +6 dB
    CHECK(minus3db_crossover(est, ref) == 0.0);
  }

  TEST_CASE("interpolates in dB at the first violation") {
    RadialSpectrum ref;
    ref.frequency = {0.1, 0.2, 0.3, 0.4};
    ref.power = {1.0, 1.0, 1.0, 1.0};
    ref.population = {4, 4, 4, 4};
    RadialSpectrum est = ref;
    est.power = {1.0, 1.0, from_db(-6.0), from_db(-6.0)};
    // ratio runs 0 dB at 0.2 to -6 dB at 0.3; hits -3 dB halfway
    CHECK(minus3db_crossover(est, ref) == doctest::Approx(0.25));
    est.power = {1.0, 1.0, from_db(6.0), 1.0};  // violation above the band too
    CHECK(minus3db_crossover(est, ref) == doctest::Approx(0.25));
  }

  TEST_CASE("vanished estimate ends the band at the last agreeing bin") {
    RadialSpectrum ref;
    ref.frequency = {0.1, 0.2, 0.3};
    ref.power = {1.0, 1.0, 1.0};
    ref.population = {4, 4, 4};
    RadialSpectrum est = ref;
    est.power = {1.0, 1.0, 0.0};
    CHECK(minus3db_crossover(est, ref) == doctest::Approx(0.2));
    est.power = {0.0, 0.0, 0.0};
    CHECK(minus3db_crossover(est, ref) == 0.0);
    RadialSpectrum empty = ref;
    empty.power = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(minus3db_crossover(empty, empty), DataError);
  }
}

TEST_SUITE("pointwise errors") {
  TEST_CASE("nmse basics") {
    CHECK(nmse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(nmse({2.0, 4.0}, {1.0, 2.0}) == doctest::Approx(1.0));
    CHECK(nmse({0.0, 0.0}, {1.0, 2.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(nmse({1.0}, {1.0, 2.0}), DataError);
    CHECK_THROWS_AS(nmse({1.0}, {0.0}), DataError);
  }

  TEST_CASE("channel errors with a lossless reference fall back to absolute sigma error") {
    Grid g;
    g.n = 8;
    DielectricMap ref(g, 23.0, 0.0);
    DielectricMap est(g, 23.0, 0.0);
    est.sigma[0] = 0.5;
    est.eps_r[0] = 24.0;
    const ChannelErrors e = channel_errors(est, ref);
    CHECK(e.eps_nmse > 0.0);
    CHECK(e.eps_rel_rms == doctest::Approx(std::sqrt(e.eps_nmse)));
    CHECK(e.sigma_nmse == doctest::Approx(0.25));
  }
}

TEST_SUITE("spectrum csv") {
  TEST_CASE("writes one row per bin with the dB ratio") {
    RadialSpectrum ref;
    ref.frequency = {0.125, 0.375};
    ref.power = {2.0, 4.0};
    ref.population = {10, 20};
    RadialSpectrum est = ref;
    est.power = {1.0, 4.0};
    const std::string path =
        (std::filesystem::temp_directory_path() / "spec.csv").string();
    write_radial_spectrum_csv(path, est, ref);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "frequency,reference_power,estimate_power,ratio_db");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
  }
}
