#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mwt/phantom.hpp"

using namespace mwt;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_SUITE("texture field") {
  TEST_CASE("normalized to zero mean and unit variance") {
    Grid g;
    g.n = 32;
    Rng rng = make_rng(11);
    const auto field = multifractal_field(g, 3.0, rng);
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= field.size();
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= field.size();
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0));
  }

  TEST_CASE("same seed reproduces the field exactly") {
    Grid g;
    g.n = 16;
    Rng a = make_rng(5), b = make_rng(5);
    CHECK(multifractal_field(g, 3.0, a) == multifractal_field(g, 3.0, b));
  }

  TEST_CASE("steeper spectra yield smoother fields") {
    Grid g;
    g.n = 64;
    auto roughness = [&](double beta) {
      Rng rng = make_rng(17);
      const auto f = multifractal_field(g, beta, rng);
      double acc = 0.0;
      for (int r = 0; r < g.n; ++r)
        for (int c = 0; c + 1 < g.n; ++c) {
          const double d = f[static_cast<std::size_t>(r) * g.n + c + 1] -
                           f[static_cast<std::size_t>(r) * g.n + c];
          acc += d * d;
        }
      return acc;
    };
    CHECK(roughness(4.0) < roughness(1.0));
  }
}

TEST_SUITE("geometry sampling") {
  TEST_CASE("samples stay inside the declared ranges") {
    GeometryRanges ranges;
    Rng rng = make_rng(23);
    for (int i = 0; i < 500; ++i) {
      const BreastGeometry geo = sample_geometry(ranges, rng);
      CHECK(geo.semi_a >= ranges.semi_axis_min);
      CHECK(geo.semi_a <= ranges.semi_axis_max);
      CHECK(geo.semi_b >= ranges.semi_axis_min);
      CHECK(geo.semi_b <= ranges.semi_axis_max);
      CHECK(std::hypot(geo.center_x, geo.center_y) <= ranges.center_offset_max + 1e-12);
      CHECK(geo.skin_thickness >= ranges.skin_min);
      CHECK(geo.skin_thickness <= ranges.skin_max);
    }
  }

  TEST_CASE("ellipse membership respects rotation") {
    BreastGeometry geo;
    geo.semi_a = 0.05;
    geo.semi_b = 0.02;
    geo.orientation = kPi / 2.0;  // long axis along y
    CHECK(geo.inside(0.0, 0.045));
    CHECK(!geo.inside(0.045, 0.0));
    CHECK(geo.inside(0.015, 0.0));
  }
}

TEST_SUITE("segmentation") {
  TEST_CASE("skin band is closed: no inner tissue touches background") {
    PhantomGenConfig cfg;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
      const Phantom p = generate_phantom(BreastClass::III, cfg, seed);
      const int n = cfg.grid.n;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * n + c;
          if (p.labels.labels[i] < kLabelAdipose) continue;
          REQUIRE(r > 0);
          REQUIRE(c > 0);
          REQUIRE(r < n - 1);
          REQUIRE(c < n - 1);
          CHECK(p.labels.labels[i - 1] != kLabelBackground);
          CHECK(p.labels.labels[i + 1] != kLabelBackground);
          CHECK(p.labels.labels[i - static_cast<std::size_t>(n)] != kLabelBackground);
          CHECK(p.labels.labels[i + static_cast<std::size_t>(n)] != kLabelBackground);
        }
    }
  }

  TEST_CASE("tissue percentages land inside the class ranges") {
    PhantomGenConfig cfg;
    for (int c = 1; c <= 4; ++c) {
      const auto cls = static_cast<BreastClass>(c);
      const BreastClassSpec& spec = class_spec(cls);
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Phantom p = generate_phantom(cls, cfg, mix_seed(100, seed));
        const double fibro = p.labels.tissue_percent(kLabelFibroGlandular);
        const double trans = p.labels.tissue_percent(kLabelTransitional);
        const double adip = p.labels.tissue_percent(kLabelAdipose);
        CHECK(fibro >= spec.fibro.min_pct);
        CHECK(fibro <= spec.fibro.max_pct);
        CHECK(trans >= spec.transitional.min_pct);
        CHECK(trans <= spec.transitional.max_pct);
        CHECK(adip >= spec.adipose.min_pct);
        CHECK(adip <= spec.adipose.max_pct);
        CHECK(fibro + trans + adip == doctest::Approx(100.0));
      }
    }
  }

  TEST_CASE("ellipse that does not fit the grid is rejected") {
    Grid g;
    g.n = 16;
    g.side_length = 0.05;  // far smaller than any sampled breast
    BreastGeometry geo;
    geo.semi_a = geo.semi_b = 0.04;
    geo.skin_thickness = 0.002;
    Rng rng = make_rng(1);
    const auto field = multifractal_field(g, 3.0, rng);
    CHECK_THROWS_AS(segment_tissues(field, g, geo, class_spec(BreastClass::I), rng), DataError);
  }

  TEST_CASE("constant field cannot be segmented by quantiles") {
    Grid g;
    g.n = 32;
    BreastGeometry geo;
    geo.semi_a = geo.semi_b = 0.05;
    geo.skin_thickness = 0.002;
    Rng rng = make_rng(2);
    const std::vector<double> flat(g.cell_count(), 1.0);
    CHECK_THROWS_AS(segment_tissues(flat, g, geo, class_spec(BreastClass::I), rng), DataError);
  }
}

TEST_SUITE("dielectric assignment") {
  TEST_CASE("values stay inside truncation bounds per tissue") {
    PhantomGenConfig cfg;
    const Phantom p = generate_phantom(BreastClass::II, cfg, 42);
    for (std::size_t i = 0; i < p.labels.labels.size(); ++i) {
      const std::uint8_t l = p.labels.labels[i];
      if (l == kLabelBackground) {
        CHECK(p.dielectrics.eps_r[i] == cfg.background.eps_r_b);
        CHECK(p.dielectrics.sigma[i] == cfg.background.sigma_b);
        continue;
      }
      if (l == kLabelSkin) {
        // skin is excluded from smoothing, so raw bounds hold exactly
        const TissueStats& ts = cfg.stats.for_label(l);
        CHECK(p.dielectrics.eps_r[i] >= ts.eps_r.lower);
        CHECK(p.dielectrics.eps_r[i] <= ts.eps_r.upper);
      }
      CHECK(p.dielectrics.eps_r[i] >= 1.0);
      CHECK(p.dielectrics.sigma[i] >= 0.0);
    }
  }

  TEST_CASE("smoothing with zero kernel is the identity") {
    PhantomGenConfig cfg;
    const Phantom p = generate_phantom(BreastClass::I, cfg, 7);
    const DielectricMap same = smooth_correlate(p.dielectrics, p.labels, 0.0);
    CHECK(same.eps_r == p.dielectrics.eps_r);
    CHECK(same.sigma == p.dielectrics.sigma);
  }

  TEST_CASE("smoothing preserves skin and background bit-exactly") {
    PhantomGenConfig cfg;
    const Phantom p = generate_phantom(BreastClass::IV, cfg, 9);
    const DielectricMap smoothed = smooth_correlate(p.dielectrics, p.labels, 2.0);
    for (std::size_t i = 0; i < p.labels.labels.size(); ++i)
      if (p.labels.labels[i] < kLabelAdipose) {
        CHECK(smoothed.eps_r[i] == p.dielectrics.eps_r[i]);
        CHECK(smoothed.sigma[i] == p.dielectrics.sigma[i]);
      }
  }
}

TEST_SUITE("generator determinism and import") {
  TEST_CASE("same (class, config, seed) reproduces the phantom bit-exactly") {
    PhantomGenConfig cfg;
    const Phantom a = generate_phantom(BreastClass::III, cfg, 1234);
    const Phantom b = generate_phantom(BreastClass::III, cfg, 1234);
    CHECK(a.dielectrics.eps_r == b.dielectrics.eps_r);
    CHECK(a.dielectrics.sigma == b.dielectrics.sigma);
    CHECK(a.labels.labels == b.labels.labels);
    const Phantom c = generate_phantom(BreastClass::III, cfg, 1235);
    CHECK(a.dielectrics.eps_r != c.dielectrics.eps_r);
  }

  TEST_CASE("export and import round-trip the dielectric maps") {
    PhantomGenConfig cfg;
    const Phantom p = generate_phantom(BreastClass::II, cfg, 77);
    const std::string eps_path = temp_path("p_eps.mwtr");
    const std::string sig_path = temp_path("p_sigma.mwtr");
    export_phantom_rasters(p, eps_path, sig_path);
    const Phantom back = import_external_phantom(eps_path, sig_path, cfg.grid, cfg.background);
    CHECK(back.dielectrics.eps_r == p.dielectrics.eps_r);
    CHECK(back.dielectrics.sigma == p.dielectrics.sigma);
    std::remove(eps_path.c_str());
    std::remove(sig_path.c_str());
  }

  TEST_CASE("import rejects unphysical values with coordinates") {
    Grid g;
    g.n = 8;
    std::vector<double> eps(g.cell_count(), 23.0), sig(g.cell_count(), 0.0);
    eps[10] = 0.2;  // row 1, col 2
    const std::string eps_path = temp_path("bad_eps.mwtr");
    const std::string sig_path = temp_path("bad_sigma.mwtr");
    write_raster(eps_path, eps, g.n, g.n);
    write_raster(sig_path, sig, g.n, g.n);
    BackgroundMedium bg;
    try {
      import_external_phantom(eps_path, sig_path, g, bg);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    std::remove(eps_path.c_str());
    std::remove(sig_path.c_str());
  }

  TEST_CASE("class string parsing") {
    CHECK(breast_class_from_string("I") == BreastClass::I);
    CHECK(breast_class_from_string("3") == BreastClass::III);
    CHECK_THROWS_AS(breast_class_from_string("V"), ConfigError);
  }
}
