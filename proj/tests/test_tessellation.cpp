#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "jmcover/error.hpp"
#include "jmcover/tessellation.hpp"

using namespace jmcover;

namespace {

int brute_label(Point y, const MarkedPointSet& s, CellMode mode) {
  int best = -1;
  double bv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    double v;
    if (mode == CellMode::jm) {
      v = s.marks[i] + distance(y, s.points[i]);
    } else {
      if (!(s.marks[i] > 0.0)) continue;
      v = distance(y, s.points[i]) / s.marks[i];
    }
    if (v < bv) {
      bv = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "jmcover_test_tessellation";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("labels are the brute-force argmin") {
  const Window lsh = Window::polygon({{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}});
  for (const Window& w : {Window::unit_square(), Window::disc({0.5, 0.5}, 0.45), lsh}) {
    const MarkedPointSet g = sample_spacetime_poisson(w, 300.0, 0.2, RngSpec{11, 0});
    const MarkedPointSet b = sample_marked_poisson(w, 60.0, RadiusLaw::pareto(1.5, 0.5), RngSpec{11, 1});
    for (auto [mode, pts] : {std::pair{CellMode::jm, &g}, std::pair{CellMode::spbm, &b}}) {
      const CellRaster r = assign_cells(w, *pts, mode, 96);
      CHECK(r.generator_count == static_cast<int>(pts->size()));
      int inside = 0;
      for (int j = 0; j < r.height; ++j) {
        for (int i = 0; i < r.width; ++i) {
          const Point y = r.sample_point(i, j);
          if (!w.contains(y)) {
            CHECK(r.label(i, j) == CellRaster::kOutside);
            continue;
          }
          ++inside;
          CHECK(r.label(i, j) == brute_label(y, *pts, mode));
        }
      }
      CHECK(std::abs(inside * r.pixel * r.pixel - w.area()) < 0.05 * w.area());
    }
  }
}

TEST_CASE("serial and parallel rasters agree") {
  const Window w = Window::disc({0.5, 0.5}, 0.45);
  const MarkedPointSet g = sample_spacetime_poisson(w, 2000.0, 0.1, RngSpec{12, 0});
  const CellRaster a = assign_cells(w, g, CellMode::jm, 300);
  const CellRaster b = assign_cells_serial(w, g, CellMode::jm, 300);
  CHECK(a.width == b.width);
  CHECK(a.height == b.height);
  CHECK(a.labels == b.labels);
}

TEST_CASE("raster dimensions follow the bounding box") {
  const Window w = Window::polygon({{0, 0}, {2, 0}, {2, 1}, {0, 1}});
  MarkedPointSet g;
  g.points = {{0.5, 0.5}, {1.5, 0.5}};
  g.marks = {0.0, 0.0};
  g.mark_kind = MarkKind::birth_time;
  const CellRaster r = assign_cells(w, g, CellMode::jm, 64);
  CHECK(r.width == 64);
  CHECK(r.height == 32);
  CHECK(r.pixel == doctest::Approx(2.0 / 64));
  CHECK(r.label(0, 0) == 0);
  CHECK(r.label(63, 31) == 1);
}

TEST_CASE("colouring is proper on the pixel adjacency") {
  const Window w = Window::unit_square();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const MarkedPointSet g = sample_spacetime_poisson(w, 800.0, 0.15, RngSpec{13, s});
    const CellRaster r = assign_cells(w, g, CellMode::jm, 200);
    const CellColoring c = color_cells(r);
    REQUIRE(c.color_of.size() == g.size());
    CHECK(c.palette.size() >= 5);
    for (int j = 0; j < r.height; ++j) {
      for (int i = 0; i < r.width; ++i) {
        const int a = r.label(i, j);
        if (a < 0) continue;
        CHECK(c.color_of[a] < static_cast<int>(c.palette.size()));
        if (i + 1 < r.width) {
          const int b = r.label(i + 1, j);
          if (b >= 0 && b != a) CHECK(c.color_of[a] != c.color_of[b]);
        }
        if (j + 1 < r.height) {
          const int b = r.label(i, j + 1);
          if (b >= 0 && b != a) CHECK(c.color_of[a] != c.color_of[b]);
        }
      }
    }
  }
}

TEST_CASE("render writes a matching PPM and an SVG") {
  const Window w = Window::disc({0.5, 0.5}, 0.45);
  const MarkedPointSet b = sample_marked_poisson(w, 40.0, RadiusLaw::uniform(1.0), RngSpec{14, 0});
  const CellRaster r = assign_cells(w, b, CellMode::spbm, 120);
  const auto base = scratch() / "cells";
  const RenderOutput out = render(r, w, b, Point{0.5, 0.5}, base);
  REQUIRE(std::filesystem::exists(out.ppm));
  REQUIRE(std::filesystem::exists(out.svg));
  const PpmImage img = read_ppm(out.ppm);
  CHECK(img.width == r.width);
  CHECK(img.height == r.height);
  for (int j = 0; j < r.height; ++j) {
    for (int i = 0; i < r.width; ++i) {
      const int l = r.label(i, j);
      const Rgb want = l < 0 ? kOutsideColor : out.coloring.palette[out.coloring.color_of[l]];
      CHECK(img.pixels[static_cast<std::size_t>(r.height - 1 - j) * r.width + i] == want);
    }
  }
  std::ifstream svg(out.svg);
  const std::string text((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("<circle") != std::string::npos);
  CHECK(text.find("fill=\"blue\"") != std::string::npos);

  const auto bad = scratch() / "bad.ppm";
  std::ofstream(bad) << "P3\n2 2\n255\n";
  CHECK_THROWS_AS(read_ppm(bad), Error);
  CHECK_THROWS_AS(read_ppm(scratch() / "missing.ppm"), Error);
  std::filesystem::remove_all(scratch());
}

TEST_CASE("cell assignment rejects bad input") {
  const Window w = Window::unit_square();
  MarkedPointSet empty;
  CHECK_THROWS_AS(assign_cells(w, empty, CellMode::jm, 64), InvalidArgument);
  MarkedPointSet zero;
  zero.points = {{0.5, 0.5}};
  zero.marks = {0.0};
  CHECK_THROWS_AS(assign_cells(w, zero, CellMode::spbm, 64), InvalidArgument);
  CHECK_NOTHROW(assign_cells(w, zero, CellMode::jm, 64));
  CHECK_THROWS_AS(assign_cells(w, zero, CellMode::jm, 4), InvalidArgument);
  CHECK_THROWS_AS(assign_cells(Window::box({1, 1, 1}), zero, CellMode::jm, 64), UnsupportedDimension);
}
