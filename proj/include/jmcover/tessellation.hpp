#pragma once

// Raster cell pictures: every pixel gets the generator that claims it,
// argmin_i (s_i + |y - x_i|) for growth seeds or argmin_i |y - p_i| / Y_i for
// Boolean-model grains, lowest index on ties.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jmcover/geom.hpp"
#include "jmcover/processes.hpp"

namespace jmcover {

enum class CellMode { jm, spbm };

struct CellRaster {
  static constexpr int kOutside = -1;

  int width = 0;
  int height = 0;
  /// Pixel (i, j) samples origin + (i * pixel, j * pixel); j grows with y.
  Point origin;
  double pixel = 1.0;
  std::vector<int> labels;  // row-major, j * width + i
  int generator_count = 0;

  Point sample_point(int i, int j) const { return origin + Point{i * pixel, j * pixel, 0.0}; }
  int label(int i, int j) const { return labels[static_cast<std::size_t>(j) * width + i]; }
};

/// resolution = pixels along the longer side of the window's bounding box.
CellRaster assign_cells(const Window& w, const MarkedPointSet& input, CellMode mode, int resolution);
CellRaster assign_cells_serial(const Window& w, const MarkedPointSet& input, CellMode mode, int resolution);

using Rgb = std::array<std::uint8_t, 3>;

struct CellColoring {
  std::vector<int> color_of;  // per generator
  std::vector<Rgb> palette;
};

/// Greedy colouring of the cell adjacency graph (4-neighbour pixels);
/// five colours unless greedy runs out.
CellColoring color_cells(const CellRaster& raster);

inline constexpr Rgb kOutsideColor = {255, 255, 255};

struct RenderOutput {
  std::filesystem::path ppm;
  std::filesystem::path svg;
  CellColoring coloring;
};

/// Writes <path>.ppm (P6) and <path>.svg (window outline, generator dots
/// sized by mark for radius marks, optional star as a blue square).
RenderOutput render(const CellRaster& raster, const Window& w, const MarkedPointSet& pts,
                    std::optional<Point> star, const std::filesystem::path& path);

struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // top row first
};

PpmImage read_ppm(const std::filesystem::path& path);

}  // namespace jmcover
