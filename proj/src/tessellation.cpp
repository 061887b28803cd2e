#include "jmcover/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "jmcover/error.hpp"
#include "jmcover/field.hpp"

namespace jmcover {

namespace {

CellRaster make_raster(const Window& w, const MarkedPointSet& input, int resolution) {
  if (w.dim() != 2) throw UnsupportedDimension("cell pictures are planar");
  if (resolution < 16) throw InvalidArgument("resolution must be at least 16");
  if (input.empty()) throw InvalidArgument("cell assignment needs at least one generator");
  CellRaster r;
  const Point lo = w.bbox_lo(), hi = w.bbox_hi();
  const double ext = std::max(hi.x - lo.x, hi.y - lo.y);
  r.pixel = ext / resolution;
  r.origin = lo;
  r.width = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / r.pixel - 1e-9)));
  r.height = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / r.pixel - 1e-9)));
  r.labels.assign(static_cast<std::size_t>(r.width) * r.height, CellRaster::kOutside);
  r.generator_count = static_cast<int>(input.size());
  return r;
}

template <typename Argmin>
void fill_row(CellRaster& r, const Window& w, const Argmin& argmin, int j) {
  for (int i = 0; i < r.width; ++i) {
    const Point p = r.sample_point(i, j);
    if (w.contains(p)) r.labels[static_cast<std::size_t>(j) * r.width + i] = argmin(p);
  }
}

CellRaster assign(const Window& w, const MarkedPointSet& input, CellMode mode, int resolution, bool parallel) {
  CellRaster r = make_raster(w, input, resolution);
  const Point lo = w.bbox_lo(), hi = w.bbox_hi();
  auto run = [&](const auto& ev) {
    auto argmin = [&](Point p) { return ev.argmin(p); };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
      for (int j = 0; j < r.height; ++j) fill_row(r, w, argmin, j);
    } else {
      for (int j = 0; j < r.height; ++j) fill_row(r, w, argmin, j);
    }
  };
  if (mode == CellMode::jm) {
    run(JmFieldEvaluator(input.points, input.marks, 2, lo, hi));
  } else {
    bool any = false;
    for (double m : input.marks) any = any || m > 0.0;
    if (!any) throw InvalidArgument("cell assignment needs a generator with positive mark");
    run(SpbmFieldEvaluator(input.points, input.marks, 1, 2, lo, hi));
  }
  return r;
}

Rgb extra_color(int n) {
  // Golden-angle hues for colours beyond the base palette.
  const double h = std::fmod(n * 137.50776, 360.0) / 60.0;
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  double rgb[3] = {0, 0, 0};
  const int seg = static_cast<int>(h);
  const int order[6][3] = {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}, {2, 1, 0}, {1, 2, 0}, {0, 2, 1}};
  rgb[order[seg][0]] = 1.0;
  rgb[order[seg][1]] = x;
  auto to8 = [](double v) { return static_cast<std::uint8_t>(60 + 170 * v); };
  return {to8(rgb[0]), to8(rgb[1]), to8(rgb[2])};
}

}  // namespace

CellRaster assign_cells(const Window& w, const MarkedPointSet& input, CellMode mode, int resolution) {
  return assign(w, input, mode, resolution, true);
}

CellRaster assign_cells_serial(const Window& w, const MarkedPointSet& input, CellMode mode, int resolution) {
  return assign(w, input, mode, resolution, false);
}

CellColoring color_cells(const CellRaster& raster) {
  const int n = raster.generator_count;
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  auto link = [&](int a, int b) {
    if (a == b || a < 0 || b < 0) return;
    adj[a].insert(b);
    adj[b].insert(a);
  };
  for (int j = 0; j < raster.height; ++j) {
    for (int i = 0; i < raster.width; ++i) {
      const int a = raster.label(i, j);
      if (i + 1 < raster.width) link(a, raster.label(i + 1, j));
      if (j + 1 < raster.height) link(a, raster.label(i, j + 1));
    }
  }
  CellColoring c;
  c.palette = {Rgb{230, 97, 92}, Rgb{93, 165, 218}, Rgb{250, 200, 90}, Rgb{130, 200, 120}, Rgb{178, 130, 200}};
  c.color_of.assign(static_cast<std::size_t>(n), 0);
  for (int g = 0; g < n; ++g) {
    std::vector<bool> used(c.palette.size(), false);
    for (int h : adj[g])
      if (h < g) used[static_cast<std::size_t>(c.color_of[h])] = true;
    auto free = std::find(used.begin(), used.end(), false);
    if (free == used.end()) {
      c.palette.push_back(extra_color(static_cast<int>(c.palette.size())));
      c.color_of[g] = static_cast<int>(c.palette.size()) - 1;
    } else {
      c.color_of[g] = static_cast<int>(free - used.begin());
    }
  }
  return c;
}

RenderOutput render(const CellRaster& raster, const Window& w, const MarkedPointSet& pts, std::optional<Point> star,
                    const std::filesystem::path& path) {
  RenderOutput out;
  out.coloring = color_cells(raster);
  out.ppm = path;
  out.ppm.replace_extension(".ppm");
  out.svg = path;
  out.svg.replace_extension(".svg");

  {
    std::ofstream f(out.ppm, std::ios::binary);
    if (!f) throw Error("cannot write " + out.ppm.string());
    f << "P6\n" << raster.width << ' ' << raster.height << "\n255\n";
    for (int j = raster.height - 1; j >= 0; --j) {
      for (int i = 0; i < raster.width; ++i) {
        const int l = raster.label(i, j);
        const Rgb c = l < 0 ? kOutsideColor : out.coloring.palette[out.coloring.color_of[l]];
        f.write(reinterpret_cast<const char*>(c.data()), 3);
      }
    }
    if (!f) throw Error("failed writing " + out.ppm.string());
  }

  const double W = raster.width * raster.pixel, H = raster.height * raster.pixel;
  const double scale = 800.0 / std::max(W, H);
  auto sx = [&](double x) { return (x - raster.origin.x) * scale; };
  auto sy = [&](double y) { return (raster.origin.y + H - y) * scale; };
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W * scale << "\" height=\"" << H * scale
    << "\">\n";
  if (w.kind() == WindowKind::disc) {
    s << "<circle cx=\"" << sx(w.center().x) << "\" cy=\"" << sy(w.center().y) << "\" r=\"" << w.radius() * scale
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  } else {
    s << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (const auto& v : w.vertices()) s << sx(v.x) << ',' << sy(v.y) << ' ';
    s << "\"/>\n";
  }
  double max_mark = 0.0;
  for (double m : pts.marks) max_mark = std::max(max_mark, m);
  const bool by_mark = pts.mark_kind == MarkKind::radius && max_mark > 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point p = pts.points[i];
    if (!w.contains(p)) continue;
    const double r = by_mark ? 1.5 + 4.5 * pts.marks[i] / max_mark : 3.0;
    s << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"" << r << "\" fill=\"red\"/>\n";
  }
  if (star) {
    s << "<rect x=\"" << sx(star->x) - 6 << "\" y=\"" << sy(star->y) - 6
      << "\" width=\"12\" height=\"12\" fill=\"blue\"/>\n";
  }
  s << "</svg>\n";
  std::ofstream f(out.svg);
  if (!f) throw Error("cannot write " + out.svg.string());
  f << s.str();
  return out;
}

PpmImage read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::string magic;
  int maxval = 0;
  PpmImage img;
  f >> magic >> img.width >> img.height >> maxval;
  if (magic != "P6" || maxval != 255 || img.width <= 0 || img.height <= 0) throw Error("not an 8-bit P6 file");
  f.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size() * 3));
  if (!f) throw Error("truncated PPM " + path.string());
  return img;
}

}  // namespace jmcover
