#include "jmcover/processes.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "jmcover/error.hpp"

namespace jmcover {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

long long poisson_count(double mean, Engine& eng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(eng);
}

double uniform01(Engine& eng) { return std::uniform_real_distribution<double>(0.0, 1.0)(eng); }

}  // namespace

Engine RngSpec::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(master_seed)),
                    static_cast<std::uint32_t>(splitmix64(master_seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(stream_index ^ 0x5bd1e995ULL)),
                    static_cast<std::uint32_t>(splitmix64(stream_index ^ 0x5bd1e995ULL) >> 32)};
  return Engine(seq);
}

RngSpec RngSpec::child(std::uint64_t k) const {
  return {splitmix64(master_seed ^ splitmix64(stream_index + 0x632be59bd9b4e019ULL)), k};
}

RadiusLaw RadiusLaw::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("constant law needs c > 0");
  return {Kind::constant, c, 0.0};
}

RadiusLaw RadiusLaw::uniform(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("uniform law needs b > 0");
  return {Kind::uniform, b, 0.0};
}

RadiusLaw RadiusLaw::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("exponential law needs rate > 0");
  return {Kind::exponential, rate, 0.0};
}

RadiusLaw RadiusLaw::pareto(double alpha, double xm) {
  if (!(alpha > 0.0) || !(xm > 0.0) || !std::isfinite(alpha) || !std::isfinite(xm))
    throw InvalidArgument("pareto law needs alpha > 0 and xm > 0");
  return {Kind::pareto, alpha, xm};
}

RadiusLaw RadiusLaw::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("radius law must look like kind:param, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("bad number in radius law '" + text + "'");
    }
    if (used != s.size()) throw InvalidArgument("bad number in radius law '" + text + "'");
    return v;
  };
  if (kind == "constant") return constant(num(rest));
  if (kind == "uniform") return uniform(num(rest));
  if (kind == "exp" || kind == "exponential") return exponential(num(rest));
  if (kind == "pareto") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) return pareto(num(rest));
    return pareto(num(rest.substr(0, comma)), num(rest.substr(comma + 1)));
  }
  throw InvalidArgument("unknown radius law '" + kind + "'");
}

double RadiusLaw::sample(Engine& eng) const {
  switch (kind_) {
    case Kind::constant:
      return p1_;
    case Kind::uniform:
      return p1_ * uniform01(eng);
    case Kind::exponential:
      return std::exponential_distribution<double>(p1_)(eng);
    case Kind::pareto: {
      const double u = 1.0 - uniform01(eng);  // (0, 1]
      return p2_ * std::pow(u, -1.0 / p1_);
    }
  }
  return 0.0;
}

double RadiusLaw::moment(int m) const {
  if (m < 0) throw InvalidArgument("moment order must be nonnegative");
  if (m == 0) return 1.0;
  const double md = static_cast<double>(m);
  switch (kind_) {
    case Kind::constant:
      return std::pow(p1_, md);
    case Kind::uniform:
      return std::pow(p1_, md) / (md + 1.0);
    case Kind::exponential:
      return std::tgamma(md + 1.0) / std::pow(p1_, md);
    case Kind::pareto:
      if (p1_ <= md) return kInfinity;
      return p1_ * std::pow(p2_, md) / (p1_ - md);
  }
  return kInfinity;
}

double RadiusLaw::support_min() const {
  switch (kind_) {
    case Kind::constant:
      return p1_;
    case Kind::pareto:
      return p2_;
    default:
      return 0.0;
  }
}

double RadiusLaw::support_max() const {
  switch (kind_) {
    case Kind::constant:
    case Kind::uniform:
      return p1_;
    default:
      return kInfinity;
  }
}

std::string RadiusLaw::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::constant:
      os << "constant:" << p1_;
      break;
    case Kind::uniform:
      os << "uniform:" << p1_;
      break;
    case Kind::exponential:
      os << "exp:" << p1_;
      break;
    case Kind::pareto:
      os << "pareto:" << p1_ << "," << p2_;
      break;
  }
  return os.str();
}

double moment(const RadiusLaw& law, int m) { return law.moment(m); }

void MarkedPointSet::append(const MarkedPointSet& other) {
  if (other.dim != dim || other.mark_kind != mark_kind) throw InvalidArgument("cannot append mismatched point sets");
  points.insert(points.end(), other.points.begin(), other.points.end());
  marks.insert(marks.end(), other.marks.begin(), other.marks.end());
}

void MarkedPointSet::validate() const {
  if (points.size() != marks.size()) throw InvalidArgument("points and marks differ in length");
  for (double m : marks)
    if (!(m >= 0.0)) throw InvalidArgument("marks must be nonnegative");
  for (const auto& p : points)
    if (!is_finite(p)) throw InvalidArgument("point coordinates must be finite");
}

Point sample_uniform(const Window& w, Engine& eng) {
  if (w.kind() == WindowKind::box) {
    const auto s = w.sides();
    Point p{s[0] * uniform01(eng), s[1] * uniform01(eng), 0.0};
    if (w.dim() == 3) p.z = s[2] * uniform01(eng);
    return p;
  }
  const Point lo = w.bbox_lo(), hi = w.bbox_hi();
  for (;;) {
    const Point p{lo.x + (hi.x - lo.x) * uniform01(eng), lo.y + (hi.y - lo.y) * uniform01(eng), 0.0};
    if (w.contains(p)) return p;
  }
}

MarkedPointSet sample_marked_poisson(const Window& w, double n, const RadiusLaw& law, RngSpec rng) {
  if (!(n >= 0.0) || !std::isfinite(n)) throw InvalidArgument("intensity must be finite and nonnegative");
  MarkedPointSet s;
  s.dim = w.dim();
  s.window = w;
  s.intensity = n;
  s.mark_kind = MarkKind::radius;
  s.rng = rng;
  Engine eng = rng.engine();
  const long long count = poisson_count(n * w.area(), eng);
  s.points.reserve(static_cast<std::size_t>(count));
  s.marks.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    s.points.push_back(sample_uniform(w, eng));
    s.marks.push_back(law.sample(eng));
  }
  return s;
}

MarkedPointSet sample_spacetime_poisson(const Window& w, double rho, double t_max, RngSpec rng, double t_min) {
  if (!(rho >= 0.0) || !(t_max >= 0.0) || !(t_min >= 0.0) || t_min > t_max)
    throw InvalidArgument("need rho >= 0 and 0 <= t_min <= t_max");
  MarkedPointSet s;
  s.dim = w.dim();
  s.window = w;
  s.intensity = rho;
  s.mark_kind = MarkKind::birth_time;
  s.horizon = t_max;
  s.rng = rng;
  Engine eng = rng.engine();
  const long long count = poisson_count(rho * w.area() * (t_max - t_min), eng);
  for (long long i = 0; i < count; ++i) {
    s.points.push_back(sample_uniform(w, eng));
    s.marks.push_back(t_min + (t_max - t_min) * uniform01(eng));
  }
  return s;
}

namespace {

// Proposals from the bounding box of w dilated by `reach`, uniform mark on
// [0, mark_hi]; `keep` decides acceptance from (distance to w, mark).
template <typename Keep>
void sample_dilated(const Window& w, double rate, double reach, double mark_hi, Engine& eng, MarkedPointSet& out,
                    Keep keep, const RadiusLaw* law = nullptr) {
  const Point lo = w.bbox_lo() - Point{reach, reach, w.dim() == 3 ? reach : 0.0};
  const Point hi = w.bbox_hi() + Point{reach, reach, w.dim() == 3 ? reach : 0.0};
  double volume = (hi.x - lo.x) * (hi.y - lo.y);
  if (w.dim() == 3) volume *= (hi.z - lo.z);
  const double mark_span = law ? 1.0 : mark_hi;
  const long long count = poisson_count(rate * volume * mark_span, eng);
  for (long long i = 0; i < count; ++i) {
    Point p{lo.x + (hi.x - lo.x) * uniform01(eng), lo.y + (hi.y - lo.y) * uniform01(eng), 0.0};
    if (w.dim() == 3) p.z = lo.z + (hi.z - lo.z) * uniform01(eng);
    const double mark = law ? law->sample(eng) : mark_hi * uniform01(eng);
    if (w.contains(p)) continue;
    const double d = w.distance_to(p);
    if (keep(d, mark)) {
      out.points.push_back(p);
      out.marks.push_back(mark);
    }
  }
}

}  // namespace

MarkedPointSet sample_halo(const Window& w, double rho, double t_max, RngSpec rng, double t_min) {
  if (!(rho >= 0.0) || !(t_max >= 0.0) || !(t_min >= 0.0) || t_min > t_max)
    throw InvalidArgument("need rho >= 0 and 0 <= t_min <= t_max");
  MarkedPointSet s;
  s.dim = w.dim();
  s.window = w;
  s.intensity = rho;
  s.mark_kind = MarkKind::birth_time;
  s.horizon = t_max;
  s.rng = rng;
  if (t_max == 0.0) return s;
  Engine eng = rng.engine();
  sample_dilated(w, rho, t_max, t_max, eng, s, [&](double d, double birth) {
    const bool in_new = d <= t_max - birth;
    const bool in_old = birth <= t_min && d <= t_min - birth;
    return in_new && !in_old;
  });
  return s;
}

MarkedPointSet sample_marked_ring(const Window& w, double n, const RadiusLaw& law, double m_max, RngSpec rng,
                                  double m_min) {
  if (!(n >= 0.0) || !(m_max >= 0.0) || !(m_min >= 0.0) || m_min > m_max)
    throw InvalidArgument("need n >= 0 and 0 <= m_min <= m_max");
  MarkedPointSet s;
  s.dim = w.dim();
  s.window = w;
  s.intensity = n;
  s.mark_kind = MarkKind::radius;
  s.horizon = m_max;
  s.rng = rng;
  if (m_max == 0.0) return s;
  Engine eng = rng.engine();
  sample_dilated(
      w, n, m_max, 1.0, eng, s, [&](double d, double) { return d > m_min && d <= m_max; }, &law);
  return s;
}

std::pair<MarkedPointSet, MarkedPointSet> truncate_marks(const MarkedPointSet& s, double cutoff) {
  if (s.mark_kind != MarkKind::radius) throw InvalidArgument("truncate_marks needs radius marks");
  MarkedPointSet below = s, above = s;
  below.points.clear();
  below.marks.clear();
  above.points.clear();
  above.marks.clear();
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& dst = s.marks[i] <= cutoff ? below : above;
    dst.points.push_back(s.points[i]);
    dst.marks.push_back(s.marks[i]);
  }
  return {std::move(below), std::move(above)};
}

void write_marked_points(const MarkedPointSet& s, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path.string());
  csv.precision(17);
  csv << (s.dim == 3 ? "x,y,z,mark\n" : "x,y,mark\n");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = s.points[i];
    csv << p.x << ',' << p.y << ',';
    if (s.dim == 3) csv << p.z << ',';
    csv << s.marks[i] << '\n';
  }
  nlohmann::json meta{{"window", s.window.to_json()},
                      {"intensity", s.intensity},
                      {"mark_kind", s.mark_kind == MarkKind::radius ? "radius" : "birth_time"},
                      {"seed", s.rng.master_seed},
                      {"stream", s.rng.stream_index},
                      {"count", s.size()}};
  if (std::isfinite(s.horizon)) meta["horizon"] = s.horizon;
  std::ofstream side(csv_path.string() + ".json");
  if (!side) throw Error("cannot write sidecar for " + csv_path.string());
  side << meta.dump(2) << '\n';
}

MarkedPointSet read_marked_points(const std::filesystem::path& csv_path) {
  std::ifstream side(csv_path.string() + ".json");
  if (!side) throw Error("missing sidecar " + csv_path.string() + ".json");
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed sidecar: ") + e.what());
  }
  MarkedPointSet s;
  s.window = Window::from_json(meta.at("window"));
  s.dim = s.window.dim();
  s.intensity = meta.at("intensity").get<double>();
  s.mark_kind = meta.at("mark_kind").get<std::string>() == "radius" ? MarkKind::radius : MarkKind::birth_time;
  s.rng = {meta.at("seed").get<std::uint64_t>(), meta.at("stream").get<std::uint64_t>()};
  s.horizon = meta.contains("horizon") ? meta["horizon"].get<double>() : kInfinity;
  std::ifstream csv(csv_path);
  if (!csv) throw Error("cannot read " + csv_path.string());
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    if (static_cast<int>(v.size()) != s.dim + 1) throw Error("bad row in " + csv_path.string());
    s.points.push_back({v[0], v[1], s.dim == 3 ? v[2] : 0.0});
    s.marks.push_back(v.back());
  }
  s.validate();
  return s;
}

}  // namespace jmcover
