#pragma once

// Poisson inputs: radius laws, marked Poisson samples, space-time seeds for
// growth models and the halo needed for unrestricted models.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "jmcover/geom.hpp"

namespace jmcover {

using Engine = std::mt19937_64;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Reproducible random stream: replication i of an experiment uses stream i
/// of one master seed.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  Engine engine() const;
  /// Deterministic sub-stream, for sampling steps inside one replication.
  RngSpec child(std::uint64_t k) const;
  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

class RadiusLaw {
 public:
  enum class Kind { constant, uniform, exponential, pareto };

  static RadiusLaw constant(double c);
  static RadiusLaw uniform(double b);  // uniform on [0, b]
  static RadiusLaw exponential(double rate);
  /// Density alpha*xm^alpha / y^(alpha+1) on [xm, inf).
  static RadiusLaw pareto(double alpha, double xm = 1.0);
  /// Parses "constant:c", "uniform:b", "exp:rate", "pareto:alpha[,xm]".
  static RadiusLaw parse(const std::string& text);

  Kind kind() const { return kind_; }
  double param() const { return p1_; }
  double param2() const { return p2_; }

  double sample(Engine& eng) const;
  /// E[Y^m]; +infinity when the moment diverges.
  double moment(int m) const;
  double support_min() const;
  double support_max() const;  // +infinity for unbounded laws
  bool bounded() const { return std::isfinite(support_max()); }
  std::string to_string() const;

  friend bool operator==(const RadiusLaw&, const RadiusLaw&) = default;

 private:
  RadiusLaw(Kind k, double a, double b) : kind_(k), p1_(a), p2_(b) {}
  Kind kind_;
  double p1_;
  double p2_;
};

double moment(const RadiusLaw& law, int m);

enum class MarkKind { radius, birth_time };

/// Realization of an independently marked Poisson process.
struct MarkedPointSet {
  int dim = 2;
  std::vector<Point> points;
  std::vector<double> marks;
  MarkKind mark_kind = MarkKind::radius;
  double intensity = 0.0;
  Window window = Window::unit_square();
  /// Largest birth time (or halo radius) the sample is complete up to.
  double horizon = kInfinity;
  RngSpec rng;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void append(const MarkedPointSet& other);
  /// Throws InvalidArgument when the structural invariants fail.
  void validate() const;
};

MarkedPointSet sample_marked_poisson(const Window& w, double n, const RadiusLaw& law, RngSpec rng);

/// Seeds of the restricted growth model with birth times in [t_min, t_max].
MarkedPointSet sample_spacetime_poisson(const Window& w, double rho, double t_max, RngSpec rng,
                                        double t_min = 0.0);

/// Seeds outside w that can reach w by time t_max, i.e. with
/// s + dist(x, w) <= t_max. With t_min > 0 only the increment over the
/// t_min halo is returned, so halos can be grown without resampling.
MarkedPointSet sample_halo(const Window& w, double rho, double t_max, RngSpec rng, double t_min = 0.0);

/// Radius-marked points outside w within distance (m_min, m_max] of it:
/// the part of an unrestricted Boolean model that can touch w when
/// every grain has radius at most m_max.
MarkedPointSet sample_marked_ring(const Window& w, double n, const RadiusLaw& law, double m_max, RngSpec rng,
                                  double m_min = 0.0);

std::pair<MarkedPointSet, MarkedPointSet> truncate_marks(const MarkedPointSet& s, double cutoff);

/// CSV columns x,y[,z],mark plus a JSON sidecar at <path>.json.
void write_marked_points(const MarkedPointSet& s, const std::filesystem::path& csv_path);
MarkedPointSet read_marked_points(const std::filesystem::path& csv_path);

Point sample_uniform(const Window& w, Engine& eng);

}  // namespace jmcover
