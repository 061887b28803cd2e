#pragma once

// Coverage fields, exact k-coverage verification of planar windows by disks,
// coverage thresholds and growth-model cover times (monotone bisection over
// the verifier), and certified grid oracles for max_x Xi_x.

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "jmcover/geom.hpp"
#include "jmcover/processes.hpp"

namespace jmcover {

/// Seeds of a growth process. Unrestricted configurations carry the halo
/// as well; in both cases the sample is complete up to seeds.horizon.
struct GrowthConfiguration {
  MarkedPointSet seeds;
  bool restricted = true;
};

struct CoverageVerdict {
  bool covered = false;
  std::optional<Point> witness;
  std::optional<int> deficit;
  bool ambiguous = false;
};

struct CertifiedInterval {
  double lower = 0.0;
  double upper = 0.0;
  double lipschitz_used = 0.0;
  double grid_spacing = 0.0;

  bool contains(double v, double slack = 0.0) const { return v >= lower - slack && v <= upper + slack; }
};

struct CoverCount {
  int closed = 0;
  int open = 0;
};

/// Tolerances for a window: geometry at 1e-9 diam, bisection at 1e-7 diam.
double default_geom_tol(const Window& w);
double default_bisection_tol(const Window& w);

double xi_jm(Point x, const GrowthConfiguration& g);
double xi_spbm(Point x, const MarkedPointSet& pts, int k);

CoverCount cover_count(Point p, const std::vector<Disk>& disks, double tol);

CoverageVerdict is_k_covered(const Window& w, const std::vector<Disk>& disks, int k, double tol);

/// Disks B(x_i, (t - s_i)^+) of a growth configuration at time t.
std::vector<Disk> disks_at_time(const GrowthConfiguration& g, double t);
/// Disks B(p_i, r Y_i).
std::vector<Disk> disks_at_scale(const MarkedPointSet& pts, double r);

// ---------------------------------------------------------------------------
// Grid oracles

/// A coverage field Xi together with its Lipschitz constant.
class OracleField {
 public:
  static OracleField jm(const GrowthConfiguration& g);
  static OracleField spbm(const MarkedPointSet& pts, int k);
  /// Xi(x) = k-th smallest |x - c_i| / r_i; the disks k-cover w iff max Xi <= 1.
  static OracleField disks(const std::vector<Disk>& disks, int k, int dim = 2);

  double operator()(Point x) const;
  double lipschitz() const { return lipschitz_; }
  int dim() const { return dim_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double lipschitz_ = 1.0;
  int dim_ = 2;
};

/// Certified bracket [max over samples, + L h sqrt(d)/2] for max_{x in w} Xi.
/// Every point of w lies within h sqrt(d)/2 of some sample point in w
/// (cell centres, boundary projections of outside centres, corners).
CertifiedInterval grid_oracle_max(const OracleField& field, const Window& w, double h);
/// Single-threaded reference implementation of grid_oracle_max.
CertifiedInterval grid_oracle_max_serial(const OracleField& field, const Window& w, double h);

/// Grid argmax of the field with the same sample set as grid_oracle_max.
Point grid_oracle_argmax(const OracleField& field, const Window& w, double h);

// ---------------------------------------------------------------------------
// Thresholds and cover times

struct ThresholdResult {
  double value = 0.0;
  std::optional<CertifiedInterval> oracle;
  /// Set when an oracle was requested: value lies in the oracle interval
  /// (widened by the bisection tolerance).
  std::optional<bool> oracle_consistent;
};

ThresholdResult coverage_threshold(const Window& w, const MarkedPointSet& pts, int k, double tol,
                                   double oracle_h = 0.0);

/// Cover time of w. Throws InsufficientHalo when the result exceeds the
/// horizon the seeds were sampled to.
double jm_cover_time(const Window& w, const GrowthConfiguration& g, double tol);
ThresholdResult jm_cover_time_checked(const Window& w, const GrowthConfiguration& g, double tol,
                                      double oracle_h);

/// A point whose Xi is within 10 tol of the maximum ("last location covered").
Point last_covered_point(const Window& w, const GrowthConfiguration& g, double tol);
Point last_covered_point(const Window& w, const MarkedPointSet& pts, int k, double tol);

// ---------------------------------------------------------------------------
// Coverage probabilities

struct ProportionEstimate {
  long long successes = 0;
  long long trials = 0;
  double p = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

ProportionEstimate wilson_interval(long long successes, long long trials, double z = 1.959963984540054);

struct JmModel {
  double rho = 0.0;
  double t = 0.0;
};
struct SpbmModel {
  double n = 0.0;
  RadiusLaw law = RadiusLaw::constant(1.0);
  double r = 0.0;
  int k = 1;
};
using CoverageModel = std::variant<JmModel, SpbmModel>;

/// One replication: sample the model and test coverage of w.
bool sample_coverage_event(const Window& w, const CoverageModel& model, bool restricted, RngSpec rng);

ProportionEstimate coverage_probability_estimate(const Window& w, const CoverageModel& model, bool restricted,
                                                 long long reps, std::uint64_t master_seed, int threads = 0);

}  // namespace jmcover
