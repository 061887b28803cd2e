#pragma once

// Replicated cover-time / coverage-threshold experiments, KS comparisons
// with the limit laws, the scaling and J-M <-> Boolean-model checks, and
// CSV + JSON persistence.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jmcover/coverage.hpp"
#include "jmcover/limits.hpp"

namespace jmcover {

enum class ModelKind { jm_restricted, jm_unrestricted, spbm_restricted, spbm_unrestricted };

std::string model_name(ModelKind m);
ModelKind parse_model(const std::string& name);
bool is_jm(ModelKind m);
bool is_restricted(ModelKind m);

struct ExperimentConfig {
  ModelKind model = ModelKind::jm_restricted;
  Window window = Window::unit_square();
  std::vector<double> scales;  // rho (growth) or n (Boolean model)
  int k = 1;
  RadiusLaw law = RadiusLaw::constant(1.0);
  long long replications = 1000;
  std::uint64_t master_seed = 1;
  double tol = 0.0;  // 0: default bisection tolerance of the window
  /// Theorem whose standardization is applied; default depends on the model.
  std::optional<Theorem> standardization;
  /// Limit laws to report KS distances against; default depends on the model.
  std::vector<Theorem> compare;
  /// Grid spacing of the d = 3 oracle path (required there).
  double oracle_h = 0.0;
  int threads = 0;
  std::string output_path;

  void validate() const;
  Theorem standardization_or_default() const;
  std::vector<Theorem> compare_or_default() const;
  ModelSpec model_spec() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct Replicate {
  double scale = 0.0;
  std::uint64_t stream = 0;
  double raw = 0.0;
  double standardized = 0.0;
  friend bool operator==(const Replicate&, const Replicate&) = default;
};

struct KsEntry {
  std::string theorem;
  double ks = 0.0;
  friend bool operator==(const KsEntry&, const KsEntry&) = default;
};

struct EcdfSummary {
  double scale = 0.0;
  std::vector<Replicate> replicates;  // by stream index
  std::vector<double> values;         // standardized, sorted
  std::vector<KsEntry> ks;
  double wall_seconds = 0.0;
  long long horizon_extensions = 0;

  double ks_to(Theorem t) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EcdfSummary> summaries;
  double wall_seconds = 0.0;
  std::string git_describe;
};

struct ReplicationStats {
  int horizon_extensions = 0;
};

/// Cover time of one growth-model replication. The seed sample is grown
/// (never resampled) until it is complete up to the cover time.
double simulate_jm_cover_time(const Window& w, double rho, bool restricted, RngSpec rng, double tol,
                              ReplicationStats* stats = nullptr, double oracle_h = 0.0,
                              GrowthConfiguration* config_out = nullptr);
/// Coverage threshold of one Boolean-model replication.
double simulate_spbm_threshold(const Window& w, double n, const RadiusLaw& law, int k, bool restricted, RngSpec rng,
                               double tol, MarkedPointSet* pts_out = nullptr);
/// First sampling horizon: a high quantile of the restricted cover time.
double initial_horizon(const Window& w, double rho);

/// Raw values of every replication at cfg.scales[scale_index], by stream.
/// Replication i draws from stream i of the master seed.
std::vector<double> run_replications(const ExperimentConfig& cfg, std::size_t scale_index,
                                     long long* horizon_extensions = nullptr, bool parallel = true);
ExperimentResult run_cover_time_experiment(const ExperimentConfig& cfg);

/// sup |ECDF - F|; `sorted` must be ascending.
double ks_distance(const std::vector<double>& sorted, const LimitLaw& law);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic two-sample critical value at level alpha.
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

struct TwoSampleReport {
  std::vector<double> a;
  std::vector<double> b;
  double ks = 0.0;
  double critical = 0.0;
  bool pass = false;
};

/// L T_rho at rho = L^{d+1} on w versus tau_L (unit intensity) on L w.
TwoSampleReport scaling_lemma_test(double L, const Window& w, long long reps, std::uint64_t seed,
                                   bool restricted = true, double alpha = 0.01, int threads = 0);

struct PairedReport {
  ProportionEstimate jm;
  ProportionEstimate spbm;
  double difference = 0.0;
  double z = 0.0;
  bool pass = false;  // |z| < 3
};

/// P[w covered at t] for the restricted growth model at rho versus the
/// Boolean model with n = rho t and radii uniform on [0, t].
PairedReport jm_spbm_equivalence_test(double rho, double t, const Window& w, long long reps, std::uint64_t seed,
                                      int threads = 0);

void persist(const ExperimentResult& result, const std::filesystem::path& csv_path);
ExperimentResult load(const std::filesystem::path& csv_path);

inline constexpr int kSchemaVersion = 1;

std::string git_describe();

}  // namespace jmcover
