#pragma once

// Closed forms: unit-ball volumes, the limit-law constants, limiting CDFs
// F(beta) = exp(-sum_j a_j exp(-beta / s_j)), standardization maps, the
// radius schedule r_n, Gumbel/TCEV variables and the Chiu-consistency
// transforms.

#include <optional>
#include <string>
#include <vector>

#include "jmcover/processes.hpp"

namespace jmcover {

/// Limit theorems, named by the CLI ids in parentheses.
enum class Theorem {
  jm_unrestricted,        // 1228a: rho-standardized unrestricted J-M
  jm_unrestricted_tau,    // ttaulim: L-standardized unrestricted J-M
  jm_polygon,             // 0322b: restricted J-M in a polygon, d = 2
  jm_polygon_tau,         // taulim
  jm_smooth,              // Tlim3d: restricted J-M, smooth boundary, d >= 3
  jm_smooth_tau,          // taulim3d
  spbm_polygon,           // 0128a: k-coverage of a polygon by a restricted SPBM, d = 2
  spbm_smooth,            // 0128b: k-coverage of a smooth region, d >= 2
  spbm_unrestricted,      // 0315b: unrestricted SPBM
};

Theorem parse_theorem(const std::string& id);
std::string theorem_id(Theorem t);
/// The limiting CDF written out, for reports.
std::string theorem_formula(Theorem t);
std::vector<Theorem> all_theorems();
bool is_tau_form(Theorem t);
bool is_spbm(Theorem t);

struct ModelSpec {
  int d = 2;
  int k = 1;
  double area = 1.0;
  double perimeter = 4.0;
  std::optional<RadiusLaw> law;

  /// E[Y^m]; 1 when no law is set.
  double moment(int m) const;
};

struct LimitTerm {
  double coeff = 0.0;  // a_j
  double scale = 1.0;  // s_j
};

class LimitLaw {
 public:
  LimitLaw(Theorem which, ModelSpec spec, std::vector<LimitTerm> terms);

  double log_cdf(double beta) const;
  double cdf(double beta) const;
  double operator()(double beta) const { return cdf(beta); }
  double quantile(double p) const;
  double sample(Engine& eng) const;

  Theorem which() const { return which_; }
  const ModelSpec& spec() const { return spec_; }
  const std::vector<LimitTerm>& terms() const { return terms_; }

 private:
  Theorem which_;
  ModelSpec spec_;
  std::vector<LimitTerm> terms_;
};

double omega(int d);
double log_omega(int d);
double c_d(int d);
double log_c_d(int d);
/// c_{d,k}; cross-checked internally against the Gamma-function form.
double c_dk(int d, int k);
/// Gamma-function form of c_{d,1}, times (1 - 1/d)^{k-1} / (k-1)!.
double c_dk_explicit(int d, int k);
double c_prime_d(int d);
/// c'_d through c_{d,1}, as it appears when the cover-time limit is
/// assembled from the k-coverage theorem.
double c_prime_d_via_cd1(int d);
double c_dkY(const ModelSpec& spec);

LimitLaw limit_cdf(Theorem which, const ModelSpec& spec);

/// beta-value of a raw cover time (J-M theorems) given rho or L.
double standardize(double value, double scale, Theorem which, int d);
/// Same, also covering the SPBM theorems (scale n, value R).
double standardize(double value, double scale, Theorem which, const ModelSpec& spec);
/// Inverse of standardize in the raw value.
double destandardize(double beta, double scale, Theorem which, const ModelSpec& spec);

double rn_schedule(double n, const ModelSpec& spec, double beta);

double gumbel_cdf(double x);
double gumbel_sample(Engine& eng);
/// max(3(G + log|A|) - log 4pi, 6(G' + log|dA|) - log 4pi^4).
double tcev_sample(double area, double perimeter, Engine& eng);

double chiu_c(double L, int d);
double chiu_transform(double tau, double L, int d);
double chiu_F(double u, int d);
/// tau solving the Chiu-standardized inequality at level u, minus tau solving
/// ours at the matching level.
double chiu_gap(double L, double u, int d);

}  // namespace jmcover
