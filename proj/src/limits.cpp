#include "jmcover/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jmcover/error.hpp"

namespace jmcover {

namespace {

constexpr double kPi = std::numbers::pi;

struct Entry {
  Theorem t;
  const char* id;
  const char* formula;
};

constexpr Entry kRegistry[] = {
    {Theorem::jm_unrestricted, "1228a", "exp(-c_d (d^d omega_d)^(-1/(d+1)) |A| e^(-beta/(d+1)))"},
    {Theorem::jm_unrestricted_tau, "ttaulim", "exp(-c_d (d^d omega_d)^(-1/(d+1)) |A| e^(-beta/(d+1)))"},
    {Theorem::jm_polygon, "0322b", "exp(-(4 pi)^(-1/3) |A| e^(-beta/3) - (2 pi^2)^(-1/3) |dA| e^(-beta/6))"},
    {Theorem::jm_polygon_tau, "taulim", "exp(-(4 pi)^(-1/3) |A| e^(-beta/3) - (2 pi^2)^(-1/3) |dA| e^(-beta/6))"},
    {Theorem::jm_smooth, "Tlim3d", "exp(-c'_d |dA| e^(-beta/(2d+2)))"},
    {Theorem::jm_smooth_tau, "taulim3d", "exp(-c'_d |dA| e^(-beta/(2d+2)))"},
    {Theorem::spbm_polygon, "0128a",
     "exp(-(E[Y]^2/E[Y^2]) 1{k=1} |A| e^(-beta) - (c_{2,k} E[Y] |dA| / E[Y^2]^(1/2)) e^(-beta/2))"},
    {Theorem::spbm_smooth, "0128b", "exp(-c_{d,k} (E[Y^(d-1)]^(d-1) / E[Y^d]^(d-2+1/d)) |dA| e^(-beta/2))"},
    {Theorem::spbm_unrestricted, "0315b", "exp(-(c_d E[Y^(d-1)]^d / ((k-1)! E[Y^d]^(d-1))) |A| e^(-beta))"},
};

const Entry& entry(Theorem t) {
  for (const auto& e : kRegistry)
    if (e.t == t) return e;
  throw InvalidArgument("unknown theorem");
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

void require_d(int d, int lo, const char* what) {
  if (d < lo) throw UnsupportedDimension(std::string(what) + " needs d >= " + std::to_string(lo));
}

// value -> a(scale) value^p - b(scale)
struct Affine {
  double a;
  int p;
  double b;
};

Affine standardization(double scale, Theorem which, const ModelSpec& spec) {
  if (!(scale > std::numbers::e)) throw InvalidArgument("standardization needs a scale parameter > e");
  const int d = spec.d;
  const double ls = std::log(scale), lls = std::log(ls);
  const double dd = d;
  switch (which) {
    case Theorem::jm_unrestricted:
      require_d(d, 1, "1228a");
      return {omega(d) * scale, d + 1, dd * ls + dd * dd * lls};
    case Theorem::jm_unrestricted_tau:
      require_d(d, 1, "ttaulim");
      return {omega(d), d + 1, dd * (dd + 1) * ls + dd * dd * lls + dd * dd * std::log(dd + 1)};
    case Theorem::jm_polygon:
      if (d != 2) throw UnsupportedDimension("0322b is a d = 2 result");
      return {kPi * scale, 3, 2 * ls + 4 * lls};
    case Theorem::jm_polygon_tau:
      if (d != 2) throw UnsupportedDimension("taulim is a d = 2 result");
      return {kPi, 3, 6 * ls + 4 * lls + std::log(81.0)};
    case Theorem::jm_smooth:
      require_d(d, 2, "Tlim3d");
      return {omega(d) * scale, d + 1, 2 * (dd - 1) * ls + 2 * dd * (dd - 1) * lls};
    case Theorem::jm_smooth_tau:
      require_d(d, 2, "taulim3d");
      return {omega(d), d + 1,
              2 * (dd * dd - 1) * ls + 2 * dd * (dd - 1) * lls + 2 * dd * (dd - 1) * std::log(dd + 1)};
    case Theorem::spbm_polygon:
    case Theorem::spbm_smooth: {
      if (which == Theorem::spbm_polygon && d != 2) throw UnsupportedDimension("0128a is a d = 2 result");
      require_d(d, 2, "0128b");
      const double ey = spec.moment(d);
      if (!std::isfinite(ey)) throw InfiniteMoment("E[Y^d] is infinite");
      return {scale * omega(d) * ey, d, (2 - 2 / dd) * ls + 2 * (dd + spec.k - 3 + 1 / dd) * lls};
    }
    case Theorem::spbm_unrestricted: {
      require_d(d, 1, "0315b");
      const double ey = spec.moment(d);
      if (!std::isfinite(ey)) throw InfiniteMoment("E[Y^d] is infinite");
      return {scale * omega(d) * ey, d, ls + (dd + spec.k - 2) * lls};
    }
  }
  throw InvalidArgument("unknown theorem");
}

std::vector<LimitTerm> polygon_jm_terms(const ModelSpec& s) {
  return {{std::pow(4 * kPi, -1.0 / 3.0) * s.area, 3.0}, {std::pow(2 * kPi * kPi, -1.0 / 3.0) * s.perimeter, 6.0}};
}

std::vector<LimitTerm> polygon_spbm_terms(const ModelSpec& s) {
  const double m1 = s.moment(1), m2 = s.moment(2);
  if (!std::isfinite(m2)) throw InfiniteMoment("E[Y^2] is infinite");
  if (!(m2 > 0.0)) throw InvalidArgument("E[Y^2] must be positive");
  std::vector<LimitTerm> t;
  t.push_back({s.k == 1 ? m1 * m1 / m2 * s.area : 0.0, 1.0});
  t.push_back({c_dk(2, s.k) * m1 / std::sqrt(m2) * s.perimeter, 2.0});
  return t;
}

}  // namespace

Theorem parse_theorem(const std::string& raw) {
  std::string id = raw;
  if (id.rfind("e:", 0) == 0) id = id.substr(2);
  for (const auto& e : kRegistry)
    if (id == e.id) return e.t;
  throw InvalidArgument("unknown theorem id '" + raw + "'");
}

std::string theorem_id(Theorem t) { return entry(t).id; }
std::string theorem_formula(Theorem t) { return entry(t).formula; }

std::vector<Theorem> all_theorems() {
  std::vector<Theorem> out;
  for (const auto& e : kRegistry) out.push_back(e.t);
  return out;
}

bool is_tau_form(Theorem t) {
  return t == Theorem::jm_unrestricted_tau || t == Theorem::jm_polygon_tau || t == Theorem::jm_smooth_tau;
}

bool is_spbm(Theorem t) {
  return t == Theorem::spbm_polygon || t == Theorem::spbm_smooth || t == Theorem::spbm_unrestricted;
}

double ModelSpec::moment(int m) const { return law ? law->moment(m) : 1.0; }

LimitLaw::LimitLaw(Theorem which, ModelSpec spec, std::vector<LimitTerm> terms)
    : which_(which), spec_(std::move(spec)), terms_(std::move(terms)) {}

double LimitLaw::log_cdf(double beta) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    if (t.coeff > 0.0) s += std::exp(std::log(t.coeff) - beta / t.scale);
  }
  return -s;
}

double LimitLaw::cdf(double beta) const { return std::exp(log_cdf(beta)); }

double LimitLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > p) lo *= 2.0;
  while (cdf(hi) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double LimitLaw::sample(Engine& eng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double p = u(eng);
  while (p <= 0.0) p = u(eng);
  return quantile(p);
}

double log_omega(int d) {
  if (d < 0) throw InvalidArgument("omega needs d >= 0");
  return 0.5 * d * std::log(kPi) - std::lgamma(1.0 + 0.5 * d);
}

double omega(int d) {
  if (d < 0) throw InvalidArgument("omega needs d >= 0");
  if (d == 0) return 1.0;
  return std::pow(kPi, 0.5 * d) / std::tgamma(1.0 + 0.5 * d);
}

double log_c_d(int d) {
  if (d < 1) throw InvalidArgument("c_d needs d >= 1");
  const double ratio = 0.5 * std::log(kPi) + std::lgamma(1.0 + 0.5 * d) - std::lgamma(0.5 * (d + 1));
  return -log_factorial(d) + (d - 1) * ratio;
}

double c_d(int d) { return std::exp(log_c_d(d)); }

namespace {

double log_c_dk_def(int d, int k) {
  const double dd = d;
  return log_c_d(d - 1) + (2 - dd - 1 / dd) * log_omega(d) + (2 * dd - 3) * log_omega(d - 1) +
         (1 - dd) * log_omega(d - 2) + (dd + k - 3 + 1 / dd) * std::log(1 - 1 / dd) +
         (-1 + 1 / dd) * std::log(2.0) - log_factorial(k - 1);
}

}  // namespace

double c_dk_explicit(int d, int k) {
  if (d < 2 || k < 1) throw InvalidArgument("c_{d,k} needs d >= 2, k >= 1");
  const double dd = d;
  const double log_cd1 = -log_factorial(d - 1) + (1 - dd) * std::log(2.0) +
                         (dd - 2 + 1 / dd) * std::log(dd - 1) + (dd / 2 - 1) * std::log(kPi) +
                         (1 - dd) * std::lgamma((dd + 1) / 2) + (dd - 1 + 1 / dd) * std::lgamma(dd / 2);
  return std::exp(log_cd1 + (k - 1) * std::log(1 - 1 / dd) - log_factorial(k - 1));
}

double c_dk(int d, int k) {
  if (d < 2 || k < 1) throw InvalidArgument("c_{d,k} needs d >= 2, k >= 1");
  const double v = std::exp(log_c_dk_def(d, k));
  const double check = c_dk_explicit(d, k);
  if (std::abs(v - check) > 1e-10 * std::abs(check))
    throw ConsistencyError("c_{d,k} forms disagree at d=" + std::to_string(d) + ", k=" + std::to_string(k));
  return v;
}

double c_prime_d(int d) {
  if (d < 2) throw InvalidArgument("c'_d needs d >= 2");
  const double dd = d;
  const double log_v = log_c_d(d - 1) + (2 * dd - 3) * log_omega(d - 1) - (dd - 1) * log_omega(d - 2) -
                       (dd - 1) * std::log(dd) +
                       (dd - 1) / (dd + 1) * (dd * std::log(dd - 1) - std::log(2.0) - dd * log_omega(d));
  return std::exp(log_v);
}

double c_prime_d_via_cd1(int d) {
  if (d < 2) throw InvalidArgument("c'_d needs d >= 2");
  const double dd = d;
  const double e = dd - 2 + 1 / dd;
  const double log_v = std::log(c_dk(d, 1)) + e * std::log(dd + 1) - (dd - 1) * std::log(dd) +
                       (1 - 1 / dd) / (dd + 1) * (std::log(2 * (dd - 1)) - log_omega(d)) +
                       e * std::log(dd / (dd + 1));
  return std::exp(log_v);
}

double c_dkY(const ModelSpec& spec) {
  const int d = spec.d;
  const double a = spec.moment(d - 1), b = spec.moment(d);
  if (!std::isfinite(a) || !std::isfinite(b)) throw InfiniteMoment("c_{d,k,Y} needs finite E[Y^(d-1)] and E[Y^d]");
  if (!(b > 0.0)) throw InvalidArgument("E[Y^d] must be positive");
  const double dd = d;
  return c_dk(d, spec.k) * std::pow(a, dd - 1) / std::pow(b, dd - 2 + 1 / dd);
}

LimitLaw limit_cdf(Theorem which, const ModelSpec& spec) {
  if (spec.k < 1) throw InvalidArgument("k must be at least 1");
  if (spec.area < 0.0 || spec.perimeter < 0.0) throw InvalidArgument("area and perimeter must be nonnegative");
  const int d = spec.d;
  const double dd = d;
  std::vector<LimitTerm> terms;
  switch (which) {
    case Theorem::jm_unrestricted:
    case Theorem::jm_unrestricted_tau:
      require_d(d, 1, theorem_id(which).c_str());
      terms.push_back(
          {std::exp(log_c_d(d) - (dd * std::log(dd) + log_omega(d)) / (dd + 1)) * spec.area, dd + 1});
      break;
    case Theorem::jm_polygon:
    case Theorem::jm_polygon_tau:
      if (d != 2) throw UnsupportedDimension(theorem_id(which) + " is a d = 2 result");
      terms = polygon_jm_terms(spec);
      break;
    case Theorem::jm_smooth:
    case Theorem::jm_smooth_tau:
      require_d(d, 2, theorem_id(which).c_str());
      if (d == 2) {
        terms = polygon_jm_terms(spec);
      } else {
        terms.push_back({c_prime_d(d) * spec.perimeter, 2 * dd + 2});
      }
      break;
    case Theorem::spbm_polygon:
      if (d != 2) throw UnsupportedDimension("0128a is a d = 2 result");
      terms = polygon_spbm_terms(spec);
      break;
    case Theorem::spbm_smooth:
      require_d(d, 2, "0128b");
      if (d == 2) {
        terms = polygon_spbm_terms(spec);
      } else {
        terms.push_back({c_dkY(spec) * spec.perimeter, 2.0});
      }
      break;
    case Theorem::spbm_unrestricted: {
      require_d(d, 1, "0315b");
      const double a = spec.moment(d - 1), b = spec.moment(d);
      if (!std::isfinite(a) || !std::isfinite(b)) throw InfiniteMoment("0315b needs finite E[Y^(d-1)] and E[Y^d]");
      const double coeff =
          std::exp(log_c_d(d) + dd * std::log(a) - log_factorial(spec.k - 1) - (dd - 1) * std::log(b));
      terms.push_back({coeff * spec.area, 1.0});
      break;
    }
  }
  return LimitLaw(which, spec, std::move(terms));
}

double standardize(double value, double scale, Theorem which, int d) {
  if (is_spbm(which)) throw InvalidArgument("Boolean-model standardization needs k and the radius law");
  ModelSpec spec;
  spec.d = d;
  return standardize(value, scale, which, spec);
}

double standardize(double value, double scale, Theorem which, const ModelSpec& spec) {
  const Affine a = standardization(scale, which, spec);
  return a.a * std::pow(value, a.p) - a.b;
}

double destandardize(double beta, double scale, Theorem which, const ModelSpec& spec) {
  const Affine a = standardization(scale, which, spec);
  return std::pow(std::max(0.0, (beta + a.b) / a.a), 1.0 / a.p);
}

double rn_schedule(double n, const ModelSpec& spec, double beta) {
  if (!(n > std::numbers::e)) throw InvalidArgument("r_n needs n > e");
  const int d = spec.d;
  require_d(d, 1, "r_n");
  const double ey = spec.moment(d);
  if (!std::isfinite(ey)) throw InfiniteMoment("r_n needs finite E[Y^d]");
  const double dd = d;
  const double ln = std::log(n);
  const double bracket = (2 - 2 / dd) * ln + 2 * (dd + spec.k - 3 + 1 / dd) * std::log(ln) + beta;
  return std::pow(std::max(0.0, bracket) / (n * omega(d) * ey), 1.0 / dd);
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double gumbel_sample(Engine& eng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double p = u(eng);
  while (p <= 0.0) p = u(eng);
  return -std::log(-std::log(p));
}

double tcev_sample(double area, double perimeter, Engine& eng) {
  const double g1 = gumbel_sample(eng);
  const double g2 = gumbel_sample(eng);
  const double a = area > 0.0 ? 3.0 * (g1 + std::log(area)) - std::log(4 * kPi) : -kInfinity;
  const double b = perimeter > 0.0 ? 6.0 * (g2 + std::log(perimeter)) - std::log(4 * std::pow(kPi, 4)) : -kInfinity;
  return std::max(a, b);
}

double chiu_c(double L, int d) {
  require_d(d, 1, "chiu");
  if (!(L > std::numbers::e)) throw InvalidArgument("L must exceed e");
  const double c = d * (d + 1.0) * std::log(L) - log_omega(d);
  if (!(c > 1.0)) throw InvalidArgument("L too small: c(L) <= 1");
  return c;
}

double chiu_transform(double tau, double L, int d) {
  const double c = chiu_c(L, d);
  const double dd = d;
  return std::pow(c, dd / (dd + 1)) * std::pow(omega(d), 1 / (dd + 1)) * tau - c -
         (std::log(c) / (dd + 1) + (dd - 1) * std::log((c + std::log(c)) / (dd + 1)));
}

double chiu_F(double u, int d) {
  const double dd = d;
  return std::exp(-c_d(d) * std::pow(dd + 1, dd - 1) * std::pow(dd, -dd) * std::exp(-u));
}

double chiu_gap(double L, double u, int d) {
  const double c = chiu_c(L, d);
  const double dd = d;
  const double slope = std::pow(c, dd / (dd + 1)) * std::pow(omega(d), 1 / (dd + 1));
  const double tau_chiu =
      (u + c + std::log(c) / (dd + 1) + (dd - 1) * std::log((c + std::log(c)) / (dd + 1))) / slope;
  const double level = (dd + 1) * u + dd * dd * std::log(dd) + std::log(dd + 1) - log_omega(d);
  const double rhs = dd * (dd + 1) * std::log(L) + dd * dd * std::log(std::log(L)) + level;
  if (!(rhs > 0.0)) throw InvalidArgument("L too small for this level");
  const double tau_ours = std::pow(rhs / omega(d), 1 / (dd + 1));
  return tau_chiu - tau_ours;
}

}  // namespace jmcover
