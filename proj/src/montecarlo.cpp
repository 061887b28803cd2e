#include "jmcover/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "jmcover/error.hpp"

#ifndef JMCOVER_GIT_DESCRIBE
#define JMCOVER_GIT_DESCRIBE "unknown"
#endif

namespace jmcover {

using nlohmann::json;

namespace {

constexpr const char* kModelNames[] = {"jm_restricted", "jm_unrestricted", "spbm_restricted", "spbm_unrestricted"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path sidecar(const std::filesystem::path& csv) { return csv.string() + ".json"; }

}  // namespace

std::string git_describe() { return JMCOVER_GIT_DESCRIBE; }

std::string model_name(ModelKind m) { return kModelNames[static_cast<int>(m)]; }

ModelKind parse_model(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (name == kModelNames[i]) return static_cast<ModelKind>(i);
  throw InvalidArgument("unknown model '" + name + "'");
}

bool is_jm(ModelKind m) { return m == ModelKind::jm_restricted || m == ModelKind::jm_unrestricted; }
bool is_restricted(ModelKind m) { return m == ModelKind::jm_restricted || m == ModelKind::spbm_restricted; }

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (replications < 1) throw InvalidArgument("replications must be at least 1");
  if (scales.empty()) throw InvalidArgument("at least one scale is required");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0) || !std::isfinite(scales[i])) throw InvalidArgument("scales must be positive");
    if (i > 0 && !(scales[i] > scales[i - 1])) throw InvalidArgument("scales must be increasing");
  }
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (tol < 0.0) throw InvalidArgument("tol must be nonnegative");
  if (window.dim() == 3) {
    if (!is_jm(model)) throw UnsupportedDimension("d = 3 experiments are available for the growth model only");
    if (!(oracle_h > 0.0)) throw InvalidArgument("d = 3 experiments need a grid oracle spacing");
  }
  if (!is_jm(model) && !is_restricted(model) && !law.bounded())
    throw InvalidArgument("unrestricted Boolean model needs a bounded radius law");
  if (is_jm(model) && k != 1) throw InvalidArgument("growth-model cover times use k = 1");
}

Theorem ExperimentConfig::standardization_or_default() const {
  if (standardization) return *standardization;
  const int d = window.dim();
  switch (model) {
    case ModelKind::jm_restricted:
      return d == 2 ? Theorem::jm_polygon : Theorem::jm_smooth;
    case ModelKind::jm_unrestricted:
      return Theorem::jm_unrestricted;
    case ModelKind::spbm_restricted:
      return d == 2 ? Theorem::spbm_polygon : Theorem::spbm_smooth;
    case ModelKind::spbm_unrestricted:
      return Theorem::spbm_unrestricted;
  }
  return Theorem::jm_polygon;
}

std::vector<Theorem> ExperimentConfig::compare_or_default() const {
  if (!compare.empty()) return compare;
  if (is_jm(model)) {
    if (window.dim() == 2) return {Theorem::jm_polygon, Theorem::jm_unrestricted};
    return {Theorem::jm_smooth, Theorem::jm_unrestricted};
  }
  return {standardization_or_default()};
}

ModelSpec ExperimentConfig::model_spec() const {
  ModelSpec s;
  s.d = window.dim();
  s.k = k;
  s.area = window.area();
  s.perimeter = window.perimeter();
  if (!is_jm(model)) s.law = law;
  return s;
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = model_name(model);
  j["window"] = window.to_json();
  j["scales"] = scales;
  j["k"] = k;
  j["law"] = law.to_string();
  j["replications"] = replications;
  j["master_seed"] = master_seed;
  j["tol"] = tol;
  j["standardization"] = standardization ? json(theorem_id(*standardization)) : json(nullptr);
  std::vector<std::string> ids;
  for (auto t : compare) ids.push_back(theorem_id(t));
  j["compare"] = ids;
  j["oracle_h"] = oracle_h;
  j["threads"] = threads;
  j["output_path"] = output_path;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    if (j.contains("window")) c.window = Window::from_json(j.at("window"));
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<double>>();
    if (j.contains("k")) c.k = j.at("k").get<int>();
    if (j.contains("law")) c.law = RadiusLaw::parse(j.at("law").get<std::string>());
    if (j.contains("replications")) c.replications = j.at("replications").get<long long>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("tol")) c.tol = j.at("tol").get<double>();
    if (j.contains("standardization") && !j.at("standardization").is_null())
      c.standardization = parse_theorem(j.at("standardization").get<std::string>());
    if (j.contains("compare"))
      for (const auto& id : j.at("compare")) c.compare.push_back(parse_theorem(id.get<std::string>()));
    if (j.contains("oracle_h")) c.oracle_h = j.at("oracle_h").get<double>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("output_path")) c.output_path = j.at("output_path").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

double EcdfSummary::ks_to(Theorem t) const {
  const std::string id = theorem_id(t);
  for (const auto& e : ks)
    if (e.theorem == id) return e.ks;
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Single replications

double initial_horizon(const Window& w, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  const int d = w.dim();
  const double dd = d;
  const double len = std::pow(w.area(), 1.0 / dd);
  const double r = std::max(rho * std::pow(len, dd + 1), 16.0);
  const double lr = std::log(r);
  const double level = 2 * (dd - 1) * lr + 2 * dd * (dd - 1) * std::log(lr) + 40.0;
  return len * std::pow(level / (omega(d) * r), 1.0 / (dd + 1));
}

double simulate_jm_cover_time(const Window& w, double rho, bool restricted, RngSpec rng, double tol,
                              ReplicationStats* stats, double oracle_h, GrowthConfiguration* config_out) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (w.dim() == 3 && !(oracle_h > 0.0)) throw InvalidArgument("d = 3 cover times need a grid oracle spacing");
  double horizon = initial_horizon(w, rho);
  GrowthConfiguration g;
  g.restricted = restricted;
  g.seeds = sample_spacetime_poisson(w, rho, horizon, rng.child(0));
  if (!restricted) g.seeds.append(sample_halo(w, rho, horizon, rng.child(1)));
  g.seeds.window = w;
  g.seeds.horizon = horizon;
  for (std::uint64_t ext = 0;; ++ext) {
    if (w.dim() == 2) {
      try {
        const double T = jm_cover_time(w, g, tol);
        if (config_out) *config_out = std::move(g);
        return T;
      } catch (const InsufficientHalo&) {
      }
    } else {
      const CertifiedInterval ci = grid_oracle_max(OracleField::jm(g), w, oracle_h);
      if (ci.upper <= horizon) {
        if (config_out) *config_out = std::move(g);
        return 0.5 * (ci.lower + ci.upper);
      }
    }
    const double next = 1.3 * horizon;
    const RngSpec step = rng.child(2 + ext);
    g.seeds.append(sample_spacetime_poisson(w, rho, next, step.child(0), horizon));
    if (!restricted) g.seeds.append(sample_halo(w, rho, next, step.child(1), horizon));
    g.seeds.horizon = horizon = next;
    if (stats) ++stats->horizon_extensions;
  }
}

double simulate_spbm_threshold(const Window& w, double n, const RadiusLaw& law, int k, bool restricted, RngSpec rng,
                               double tol, MarkedPointSet* pts_out) {
  MarkedPointSet pts = sample_marked_poisson(w, n, law, rng.child(0));
  double r = coverage_threshold(w, pts, k, tol).value;
  if (restricted) {
    if (pts_out) *pts_out = std::move(pts);
    return r;
  }
  if (!law.bounded()) throw InvalidArgument("unrestricted Boolean model needs a bounded radius law");
  const double ymax = law.support_max();
  // Grains farther than `reach` from w cannot touch it at any scale up to
  // reach / ymax, so the threshold is exact once r * ymax <= reach.
  double reach = std::isfinite(r) ? r * ymax + tol : ymax * w.diameter();
  double sampled = 0.0;
  for (std::uint64_t step = 1;; ++step) {
    pts.append(sample_marked_ring(w, n, law, reach, rng.child(step), sampled));
    sampled = reach;
    r = coverage_threshold(w, pts, k, tol).value;
    if (std::isfinite(r) && r * ymax <= sampled) {
      if (pts_out) *pts_out = std::move(pts);
      return r;
    }
    reach *= 2.0;
  }
}

std::vector<double> run_replications(const ExperimentConfig& cfg, std::size_t scale_index,
                                     long long* horizon_extensions, bool parallel) {
  cfg.validate();
  const double scale = cfg.scales.at(scale_index);
  const Window& w = cfg.window;
  const double tol = cfg.tol > 0.0 ? cfg.tol : default_bisection_tol(w);
  const long long reps = cfg.replications;
  std::vector<double> out(static_cast<std::size_t>(reps));
  std::vector<std::string> errors(static_cast<std::size_t>(reps));
  long long ext_total = 0;
  auto one = [&](long long i) {
    const RngSpec rng = RngSpec{cfg.master_seed, static_cast<std::uint64_t>(i)}.child(scale_index);
    try {
      if (is_jm(cfg.model)) {
        ReplicationStats st;
        out[i] = simulate_jm_cover_time(w, scale, is_restricted(cfg.model), rng, tol, &st, cfg.oracle_h);
        return static_cast<long long>(st.horizon_extensions);
      }
      out[i] = simulate_spbm_threshold(w, scale, cfg.law, cfg.k, is_restricted(cfg.model), rng, tol);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
    return 0LL;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : ext_total) num_threads(thread_count(cfg.threads))
    for (long long i = 0; i < reps; ++i) ext_total += one(i);
  } else {
    for (long long i = 0; i < reps; ++i) ext_total += one(i);
  }
  for (long long i = 0; i < reps; ++i) {
    if (!errors[i].empty())
      throw Error("replication failed (master seed " + std::to_string(cfg.master_seed) + ", stream " +
                  std::to_string(i) + ", scale " + format_double(scale) + "): " + errors[i]);
  }
  if (horizon_extensions) *horizon_extensions = ext_total;
  return out;
}

ExperimentResult run_cover_time_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = cfg;
  res.git_describe = git_describe();
  const Theorem which = cfg.standardization_or_default();
  const ModelSpec spec = cfg.model_spec();
  std::vector<LimitLaw> laws;
  for (Theorem t : cfg.compare_or_default()) laws.push_back(limit_cdf(t, spec));
  for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
    const auto ts = std::chrono::steady_clock::now();
    EcdfSummary sum;
    sum.scale = cfg.scales[s];
    const auto raw = run_replications(cfg, s, &sum.horizon_extensions);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double z = standardize(raw[i], sum.scale, which, spec);
      sum.replicates.push_back({sum.scale, static_cast<std::uint64_t>(i), raw[i], z});
      sum.values.push_back(z);
    }
    std::sort(sum.values.begin(), sum.values.end());
    for (const auto& law : laws) sum.ks.push_back({theorem_id(law.which()), ks_distance(sum.values, law)});
    sum.wall_seconds = seconds_since(ts);
    res.summaries.push_back(std::move(sum));
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// Distribution comparisons

double ks_distance(const std::vector<double>& sorted, const LimitLaw& law) {
  if (sorted.empty()) throw InvalidArgument("ks_distance needs a nonempty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = law.cdf(sorted[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

TwoSampleReport scaling_lemma_test(double L, const Window& w, long long reps, std::uint64_t seed, bool restricted,
                                   double alpha, int threads) {
  if (!(L > 1.0)) throw InvalidArgument("L must exceed 1");
  if (reps < 1) throw InvalidArgument("reps must be at least 1");
  if (w.dim() != 2) throw UnsupportedDimension("the scaling check runs on planar windows");
  const double rho = std::pow(L, w.dim() + 1);
  const Window wl = w.scaled(L);
  const double tol = default_bisection_tol(w);
  TwoSampleReport rep;
  rep.a.resize(static_cast<std::size_t>(reps));
  rep.b.resize(static_cast<std::size_t>(reps));
  std::vector<std::string> errors(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count(threads))
  for (long long i = 0; i < reps; ++i) {
    const RngSpec rng{seed, static_cast<std::uint64_t>(i)};
    try {
      rep.a[i] = L * simulate_jm_cover_time(w, rho, restricted, rng.child(1), tol);
      rep.b[i] = simulate_jm_cover_time(wl, 1.0, restricted, rng.child(2), tol * L);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (long long i = 0; i < reps; ++i)
    if (!errors[i].empty()) throw Error("scaling replication " + std::to_string(i) + " failed: " + errors[i]);
  rep.ks = ks_two_sample(rep.a, rep.b);
  rep.critical = ks_critical_value(rep.a.size(), rep.b.size(), alpha);
  rep.pass = rep.ks < rep.critical;
  return rep;
}

PairedReport jm_spbm_equivalence_test(double rho, double t, const Window& w, long long reps, std::uint64_t seed,
                                      int threads) {
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  if (!(rho >= 0.0)) throw InvalidArgument("rho must be nonnegative");
  PairedReport r;
  r.jm = coverage_probability_estimate(w, JmModel{rho, t}, true, reps, seed, threads);
  r.spbm = coverage_probability_estimate(w, SpbmModel{rho * t, RadiusLaw::uniform(t), 1.0, 1}, true, reps,
                                         seed ^ 0x5bd1e995u, threads);
  r.difference = r.jm.p - r.spbm.p;
  const double na = static_cast<double>(r.jm.trials), nb = static_cast<double>(r.spbm.trials);
  const double pooled = (r.jm.successes + r.spbm.successes) / (na + nb);
  const double se = std::sqrt(pooled * (1 - pooled) * (1 / na + 1 / nb));
  r.z = se > 0.0 ? r.difference / se : 0.0;
  r.pass = std::abs(r.z) < 3.0;
  return r;
}

// ---------------------------------------------------------------------------
// Persistence

void persist(const ExperimentResult& result, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path.string());
  csv << "scale,stream,raw_value,standardized_value\n";
  json summaries = json::array();
  for (const auto& s : result.summaries) {
    for (const auto& r : s.replicates)
      csv << format_double(r.scale) << ',' << r.stream << ',' << format_double(r.raw) << ','
          << format_double(r.standardized) << '\n';
    json ks = json::array();
    for (const auto& e : s.ks) ks.push_back({{"theorem", e.theorem}, {"ks", e.ks}});
    summaries.push_back({{"scale", s.scale},
                         {"replications", s.replicates.size()},
                         {"ks", ks},
                         {"wall_seconds", s.wall_seconds},
                         {"horizon_extensions", s.horizon_extensions}});
  }
  if (!csv) throw Error("failed writing " + csv_path.string());
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["config"] = result.config.to_json();
  meta["seed"] = result.config.master_seed;
  meta["git_describe"] = result.git_describe;
  meta["wall_time_seconds"] = result.wall_seconds;
  meta["standardization"] = theorem_id(result.config.standardization_or_default());
  meta["summaries"] = summaries;
  std::ofstream js(sidecar(csv_path));
  if (!js) throw Error("cannot write " + sidecar(csv_path).string());
  js << meta.dump(2) << '\n';
}

ExperimentResult load(const std::filesystem::path& csv_path) {
  std::ifstream js(sidecar(csv_path));
  if (!js) throw Error("cannot read " + sidecar(csv_path).string());
  json meta;
  try {
    js >> meta;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed metadata: ") + e.what());
  }
  if (!meta.contains("schema_version") || meta.at("schema_version").get<int>() != kSchemaVersion)
    throw Error("schema version mismatch in " + sidecar(csv_path).string());
  ExperimentResult res;
  res.config = ExperimentConfig::from_json(meta.at("config"));
  res.git_describe = meta.value("git_describe", "");
  res.wall_seconds = meta.value("wall_time_seconds", 0.0);

  std::ifstream csv(csv_path);
  if (!csv) throw Error("cannot read " + csv_path.string());
  std::string line;
  std::getline(csv, line);
  if (line != "scale,stream,raw_value,standardized_value") throw Error("unexpected CSV header in " + csv_path.string());
  std::map<double, std::vector<Replicate>> by_scale;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f)
      if (!std::getline(ls, x, ',')) throw Error("short CSV row: " + line);
    Replicate r{std::strtod(f[0].c_str(), nullptr), std::stoull(f[1]), std::strtod(f[2].c_str(), nullptr),
                std::strtod(f[3].c_str(), nullptr)};
    by_scale[r.scale].push_back(r);
  }
  for (const auto& sj : meta.at("summaries")) {
    EcdfSummary s;
    s.scale = sj.at("scale").get<double>();
    s.replicates = by_scale[s.scale];
    for (const auto& r : s.replicates) s.values.push_back(r.standardized);
    std::sort(s.values.begin(), s.values.end());
    for (const auto& e : sj.at("ks")) s.ks.push_back({e.at("theorem").get<std::string>(), e.at("ks").get<double>()});
    s.wall_seconds = sj.value("wall_seconds", 0.0);
    s.horizon_extensions = sj.value("horizon_extensions", 0LL);
    res.summaries.push_back(std::move(s));
  }
  return res;
}

}  // namespace jmcover
