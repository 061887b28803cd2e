#include "jmcover/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "jmcover/coverage.hpp"
#include "jmcover/error.hpp"
#include "jmcover/limits.hpp"
#include "jmcover/montecarlo.hpp"
#include "jmcover/processes.hpp"
#include "jmcover/tessellation.hpp"

namespace jmcover::cli {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json number_or_null(const std::function<double()>& f) {
  try {
    const double v = f();
    return std::isfinite(v) ? json(v) : json(nullptr);
  } catch (const Error&) {
    return nullptr;
  }
}

// Keys of a --config file mirror the long flag names. The file is expanded
// into flags ahead of parsing, skipping any flag given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (sub == args.size() && !args[i].empty() && args[i][0] != '-') sub = i;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || sub == args.size()) return args;
  std::ifstream f(path);
  if (!f) throw CLI::ValidationError("--config", "cannot read " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", "not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw CLI::ValidationError("--config", "must hold a JSON object");
  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& e : value) joined += (joined.empty() ? "" : ",") + text(e);
      extra.push_back(flag);
      extra.push_back(joined);
    } else {
      extra.push_back(flag);
      extra.push_back(text(value));
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, args.end());
  return out;
}

template <typename F>
CLI::Validator checked(std::string name, F parse) {
  return CLI::Validator(
      [parse](std::string& s) -> std::string {
        try {
          parse(s);
          return {};
        } catch (const std::exception& e) {
          return e.what();
        }
      },
      "", std::move(name));
}

const CLI::Validator kWindowCheck = checked("WINDOW", [](const std::string& s) { parse_window(s); });
const CLI::Validator kLawCheck = checked("LAW", [](const std::string& s) { RadiusLaw::parse(s); });
const CLI::Validator kTheoremCheck = checked("THEOREM", [](const std::string& s) { parse_theorem(s); });
const CLI::Validator kGridCheck = checked("GRID", [](const std::string& s) { parse_beta_grid(s); });
const CLI::Validator kOracleCheck = checked("ORACLE", [](const std::string& s) { parse_oracle(s); });
const CLI::Validator kModelCheck = checked("MODEL", [](const std::string& s) { parse_model(s); });
const CLI::Validator kFinite = checked("FLOAT", [](const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("not a finite number: " + s);
});

struct Options {
  std::string window = "square";
  double rho = 0.0;
  std::vector<double> rhos;
  double n = 0.0;
  std::vector<double> ns;
  double t = 0.0;
  double r = 0.0;
  int k = 1;
  std::string law = "constant:1";
  bool law_given = false;
  std::optional<double> beta;
  std::string beta_grid;
  std::string theorem;
  std::string standardization;
  std::vector<std::string> compare;
  double area = 1.0;
  double perimeter = 4.0;
  int d = 2;
  long long reps = 1000;
  std::uint64_t seed = 1;
  int threads = 0;
  double tol = 0.0;
  std::string out;
  std::string format;
  int resolution = 512;
  std::string oracle = "off";
  bool unrestricted = false;
  std::string input;
  std::string model = "jm_restricted";
  std::string mode = "jm";
  double L = 3.0;
  std::vector<double> Ls = {1e3, 1e4, 1e6, 1e8};
  std::vector<double> us = {-2.0, 0.0, 2.0};
  std::vector<int> ds = {2, 3};
  double alpha = 0.01;
};

struct Builder {
  CLI::App* app;
  Options& o;

  Builder& window() {
    app->add_option("--window", o.window,
                    "observation window: square | disc | triangle | lshape | cube, inline JSON or a JSON file "
                    "(lengths in window units)")
        ->check(kWindowCheck)
        ->capture_default_str();
    return *this;
  }
  Builder& rho(bool required) {
    auto* opt = app->add_option("--rho", o.rho, "seed intensity (seeds per unit volume per unit time)")
                    ->check(CLI::PositiveNumber & kFinite);
    if (required) opt->required();
    return *this;
  }
  Builder& n(bool required) {
    auto* opt = app->add_option("--n", o.n, "grain intensity (points per unit volume)")
                    ->check(CLI::PositiveNumber & kFinite);
    if (required) opt->required();
    return *this;
  }
  Builder& t(const std::string& what, bool required) {
    auto* opt = app->add_option("--t", o.t, what)->check(CLI::PositiveNumber & kFinite);
    if (required) opt->required();
    return *this;
  }
  Builder& k() {
    app->add_option("--k", o.k, "coverage multiplicity (count, >= 1)")->check(CLI::Range(1, 1000))->capture_default_str();
    return *this;
  }
  Builder& law() {
    app->add_option("--law", o.law,
                    "radius law: constant:c | uniform:b | exp:rate | pareto:alpha[,xm] (radii in window units)")
        ->check(kLawCheck)
        ->capture_default_str();
    return *this;
  }
  Builder& seed() {
    app->add_option("--seed", o.seed, "master seed (unsigned 64-bit integer)")->capture_default_str();
    return *this;
  }
  Builder& threads() {
    app->add_option("--threads", o.threads, "worker threads (count, 0 = machine parallelism)")
        ->check(CLI::Range(0, 4096))
        ->capture_default_str();
    return *this;
  }
  Builder& tol() {
    app->add_option("--tol", o.tol, "bisection tolerance (window units, 0 = 1e-7 x diameter)")
        ->check(CLI::NonNegativeNumber & kFinite)
        ->capture_default_str();
    return *this;
  }
  Builder& reps(long long def) {
    o.reps = def;
    app->add_option("--reps", o.reps, "replications (count)")->check(CLI::Range(1LL, 1000000000LL))->capture_default_str();
    return *this;
  }
  Builder& out(const std::string& what, bool required = false) {
    auto* opt = app->add_option("--out", o.out, what);
    if (required) opt->required();
    return *this;
  }
  Builder& format(const std::string& def) {
    o.format = def;
    app->add_option("--format", o.format, "output format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    return *this;
  }
  Builder& oracle() {
    app->add_option("--oracle", o.oracle, "certified grid oracle: off | grid:h (spacing h in window units)")
        ->check(kOracleCheck)
        ->capture_default_str();
    return *this;
  }
  Builder& unrestricted(const std::string& what) {
    app->add_flag("--unrestricted", o.unrestricted, what);
    return *this;
  }
  Builder& dim() {
    app->add_option("--d", o.d, "dimension (integer)")->check(CLI::Range(1, 100000))->capture_default_str();
    return *this;
  }
};

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& desc) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->add_option("--config")->type_name("FILE")->description("JSON file whose keys mirror these flags; flags on the command line win");
  return sub;
}

struct Io {
  const Options& o;
  std::ostream& out;
  std::ostream& err;

  void emit(const std::string& text) const {
    if (o.out.empty()) {
      out << text;
      return;
    }
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write " + o.out);
    f << text;
    if (!f) throw Error("failed writing " + o.out);
  }
  void summary(const std::string& line) const { (o.out.empty() ? err : out) << line << '\n'; }
};

std::string json_or_csv(const Options& o, const json& j, const std::vector<std::string>& cols) {
  if (o.format == "json") return j.dump(2) + "\n";
  std::ostringstream s;
  for (std::size_t i = 0; i < cols.size(); ++i) s << (i ? "," : "") << cols[i];
  s << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const json& v = j.at(cols[i]);
    s << (i ? "," : "");
    if (v.is_number_float()) {
      s << fmt(v.get<double>());
    } else if (v.is_string()) {
      s << v.get<std::string>();
    } else {
      s << v.dump();
    }
  }
  s << '\n';
  return s.str();
}

double effective_tol(const Options& o, const Window& w) { return o.tol > 0.0 ? o.tol : default_bisection_tol(w); }

json interval_json(const CertifiedInterval& ci) {
  return {{"lower", ci.lower}, {"upper", ci.upper}, {"lipschitz", ci.lipschitz_used}, {"h", ci.grid_spacing}};
}

int run_constants(const Options& o, const Io& io) {
  json j{{"d", o.d},
         {"k", o.k},
         {"omega_d", number_or_null([&] { return omega(o.d); })},
         {"c_d", number_or_null([&] { return c_d(o.d); })},
         {"c_dk", number_or_null([&] { return c_dk(o.d, o.k); })},
         {"c_prime_d", number_or_null([&] { return c_prime_d(o.d); })}};
  io.emit(json_or_csv(o, j, {"d", "k", "omega_d", "c_d", "c_dk", "c_prime_d"}));
  io.summary("constants d=" + std::to_string(o.d) + " k=" + std::to_string(o.k) + " c_d=" + j["c_d"].dump() +
             " c_dk=" + j["c_dk"].dump());
  return kExitOk;
}

int run_limit_cdf(const Options& o, const Io& io) {
  if (!o.beta && o.beta_grid.empty()) throw CLI::ValidationError("--beta or --beta-grid is required");
  ModelSpec spec{o.d, o.k, o.area, o.perimeter, std::nullopt};
  if (o.law_given) spec.law = RadiusLaw::parse(o.law);
  const Theorem th = parse_theorem(o.theorem);
  const LimitLaw F = limit_cdf(th, spec);
  std::vector<double> betas;
  if (o.beta) betas.push_back(*o.beta);
  if (!o.beta_grid.empty()) {
    const auto g = parse_beta_grid(o.beta_grid).values();
    betas.insert(betas.end(), g.begin(), g.end());
  }
  std::ostringstream s;
  if (o.format == "csv") {
    s << "beta,F\n";
    for (double b : betas) s << fmt(b) << ',' << fmt(F(b)) << '\n';
  } else {
    json rows = json::array();
    for (double b : betas) rows.push_back({{"beta", b}, {"F", F(b)}});
    json j{{"theorem", theorem_id(th)}, {"formula", theorem_formula(th)}, {"values", rows}};
    s << j.dump(2) << '\n';
  }
  io.emit(s.str());
  io.summary("limit-cdf " + theorem_id(th) + ": " + std::to_string(betas.size()) + " points, F(" +
             short_fmt(betas.front()) + ")=" + short_fmt(F(betas.front())) + " F(" + short_fmt(betas.back()) +
             ")=" + short_fmt(F(betas.back())));
  return kExitOk;
}

int run_simulate_jm(const Options& o, const Io& io) {
  const Window w = parse_window(o.window);
  const RngSpec rng{o.seed, 0};
  MarkedPointSet s = sample_spacetime_poisson(w, o.rho, o.t, rng.child(0));
  std::size_t halo = 0;
  if (o.unrestricted) {
    const MarkedPointSet h = sample_halo(w, o.rho, o.t, rng.child(1));
    halo = h.size();
    s.append(h);
  }
  s.window = w;
  s.horizon = o.t;
  if (!o.out.empty()) write_marked_points(s, o.out);
  io.summary("simulate-jm: " + std::to_string(s.size() - halo) + " seeds in the window, " + std::to_string(halo) +
             " outside, birth times up to " + short_fmt(o.t));
  return kExitOk;
}

MarkedPointSet sample_spbm(const Options& o, const Window& w, const RadiusLaw& law) {
  const RngSpec rng{o.seed, 0};
  MarkedPointSet s = sample_marked_poisson(w, o.n, law, rng.child(0));
  if (o.unrestricted) {
    if (!law.bounded()) throw InvalidArgument("unrestricted Boolean model needs a bounded radius law");
    if (!(o.r > 0.0)) throw InvalidArgument("unrestricted sampling needs --r > 0");
    s.append(sample_marked_ring(w, o.n, law, o.r * law.support_max(), rng.child(1)));
  }
  s.window = w;
  return s;
}

int run_simulate_spbm(const Options& o, const Io& io) {
  const Window w = parse_window(o.window);
  const MarkedPointSet s = sample_spbm(o, w, RadiusLaw::parse(o.law));
  if (!o.out.empty()) write_marked_points(s, o.out);
  io.summary("simulate-spbm: " + std::to_string(s.size()) + " grains, law " + RadiusLaw::parse(o.law).to_string());
  return kExitOk;
}

int run_threshold(const Options& o, const Io& io) {
  const Window w0 = parse_window(o.window);
  const double h = parse_oracle(o.oracle);
  json j;
  double value = 0.0;
  if (!o.input.empty()) {
    const MarkedPointSet pts = read_marked_points(o.input);
    const double tol = effective_tol(o, pts.window);
    const ThresholdResult res = coverage_threshold(pts.window, pts, o.k, tol, h);
    value = res.value;
    j["points"] = pts.size();
    if (res.oracle) j["oracle"] = interval_json(*res.oracle);
    if (res.oracle_consistent) j["oracle_consistent"] = *res.oracle_consistent;
  } else {
    if (!(o.n > 0.0)) throw CLI::ValidationError("--n or --input is required");
    const RadiusLaw law = RadiusLaw::parse(o.law);
    const double tol = effective_tol(o, w0);
    MarkedPointSet pts;
    value = simulate_spbm_threshold(w0, o.n, law, o.k, !o.unrestricted, RngSpec{o.seed, 0}, tol, &pts);
    j["points"] = pts.size();
    if (h > 0.0) {
      if (o.unrestricted) throw InvalidArgument("the grid oracle check covers restricted thresholds");
      const CertifiedInterval ci = grid_oracle_max(OracleField::spbm(pts, o.k), w0, h);
      j["oracle"] = interval_json(ci);
      j["oracle_consistent"] = ci.contains(value, tol);
    }
  }
  j["R"] = std::isfinite(value) ? json(value) : json(nullptr);
  j["k"] = o.k;
  j["seed"] = o.seed;
  if (o.format == "json") {
    io.emit(j.dump(2) + "\n");
  } else {
    io.emit("R\n" + fmt(value) + "\n");
  }
  std::string line = "threshold R=" + fmt(value);
  if (j.contains("oracle_consistent")) line += j["oracle_consistent"].get<bool>() ? " (oracle: consistent)" : " (oracle: INCONSISTENT)";
  io.summary(line);
  return kExitOk;
}

int run_cover_time(const Options& o, const Io& io) {
  const double h = parse_oracle(o.oracle);
  json j;
  double T = 0.0;
  Window w = parse_window(o.window);
  int extensions = 0;
  if (!o.input.empty()) {
    GrowthConfiguration g;
    g.seeds = read_marked_points(o.input);
    g.restricted = !o.unrestricted;
    w = g.seeds.window;
    const double tol = effective_tol(o, w);
    if (h > 0.0) {
      const ThresholdResult res = jm_cover_time_checked(w, g, tol, h);
      T = res.value;
      j["oracle"] = interval_json(*res.oracle);
      j["oracle_consistent"] = *res.oracle_consistent;
    } else {
      T = jm_cover_time(w, g, tol);
    }
  } else {
    if (!(o.rho > 0.0)) throw CLI::ValidationError("--rho or --input is required");
    const double tol = effective_tol(o, w);
    ReplicationStats stats;
    GrowthConfiguration g;
    T = simulate_jm_cover_time(w, o.rho, !o.unrestricted, RngSpec{o.seed, 0}, tol, &stats, w.dim() == 3 ? h : 0.0, &g);
    extensions = stats.horizon_extensions;
    if (h > 0.0 && w.dim() == 2) {
      const CertifiedInterval ci = grid_oracle_max(OracleField::jm(g), w, h);
      j["oracle"] = interval_json(ci);
      j["oracle_consistent"] = ci.contains(T, tol);
    }
    const Theorem th = w.dim() == 2 ? (o.unrestricted ? Theorem::jm_unrestricted : Theorem::jm_polygon)
                                    : (o.unrestricted ? Theorem::jm_unrestricted : Theorem::jm_smooth);
    j["standardized"] = standardize(T, o.rho, th, w.dim());
    j["standardization"] = theorem_id(th);
    j["rho"] = o.rho;
  }
  j["T"] = T;
  j["seed"] = o.seed;
  j["horizon_extensions"] = extensions;
  if (o.format == "json") {
    io.emit(j.dump(2) + "\n");
  } else {
    io.emit("T\n" + fmt(T) + "\n");
  }
  std::string line = "cover-time T=" + fmt(T);
  if (j.contains("oracle_consistent")) line += j["oracle_consistent"].get<bool>() ? " (oracle: consistent)" : " (oracle: INCONSISTENT)";
  io.summary(line);
  return kExitOk;
}

int run_experiment(const Options& o, const Io& io) {
  ExperimentConfig cfg;
  cfg.model = parse_model(o.model);
  cfg.window = parse_window(o.window);
  cfg.scales = is_jm(cfg.model) ? o.rhos : o.ns;
  if (cfg.scales.empty()) {
    throw CLI::ValidationError(is_jm(cfg.model) ? "--rho is required for growth models" : "--n is required for Boolean models");
  }
  cfg.k = o.k;
  cfg.law = RadiusLaw::parse(o.law);
  cfg.replications = o.reps;
  cfg.master_seed = o.seed;
  cfg.tol = o.tol;
  if (!o.standardization.empty()) cfg.standardization = parse_theorem(o.standardization);
  for (const auto& c : o.compare) cfg.compare.push_back(parse_theorem(c));
  cfg.oracle_h = parse_oracle(o.oracle);
  cfg.threads = o.threads;
  cfg.output_path = o.out;
  cfg.validate();
  const ExperimentResult res = run_cover_time_experiment(cfg);
  persist(res, o.out);
  std::ostringstream line;
  line << "experiment " << model_name(cfg.model) << ": " << res.summaries.size() << " scales x " << cfg.replications
       << " reps in " << short_fmt(res.wall_seconds) << " s;";
  for (const auto& s : res.summaries) {
    line << " [" << short_fmt(s.scale);
    for (const auto& e : s.ks) line << ' ' << e.theorem << "=" << short_fmt(e.ks);
    line << ']';
  }
  io.out << line.str() << '\n';
  return kExitOk;
}

int run_scaling_test(const Options& o, const Io& io) {
  const Window w = parse_window(o.window);
  const TwoSampleReport r = scaling_lemma_test(o.L, w, o.reps, o.seed, !o.unrestricted, o.alpha, o.threads);
  json j{{"L", o.L}, {"reps", o.reps}, {"ks", r.ks}, {"critical", r.critical}, {"alpha", o.alpha}, {"pass", r.pass}};
  if (o.format == "json") {
    io.emit(j.dump(2) + "\n");
  } else {
    std::ostringstream s;
    s << "sample,value\n";
    for (double v : r.a) s << "scaled," << fmt(v) << '\n';
    for (double v : r.b) s << "unit_intensity," << fmt(v) << '\n';
    io.emit(s.str());
  }
  io.summary(std::string("scaling-test ") + (r.pass ? "PASS" : "FAIL") + ": KS=" + short_fmt(r.ks) +
             " critical=" + short_fmt(r.critical));
  return kExitOk;
}

int run_equivalence_test(const Options& o, const Io& io) {
  const Window w = parse_window(o.window);
  const PairedReport r = jm_spbm_equivalence_test(o.rho, o.t, w, o.reps, o.seed, o.threads);
  auto prop = [](const ProportionEstimate& e) {
    return json{{"successes", e.successes}, {"trials", e.trials}, {"p", e.p}, {"lo", e.lo}, {"hi", e.hi}};
  };
  json j{{"rho", o.rho}, {"t", o.t}, {"jm", prop(r.jm)}, {"spbm", prop(r.spbm)},
         {"difference", r.difference}, {"z", r.z}, {"pass", r.pass}};
  if (o.format == "json") {
    io.emit(j.dump(2) + "\n");
  } else {
    io.emit("p_jm,p_spbm,difference,z,pass\n" + fmt(r.jm.p) + "," + fmt(r.spbm.p) + "," + fmt(r.difference) + "," +
            fmt(r.z) + "," + (r.pass ? "true" : "false") + "\n");
  }
  io.summary(std::string("equivalence-test ") + (r.pass ? "PASS" : "FAIL") + ": p_jm=" + short_fmt(r.jm.p) +
             " p_spbm=" + short_fmt(r.spbm.p) + " z=" + short_fmt(r.z));
  return kExitOk;
}

int run_chiu_check(const Options& o, const Io& io) {
  std::ostringstream s;
  json rows = json::array();
  bool decreasing = true;
  if (o.format == "csv") s << "d,u,L,gap,chiu_F\n";
  for (int d : o.ds) {
    for (double u : o.us) {
      double prev = kInfinity;
      for (double L : o.Ls) {
        const double gap = chiu_gap(L, u, d);
        const double F = chiu_F(u, d);
        decreasing = decreasing && std::abs(gap) < prev;
        prev = std::abs(gap);
        if (o.format == "csv") {
          s << d << ',' << fmt(u) << ',' << fmt(L) << ',' << fmt(gap) << ',' << fmt(F) << '\n';
        } else {
          rows.push_back({{"d", d}, {"u", u}, {"L", L}, {"gap", gap}, {"chiu_F", F}});
        }
      }
    }
  }
  if (o.format == "json") s << json{{"rows", rows}, {"gap_decreasing", decreasing}}.dump(2) << '\n';
  io.emit(s.str());
  io.summary(std::string("chiu-check: |gap| ") + (decreasing ? "decreases" : "does NOT decrease") +
             " along L in every row");
  return kExitOk;
}

int run_tessellate(const Options& o, const Io& io) {
  const Window w = parse_window(o.window);
  const double tol = effective_tol(o, w);
  const RngSpec rng{o.seed, 0};
  MarkedPointSet pts;
  std::optional<Point> star;
  CellMode mode;
  std::string what;
  if (o.mode == "jm") {
    if (!(o.rho > 0.0)) throw CLI::ValidationError("--rho is required for --mode jm");
    mode = CellMode::jm;
    GrowthConfiguration g;
    if (o.t > 0.0) {
      g.seeds = sample_spacetime_poisson(w, o.rho, o.t, rng.child(0));
      g.seeds.window = w;
    } else {
      const double T = simulate_jm_cover_time(w, o.rho, true, rng, tol, nullptr, 0.0, &g);
      star = last_covered_point(w, g, tol);
      what = " T=" + fmt(T);
    }
    pts = g.seeds;
  } else {
    if (!(o.n > 0.0)) throw CLI::ValidationError("--n is required for --mode spbm");
    mode = CellMode::spbm;
    const double R = simulate_spbm_threshold(w, o.n, RadiusLaw::parse(o.law), 1, true, rng, tol, &pts);
    if (std::isfinite(R)) star = last_covered_point(w, pts, 1, tol);
    what = " R=" + fmt(R);
  }
  const CellRaster raster = assign_cells(w, pts, mode, o.resolution);
  const RenderOutput r = render(raster, w, pts, star, o.out);
  io.out << "tessellate: " << pts.size() << " generators, " << r.coloring.palette.size() << " colours," << what
         << " -> " << r.ppm.string() << ", " << r.svg.string() << '\n';
  return kExitOk;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

}  // namespace

Window parse_window(const std::string& text) {
  const std::string s = trim(text);
  if (s == "square") return Window::unit_square();
  if (s == "disc") return Window::disc({0.5, 0.5, 0.0}, 0.45);
  if (s == "triangle") return Window::polygon({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  if (s == "lshape") return Window::polygon({{0, 0, 0}, {1, 0, 0}, {1, 0.5, 0}, {0.5, 0.5, 0}, {0.5, 1, 0}, {0, 1, 0}});
  if (s == "cube") return Window::box({1.0, 1.0, 1.0});
  json j;
  try {
    if (!s.empty() && s.front() == '{') {
      j = json::parse(s);
    } else if (std::filesystem::is_regular_file(s)) {
      std::ifstream f(s);
      j = json::parse(f);
    } else {
      throw InvalidArgument("unknown window '" + s + "' (expected a builtin name, inline JSON or a JSON file)");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("window JSON: " + std::string(e.what()));
  }
  return Window::from_json(j);
}

std::vector<double> BetaGrid::values() const {
  std::vector<double> v;
  const long long count = static_cast<long long>(std::floor((to - from) / step + 1e-9));
  for (long long i = 0; i <= count; ++i) v.push_back(from + static_cast<double>(i) * step);
  return v;
}

BetaGrid parse_beta_grid(const std::string& text) {
  BetaGrid g;
  char c1 = 0, c2 = 0;
  std::istringstream s(text);
  if (!(s >> g.from >> c1 >> g.to >> c2 >> g.step) || c1 != ':' || c2 != ':' || !(s >> std::ws).eof()) {
    throw InvalidArgument("grid must be a:b:step, got '" + text + "'");
  }
  if (!std::isfinite(g.from) || !std::isfinite(g.to) || !(g.step > 0.0) || g.to < g.from) {
    throw InvalidArgument("grid needs finite a <= b and step > 0");
  }
  if ((g.to - g.from) / g.step > 1e7) throw InvalidArgument("grid has more than 1e7 points");
  return g;
}

double parse_oracle(const std::string& text) {
  if (text == "off") return 0.0;
  if (text.rfind("grid:", 0) == 0) {
    std::size_t pos = 0;
    double h = 0.0;
    try {
      h = std::stod(text.substr(5), &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == text.size() - 5 && h > 0.0 && std::isfinite(h)) return h;
  }
  throw InvalidArgument("oracle must be off or grid:h with h > 0, got '" + text + "'");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::unique_ptr<Options>> store;
  CLI::App app("Johnson-Mehl cover times and Boolean-model coverage thresholds", "jmcover");
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", git_describe());

  using Handler = int (*)(const Options&, const Io&);
  std::map<CLI::App*, std::pair<Handler, Options*>> handlers;

  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "constants", "Unit-ball volumes and limit-law constants");
    Builder{s, o}.dim().k().format("json").out("output file (default: stdout)");
    handlers[s] = {run_constants, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "limit-cdf", "Evaluate a limiting CDF on a beta grid");
    s->add_option("--theorem", o.theorem,
                  "limit theorem id: 1228a | ttaulim | 0322b | taulim | Tlim3d | taulim3d | 0128a | 0128b | 0315b")
        ->required()
        ->check(kTheoremCheck);
    s->add_option("--beta", o.beta, "single standardized level beta (dimensionless)")->check(kFinite);
    s->add_option("--beta-grid", o.beta_grid, "grid of levels a:b:step (dimensionless)")->check(kGridCheck);
    Builder{s, o}.dim().k();
    s->add_option("--area", o.area, "window volume |A| (window units^d)")
        ->check(CLI::PositiveNumber & kFinite)
        ->capture_default_str();
    s->add_option("--perimeter", o.perimeter, "boundary measure |dA| (window units^(d-1))")
        ->check(CLI::NonNegativeNumber & kFinite)
        ->capture_default_str();
    s->add_option("--law", o.law,
                  "radius law for Boolean-model theorems: constant:c | uniform:b | exp:rate | pareto:alpha[,xm]")
        ->check(kLawCheck)
        ->each([&o](const std::string&) { o.law_given = true; });
    Builder{s, o}.format("csv").out("output file (default: stdout)");
    handlers[s] = {run_limit_cdf, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "simulate-jm", "Sample space-time seeds of the growth model");
    Builder{s, o}.window().rho(true).t("largest birth time (time units)", true).seed().unrestricted(
        "also sample the seeds outside the window that reach it by --t");
    Builder{s, o}.out("points CSV (x,y[,z],birth_time) plus a JSON sidecar");
    handlers[s] = {run_simulate_jm, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "simulate-spbm", "Sample a radius-marked Poisson process");
    Builder{s, o}.window().n(true).law().seed().unrestricted("also sample grains outside the window");
    s->add_option("--r", o.r, "scale r bounding the reach r * max radius of outside grains (window units)")
        ->check(CLI::PositiveNumber & kFinite);
    Builder{s, o}.out("points CSV (x,y[,z],radius) plus a JSON sidecar");
    handlers[s] = {run_simulate_spbm, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "threshold", "Coverage threshold R of a Boolean model");
    Builder{s, o}.window().n(false).law().k().seed().tol().oracle().unrestricted(
        "include grains outside the window (bounded laws only)");
    s->add_option("--input", o.input, "points CSV written by simulate-spbm instead of sampling");
    Builder{s, o}.format("json").out("output file (default: stdout)");
    handlers[s] = {run_threshold, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "cover-time", "Cover time T of the growth model");
    Builder{s, o}.window().rho(false).seed().tol().oracle().unrestricted("unrestricted model (seeds outside the window)");
    s->add_option("--input", o.input, "seeds CSV written by simulate-jm instead of sampling");
    Builder{s, o}.format("json").out("output file (default: stdout)");
    handlers[s] = {run_cover_time, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "experiment", "Replicated cover times / thresholds with KS distances to limit laws");
    s->add_option("--model", o.model, "jm_restricted | jm_unrestricted | spbm_restricted | spbm_unrestricted")
        ->check(kModelCheck)
        ->capture_default_str();
    Builder{s, o}.window();
    s->add_option("--rho", o.rhos, "seed intensities, comma separated (seeds per unit volume per unit time)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber & kFinite);
    s->add_option("--n", o.ns, "grain intensities, comma separated (points per unit volume)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber & kFinite);
    Builder{s, o}.k().law().reps(1000).seed().threads().tol().oracle();
    s->add_option("--standardization", o.standardization, "theorem id whose standardization is applied")
        ->check(kTheoremCheck);
    s->add_option("--compare", o.compare, "theorem ids to report KS distances against, comma separated")
        ->delimiter(',')
        ->check(kTheoremCheck);
    Builder{s, o}.out("CSV of replicates (scale,stream,raw_value,standardized_value) plus <out>.json", true);
    handlers[s] = {run_experiment, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "scaling-test", "Two-sample KS check of the space-time scaling relation");
    s->add_option("--L", o.L, "dilation factor L (dimensionless)")
        ->check(CLI::PositiveNumber & kFinite)
        ->capture_default_str();
    Builder{s, o}.window().reps(5000).seed().threads().unrestricted("unrestricted model");
    s->add_option("--alpha", o.alpha, "KS test level (probability)")
        ->check(CLI::Range(1e-9, 0.5))
        ->capture_default_str();
    Builder{s, o}.format("json").out("output file (default: stdout)");
    handlers[s] = {run_scaling_test, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "equivalence-test",
                         "Coverage probability of the growth model at time t vs the uniform-radius Boolean model");
    Builder{s, o}.window().rho(true).t("time t (time units)", true).reps(10000).seed().threads();
    Builder{s, o}.format("json").out("output file (default: stdout)");
    handlers[s] = {run_equivalence_test, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "chiu-check", "Gap between two cover-time standardizations along L");
    s->add_option("--L", o.Ls, "side lengths L, comma separated (window units)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber & kFinite)
        ->capture_default_str();
    s->add_option("--u", o.us, "levels u, comma separated (dimensionless)")
        ->delimiter(',')
        ->check(kFinite)
        ->capture_default_str();
    s->add_option("--d", o.ds, "dimensions, comma separated (integer)")
        ->delimiter(',')
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    Builder{s, o}.format("csv").out("output file (default: stdout)");
    handlers[s] = {run_chiu_check, &o};
  }
  {
    Options& o = *store.emplace_back(std::make_unique<Options>());
    auto* s = subcommand(app, "tessellate", "Raster cell picture (PPM + SVG) of one realization");
    s->add_option("--mode", o.mode, "jm | spbm")->check(CLI::IsMember({"jm", "spbm"}))->capture_default_str();
    Builder{s, o}.window().rho(false).n(false).law().seed().tol();
    s->add_option("--t", o.t, "draw seeds born up to t instead of up to the cover time (time units)")
        ->check(CLI::PositiveNumber & kFinite);
    s->add_option("--resolution", o.resolution, "pixels along the longer side (count, >= 16)")
        ->check(CLI::Range(16, 20000))
        ->capture_default_str();
    Builder{s, o}.out("output path; .ppm and .svg are written next to it", true);
    handlers[s] = {run_tessellate, &o};
  }

  try {
    const auto expanded = expand_config(args);
    std::vector<std::string> argv(expanded.rbegin(), expanded.rend());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (auto* s : app.get_subcommands()) target = s;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << git_describe() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    CLI::App* target = &app;
    for (auto* s : app.get_subcommands()) target = s;
    err << target->help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const auto [handler, opts] = handlers.at(sub);
  if (opts->threads > 0) omp_set_num_threads(opts->threads);
  try {
    return handler(*opts, Io{*opts, out, err});
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace jmcover::cli
