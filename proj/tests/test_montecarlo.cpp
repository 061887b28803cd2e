#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "jmcover/error.hpp"
#include "jmcover/montecarlo.hpp"

using namespace jmcover;

namespace {

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "jmcover_test_montecarlo";
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.model = ModelKind::jm_restricted;
  c.scales = {100.0, 400.0};
  c.replications = 64;
  c.master_seed = 5;
  return c;
}

}  // namespace

TEST_CASE("model names round trip") {
  for (ModelKind m : {ModelKind::jm_restricted, ModelKind::jm_unrestricted, ModelKind::spbm_restricted,
                      ModelKind::spbm_unrestricted})
    CHECK(parse_model(model_name(m)) == m);
  CHECK(model_name(ModelKind::spbm_unrestricted) == "spbm_unrestricted");
  CHECK_THROWS_AS(parse_model("jm"), InvalidArgument);
  CHECK(is_jm(ModelKind::jm_unrestricted));
  CHECK(!is_restricted(ModelKind::jm_unrestricted));
  CHECK(is_restricted(ModelKind::spbm_restricted));
}

TEST_CASE("replications do not depend on threads") {
  ExperimentConfig c = small_config();
  c.model = ModelKind::jm_unrestricted;
  const auto serial = run_replications(c, 1, nullptr, false);
  c.threads = 1;
  const auto one = run_replications(c, 1);
  c.threads = 4;
  const auto four = run_replications(c, 1);
  CHECK(serial == one);
  CHECK(serial == four);
  ExperimentConfig b = small_config();
  b.model = ModelKind::spbm_unrestricted;
  b.law = RadiusLaw::uniform(1.0);
  b.threads = 3;
  CHECK(run_replications(b, 0) == run_replications(b, 0, nullptr, false));
}

TEST_CASE("unrestricted values never exceed restricted ones") {
  const Window w = Window::disc({0.5, 0.5}, 0.45);
  const double tol = default_bisection_tol(w);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const RngSpec rng{21, s};
    const double tr = simulate_jm_cover_time(w, 300.0, true, rng, tol);
    const double tu = simulate_jm_cover_time(w, 300.0, false, rng, tol);
    CHECK(tu <= tr + 2 * tol);
    const double rr = simulate_spbm_threshold(w, 200.0, RadiusLaw::uniform(1.0), 1, true, rng, tol);
    const double ru = simulate_spbm_threshold(w, 200.0, RadiusLaw::uniform(1.0), 1, false, rng, tol);
    CHECK(ru <= rr + 2 * tol);
  }
  CHECK_THROWS_AS(simulate_spbm_threshold(w, 50.0, RadiusLaw::exponential(1.0), 1, false, RngSpec{}, tol),
                  InvalidArgument);
}

TEST_CASE("returned configurations reproduce the cover time") {
  const Window w = Window::unit_square();
  const double tol = default_bisection_tol(w);
  int extended = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    GrowthConfiguration g;
    ReplicationStats st;
    const double T = simulate_jm_cover_time(w, 1000.0, true, RngSpec{22, s}, tol, &st, 0.0, &g);
    CHECK(T <= g.seeds.horizon);
    CHECK(jm_cover_time(w, g, tol) == doctest::Approx(T).epsilon(1e-12));
    if (st.horizon_extensions > 0) ++extended;
    MarkedPointSet pts;
    const double R = simulate_spbm_threshold(w, 300.0, RadiusLaw::pareto(1.5), 2, true, RngSpec{22, s}, tol, &pts);
    CHECK(coverage_threshold(w, pts, 2, tol).value == doctest::Approx(R).epsilon(1e-12));
  }
  // The first horizon is a high quantile: extensions are the exception.
  CHECK(extended < 40);
}

TEST_CASE("initial horizon grows as the intensity falls") {
  const Window w = Window::unit_square();
  CHECK(initial_horizon(w, 100.0) > initial_horizon(w, 1e4));
  CHECK(initial_horizon(w, 1e4) > 0.0);
  CHECK(initial_horizon(w.scaled(2.0), 1e3) > initial_horizon(w, 1e3));
  CHECK_THROWS_AS(initial_horizon(w, 0.0), InvalidArgument);
}

TEST_CASE("one-sample KS against hand values") {
  const LimitLaw law = limit_cdf(Theorem::jm_polygon, ModelSpec{});
  CHECK(ks_distance({law.quantile(0.5)}, law) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(ks_distance({law.quantile(0.2)}, law) == doctest::Approx(0.8).epsilon(1e-9));
  std::vector<double> q;
  const int n = 400;
  for (int i = 1; i <= n; ++i) q.push_back(law.quantile((i - 0.5) / n));
  CHECK(ks_distance(q, law) == doctest::Approx(0.5 / n).epsilon(1e-6));
  CHECK_THROWS_AS(ks_distance({}, law), InvalidArgument);
}

TEST_CASE("two-sample KS against hand values") {
  CHECK(ks_two_sample({1, 2, 3}, {2.5}) == doctest::Approx(2.0 / 3.0));
  CHECK(ks_two_sample({1, 2, 3}, {3, 2, 1}) == 0.0);
  CHECK(ks_two_sample({0, 0}, {1, 1}) == 1.0);
  CHECK(ks_two_sample({1, 1, 2}, {1, 2, 2}) == doctest::Approx(1.0 / 3.0));
  // c(0.05) = sqrt(-ln(0.025) / 2) = 1.3581
  CHECK(ks_critical_value(100, 100, 0.05) == doctest::Approx(1.358102 * std::sqrt(0.02)).epsilon(1e-6));
  CHECK_THROWS_AS(ks_critical_value(10, 10, 1.5), InvalidArgument);
}

TEST_CASE("experiment config JSON round trip") {
  ExperimentConfig c;
  c.model = ModelKind::spbm_unrestricted;
  c.window = Window::disc({0.5, 0.5}, 0.45);
  c.scales = {100, 200};
  c.k = 2;
  c.law = RadiusLaw::pareto(2.5, 0.25);
  c.replications = 17;
  c.master_seed = 1234567890123ULL;
  c.tol = 1e-8;
  c.standardization = Theorem::spbm_smooth;
  c.compare = {Theorem::spbm_polygon, Theorem::spbm_unrestricted};
  c.oracle_h = 0.01;
  c.threads = 3;
  c.output_path = "x.csv";
  const ExperimentConfig d = ExperimentConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  CHECK(d.law == c.law);
  CHECK(d.master_seed == c.master_seed);
  CHECK(ExperimentConfig::from_json(nlohmann::json::object()).to_json() == ExperimentConfig{}.to_json());
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"k", "two"}}), InvalidArgument);
}

TEST_CASE("config validation") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.scales = {400, 100};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.k = 2;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.model = ModelKind::spbm_unrestricted;
  c.law = RadiusLaw::exponential(1.0);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.window = Window::box({1, 1, 1});
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.model = ModelKind::spbm_restricted;
  c.oracle_h = 0.05;
  CHECK_THROWS_AS(c.validate(), UnsupportedDimension);
  CHECK(small_config().standardization_or_default() == Theorem::jm_polygon);
  CHECK(small_config().compare_or_default().size() == 2);
}

TEST_CASE("experiments persist and load exactly") {
  ExperimentConfig c = small_config();
  c.replications = 30;
  const ExperimentResult r = run_cover_time_experiment(c);
  REQUIRE(r.summaries.size() == 2);
  for (const auto& s : r.summaries) {
    CHECK(s.replicates.size() == 30);
    CHECK(std::is_sorted(s.values.begin(), s.values.end()));
    CHECK(s.ks.size() == 2);
    CHECK(s.ks_to(Theorem::jm_polygon) >= 0.0);
    CHECK(std::isnan(s.ks_to(Theorem::spbm_polygon)));
    for (const auto& rep : s.replicates)
      CHECK(rep.standardized == doctest::Approx(standardize(rep.raw, s.scale, Theorem::jm_polygon, c.model_spec())));
  }
  const auto path = scratch() / "exp.csv";
  persist(r, path);
  const ExperimentResult l = load(path);
  CHECK(l.config.to_json() == r.config.to_json());
  REQUIRE(l.summaries.size() == r.summaries.size());
  for (std::size_t i = 0; i < r.summaries.size(); ++i) {
    CHECK(l.summaries[i].replicates == r.summaries[i].replicates);
    CHECK(l.summaries[i].values == r.summaries[i].values);
    CHECK(l.summaries[i].ks == r.summaries[i].ks);
    CHECK(l.summaries[i].horizon_extensions == r.summaries[i].horizon_extensions);
  }
  // Same seed, same numbers.
  const ExperimentResult again = run_cover_time_experiment(c);
  CHECK(again.summaries[1].replicates == r.summaries[1].replicates);

  std::ofstream(scratch() / "bad.csv") << "a,b\n";
  std::ofstream(scratch() / "bad.csv.json") << R"({"schema_version": 99})";
  CHECK_THROWS_AS(load(scratch() / "bad.csv"), Error);
  CHECK_THROWS_AS(load(scratch() / "missing.csv"), Error);
  std::filesystem::remove_all(scratch());
}

TEST_CASE("small scaling and equivalence checks") {
  const TwoSampleReport s = scaling_lemma_test(2.0, Window::unit_square(), 400, 31);
  CHECK(s.a.size() == 400);
  CHECK(s.critical == doctest::Approx(ks_critical_value(400, 400, 0.01)));
  CHECK(s.pass);
  const PairedReport p = jm_spbm_equivalence_test(300.0, 0.3, Window::unit_square(), 1000, 32);
  CHECK(p.jm.trials == 1000);
  CHECK(p.spbm.trials == 1000);
  CHECK(p.jm.p > 0.05);
  CHECK(p.jm.p < 0.95);
  CHECK(p.pass);
  CHECK_THROWS_AS(scaling_lemma_test(1.0, Window::unit_square(), 10, 1), InvalidArgument);
  CHECK_THROWS_AS(jm_spbm_equivalence_test(100.0, 0.0, Window::unit_square(), 10, 1), InvalidArgument);
}
