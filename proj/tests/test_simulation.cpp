#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dosepool/config.hpp"
#include "dosepool/error.hpp"
#include "dosepool/simulation.hpp"

using namespace dosepool;
namespace fs = std::filesystem;

namespace {

Scenario quick(double ed50_monthly, int n) {
  Scenario s = reference_scenario(ed50_monthly, n);
  s.sampler.iterations = 300;
  s.sampler.warmup = 150;
  s.replications = 3;
  return s;
}

std::string raw_text(const std::vector<ReplicationRecord>& records) {
  std::ostringstream os;
  write_raw_csv(os, records);
  return os.str();
}

std::string results_text(const std::vector<ScenarioResult>& results) {
  std::ostringstream os;
  write_results_csv(os, results);
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dosepool_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("noise-free trials reproduce the true curve") {
  Scenario s = reference_scenario(4.0, 5);
  s.sigma = 0.0;
  const TrialData d = generate_trial(s, 17);
  CHECK(d.observations.size() == 35);
  for (const auto& r : d.observations.rows) {
    CHECK(r.value == emax_response(s.truth[static_cast<std::size_t>(r.schedule_id)], r.dose));
  }
}

TEST_CASE("placebo arm mean") {
  Scenario s = reference_scenario(4.0, 1);
  s.arms = {{0, 0.0, 100000}, {0, 1.0, 1}};
  const TrialData d = generate_trial(s, 5);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : d.observations.rows) {
    if (r.dose != 0.0) continue;
    sum += r.value;
    ++n;
  }
  CHECK(n == 100000);
  CHECK(std::abs(sum / static_cast<double>(n) + 20.0) < 0.4);
}

TEST_CASE("trial generation is deterministic in the seed") {
  const Scenario s = reference_scenario(3.0, 30);
  const TrialData a = generate_trial(s, 99), b = generate_trial(s, 99), c = generate_trial(s, 100);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    same = same && a.observations.rows[i].value == b.observations.rows[i].value;
    differs = differs || a.observations.rows[i].value != c.observations.rows[i].value;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("reference grid has 27 scenarios on a 10-point evaluation grid") {
  const auto grid = reference_grid(200);
  CHECK(grid.size() == 27);
  std::set<std::string> ids;
  for (const auto& s : grid) ids.insert(s.id);
  CHECK(ids.size() == 27);
  const auto& g = grid.front().eval_grid;
  REQUIRE(g.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(g[i] == doctest::Approx(10.0 * static_cast<double>(i) / 9.0));
  CHECK(grid.front().arms.size() == 7);
  CHECK(grid.front().truth[0].ed50 == 2.0);
}

TEST_CASE("bundled ED50 grid scenario file matches the reference grid") {
  const auto file = load_scenarios(DOSEPOOL_SOURCE_DIR "/scenarios/paper_fig2.toml");
  REQUIRE(file.size() == 27);
  const auto grid = reference_grid(200);
  std::set<std::pair<double, int>> a, b;
  for (const auto& s : file) {
    CHECK(s.methods.size() == 4);
    CHECK(s.sigma == 35.0);
    CHECK(s.truth[0].e0 == -20.0);
    CHECK(s.truth[0].emax == -60.0);
    CHECK(s.truth[1].emax == -60.0);
    CHECK(s.truth[0].ed50 == 2.0);
    CHECK(s.bounds.lower == 0.001);
    CHECK(s.bounds.upper == 15.0);
    CHECK(s.arms.size() == 7);
    CHECK(s.eval_grid == grid.front().eval_grid);
    a.insert({s.truth[1].ed50, s.arms[0].n_planned});
  }
  for (const auto& s : grid) b.insert({s.truth[1].ed50, s.arms[0].n_planned});
  CHECK(a == b);
}

TEST_CASE("bundled Emax heterogeneity scenario file") {
  const auto file = load_scenarios(DOSEPOOL_SOURCE_DIR "/scenarios/paper_table4.toml");
  REQUIRE(file.size() == 3);
  std::vector<double> emax;
  for (const auto& s : file) {
    CHECK(s.pool_emax);
    CHECK(s.truth[1].ed50 == 4.0);
    CHECK(s.truth[0].emax == -60.0);
    CHECK(s.arms[0].n_planned == 45);
    emax.push_back(s.truth[1].emax);
  }
  CHECK(emax == std::vector<double>{-70.0, -60.0, -50.0});
}

TEST_CASE("scenario schema errors") {
  CHECK_THROWS_AS(parse_scenarios(parse_toml("bogus = 1\n")), InputError);
  CHECK_THROWS_AS(parse_scenarios(parse_toml("[axes]\nfoo = [1]\n")), InputError);
  CHECK_THROWS_AS(parse_scenarios(parse_toml("[axes]\n\"ed50.daily\" = [1]\n")), InputError);
  CHECK_THROWS_AS(parse_scenarios(parse_toml("methods = [\"magic\"]\n")), InputError);
  CHECK_THROWS_AS(parse_scenarios(parse_toml("[design]\nbounds = [0.0, 15.0]\n")), InputError);
  CHECK_THROWS_AS(parse_scenarios(parse_toml("[sampler]\nwarmup = 2000\niterations = 1000\n")), InputError);
  CHECK(parse_scenarios(parse_toml("name = \"one\"\n")).size() == 1);
}

TEST_CASE("metric definitions") {
  const std::vector<double> truth{1.0, 2.0, 3.0};
  MethodEstimate exact{truth, {0.5, 1.5, 2.5}, {1.5, 2.5, 3.5}};
  const auto m0 = evaluate_replication(exact, truth);
  CHECK(m0.mae == 0.0);
  CHECK(m0.coverage() == 1.0);

  MethodEstimate off;
  for (double t : truth) {
    off.estimate.push_back(t + 3.0);
    off.lower.push_back(t + 1.0);
    off.upper.push_back(t + 5.0);
  }
  const auto m = evaluate_replication(off, truth);
  CHECK(m.mae == 3.0);
  CHECK(m.coverage() == 0.0);
  CHECK(m.mean_length() == 4.0);
}

TEST_CASE("every method produces a band on the evaluation grid") {
  const Scenario s = quick(4.0, 30);
  const TrialData d = generate_trial(s, 3);
  for (Method m : {Method::CpFrequentist, Method::CpBayesian, Method::PpFixed, Method::PpRandom}) {
    const auto est = fit_method(m, s, d, 11);
    REQUIRE(est.estimate.size() == 10);
    for (std::size_t l = 0; l < 10; ++l) {
      CHECK(est.lower[l] <= est.estimate[l]);
      CHECK(est.estimate[l] <= est.upper[l]);
    }
  }
}

TEST_CASE("study output does not depend on the worker count") {
  const std::vector<Scenario> scenarios{quick(4.0, 30), quick(10.0, 30)};
  StudyConfig one;
  one.master_seed = 2024;
  StudyConfig eight = one;
  eight.workers = 8;
  const auto a = run_study(scenarios, one);
  const auto b = run_study(scenarios, eight);
  CHECK(a.records.size() == 2 * 3 * 4);
  CHECK(raw_text(a.records) == raw_text(b.records));
  CHECK(results_text(a.results) == results_text(b.results));
}

TEST_CASE("aggregates are plain means over the raw ledger") {
  const std::vector<Scenario> scenarios{quick(2.0, 30)};
  StudyConfig cfg;
  cfg.master_seed = 8;
  const auto out = run_study(scenarios, cfg);
  for (const auto& ms : out.results[0].methods) {
    double mae = 0.0, cov = 0.0, len = 0.0;
    std::size_t n = 0;
    for (const auto& r : out.records) {
      if (r.method != ms.method || !r.ok) continue;
      mae += r.mae;
      cov += r.coverage;
      len += r.length;
      ++n;
    }
    REQUIRE(n == ms.ok);
    CHECK(ms.mae == doctest::Approx(mae / n).epsilon(1e-14));
    CHECK(ms.coverage == doctest::Approx(cov / n).epsilon(1e-14));
    CHECK(ms.length == doctest::Approx(len / n).epsilon(1e-14));
    double mean_by_dose = 0.0;
    for (double c : ms.coverage_by_dose) mean_by_dose += c;
    CHECK(mean_by_dose / 10.0 == doctest::Approx(ms.coverage).epsilon(1e-12));
  }
}

TEST_CASE("a replication regenerates bit for bit from its ledger seed") {
  const std::vector<Scenario> scenarios{quick(6.0, 30)};
  StudyConfig cfg;
  cfg.master_seed = 77;
  const auto dir = scratch_dir("regen");
  cfg.out_dir = dir.string();
  run_study(scenarios, cfg);
  std::ifstream in(dir / "raw.csv");
  const auto ledger = read_raw_csv(in);
  REQUIRE(ledger.size() == 12);
  const auto& rec = ledger[5];
  const auto again = run_replication(scenarios[0], rec.replication, rec.seed);
  bool found = false;
  for (const auto& r : again) {
    if (r.method != rec.method) continue;
    found = true;
    CHECK(r.mae == rec.mae);
    CHECK(r.coverage == rec.coverage);
    CHECK(r.length == rec.length);
    CHECK(r.covered == rec.covered);
  }
  CHECK(found);
  CHECK(rec.seed == replication_seed(77, scenarios[0].id, rec.replication));
  fs::remove_all(dir);
}

TEST_CASE("an interrupted study resumes from its ledger") {
  const std::vector<Scenario> scenarios{quick(3.0, 30)};
  StudyConfig cfg;
  cfg.master_seed = 5;
  const auto dir = scratch_dir("resume");
  cfg.out_dir = dir.string();
  const auto full = run_study(scenarios, cfg);

  // keep the header, the first replication and a torn line
  std::ifstream in(dir / "raw.csv");
  std::string line, kept;
  for (int i = 0; i < 5 && std::getline(in, line); ++i) kept += line + "\n";
  in.close();
  kept += "ed50.monthly=3;emax.monthly=-60;n_per_arm=30,1,12";
  std::ofstream(dir / "raw.csv", std::ios::trunc) << kept;

  cfg.resume = true;
  const auto resumed = run_study(scenarios, cfg);
  CHECK(resumed.reused == 1);
  CHECK(raw_text(resumed.records) == raw_text(full.records));
  CHECK(results_text(resumed.results) == results_text(full.results));

  cfg.master_seed = 6;
  CHECK_THROWS_AS(run_study(scenarios, cfg), InputError);
  fs::remove_all(dir);
}

TEST_CASE("failed fits are counted, not dropped") {
  const Scenario s = quick(4.0, 30);
  std::vector<ReplicationRecord> recs;
  ReplicationRecord ok;
  ok.scenario = s.id;
  ok.method = Method::CpFrequentist;
  ok.ok = true;
  ok.mae = 2.0;
  ok.coverage = 0.5;
  ok.length = 3.0;
  ok.covered = "1111100000";
  ReplicationRecord bad = ok;
  bad.ok = false;
  bad.replication = 1;
  recs = {ok, bad};
  const std::vector<Scenario> one{s};
  const auto res = aggregate(one, recs);
  const auto& m = res[0].get(Method::CpFrequentist);
  CHECK(m.ok == 1);
  CHECK(m.failed == 1);
  CHECK(m.mae == 2.0);
  CHECK(std::isnan(res[0].get(Method::PpRandom).mae));
}
