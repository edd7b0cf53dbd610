#include "dosepool/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dosepool/config.hpp"
#include "dosepool/error.hpp"
#include "dosepool/mle.hpp"
#include "dosepool/rng.hpp"
#include "dosepool/summaries.hpp"

namespace dosepool {

namespace fs = std::filesystem;

namespace {

constexpr Method kAllMethods[] = {Method::CpFrequentist, Method::CpBayesian, Method::PpFixed, Method::PpRandom};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t method_index(Method m) { return static_cast<std::size_t>(m); }

std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; }, ';');
  return s;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::CpFrequentist:
      return "cp-freq";
    case Method::CpBayesian:
      return "cp-bayes";
    case Method::PpFixed:
      return "pp-fe";
    case Method::PpRandom:
      return "pp-re";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods) {
    if (to_string(m) == text) return m;
  }
  throw InputError(fmt::format("unknown method '{}' (expected cp-freq|cp-bayes|pp-fe|pp-re)", text));
}

TrialDesign Scenario::design() const {
  TrialDesign d;
  d.schedules = schedules;
  d.arms = arms;
  d.reference_schedule_id = reference_schedule;
  return d;
}

std::vector<double> Scenario::true_curve() const {
  std::vector<double> f;
  for (double dose : eval_grid) f.push_back(emax_response(truth[static_cast<std::size_t>(eval_schedule)], dose));
  return f;
}

void Scenario::validate() const {
  design().validate();
  if (truth.size() != schedules.size()) throw InputError(fmt::format("scenario {}: truth per schedule missing", id));
  for (const auto& t : truth) {
    if (!(t.ed50 > 0.0)) throw InputError(fmt::format("scenario {}: true ED50 must be positive", id));
  }
  if (!(sigma >= 0.0)) throw InputError(fmt::format("scenario {}: sigma must be >= 0", id));
  if (replications < 0) throw InputError(fmt::format("scenario {}: negative replication count", id));
  if (methods.empty()) throw InputError(fmt::format("scenario {}: no methods", id));
  if (eval_grid.empty()) throw InputError(fmt::format("scenario {}: empty evaluation grid", id));
  if (eval_schedule < 0 || static_cast<std::size_t>(eval_schedule) >= schedules.size()) {
    throw InputError(fmt::format("scenario {}: unknown evaluation schedule", id));
  }
  if (!(bounds.lower > 0.0) || !(bounds.upper > bounds.lower)) {
    throw InputError(fmt::format("scenario {}: ED50 bounds must satisfy 0 < lower < upper", id));
  }
  sampler.validate();
}

Scenario reference_scenario(double ed50_monthly, int n_per_arm, double emax_monthly) {
  Scenario s;
  s.id = fmt::format("ed50.monthly={};emax.monthly={};n_per_arm={}", ed50_monthly, emax_monthly, n_per_arm);
  s.schedules = {{0, "biweekly", 336.0}, {1, "monthly", 672.0}};
  s.reference_schedule = 0;
  s.eval_schedule = 0;
  s.arms.push_back({0, 0.0, n_per_arm});
  for (int sched : {0, 1}) {
    for (double dose : {1.0, 3.0, 10.0}) s.arms.push_back({sched, dose, n_per_arm});
  }
  s.truth = {{-20.0, -60.0, 2.0}, {-20.0, emax_monthly, ed50_monthly}};
  s.sigma = 35.0;
  s.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
  s.eval_grid = linspace(0.0, 10.0, 10);
  s.bounds = {0.001, 15.0};
  s.sampler.chains = 2;
  s.sampler.iterations = 1500;
  s.sampler.warmup = 750;
  return s;
}

std::vector<Scenario> reference_grid(int replications) {
  std::vector<Scenario> out;
  for (double ed50 : {1.0, 2.0, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 10.0}) {
    for (int n : {30, 45, 60}) {
      out.push_back(reference_scenario(ed50, n));
      out.back().replications = replications;
    }
  }
  return out;
}

TrialData generate_trial(const Scenario& scenario, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0}));
  Observations obs;
  obs.kind = ObservationKind::PatientLevel;
  for (const auto& arm : scenario.arms) {
    const double f = emax_response(scenario.truth[static_cast<std::size_t>(arm.schedule_id)], arm.dose);
    for (int i = 0; i < arm.n_planned; ++i) {
      obs.rows.push_back({arm.schedule_id, arm.dose, f + scenario.sigma * rng.normal(), 0.0});
    }
  }
  return TrialData(scenario.design(), std::move(obs));
}

double ReplicationMetrics::coverage() const {
  return static_cast<double>(std::accumulate(covered.begin(), covered.end(), 0)) /
         static_cast<double>(covered.size());
}

double ReplicationMetrics::mean_length() const {
  return std::accumulate(length.begin(), length.end(), 0.0) / static_cast<double>(length.size());
}

ReplicationMetrics evaluate_replication(const MethodEstimate& fit, std::span<const double> truth) {
  const std::size_t L = truth.size();
  if (fit.estimate.size() != L || fit.lower.size() != L || fit.upper.size() != L) {
    throw InputError("estimate and truth grids differ in length");
  }
  ReplicationMetrics m;
  for (std::size_t l = 0; l < L; ++l) {
    m.mae += std::abs(truth[l] - fit.estimate[l]);
    m.covered.push_back(fit.lower[l] <= truth[l] && truth[l] <= fit.upper[l] ? 1 : 0);
    m.length.push_back(fit.upper[l] - fit.lower[l]);
  }
  m.mae /= static_cast<double>(L);
  return m;
}

MethodEstimate fit_method(Method method, const Scenario& scenario, const TrialData& data, std::uint64_t seed) {
  MethodEstimate est;
  const auto& eval = scenario.schedules[static_cast<std::size_t>(scenario.eval_schedule)];
  if (method == Method::CpFrequentist) {
    const MleFit fit = fit_mle(data, scenario.bounds);
    if (!fit.converged) throw FitFailure("maximum likelihood fit did not converge");
    std::vector<double> grid;
    for (double d : scenario.eval_grid) grid.push_back(convert_dose(d, eval, data.design.reference()));
    for (const auto& p : curve_ci(fit, grid)) {
      est.estimate.push_back(p.estimate);
      est.lower.push_back(p.lower);
      est.upper.push_back(p.upper);
    }
    return est;
  }
  Pooling ed50 = Pooling::Shared, emax = Pooling::Shared;
  if (method == Method::PpFixed) ed50 = Pooling::FixedEffects;
  if (method == Method::PpRandom) ed50 = Pooling::RandomEffects;
  if (scenario.pool_emax) emax = ed50;
  ModelSpec spec = ModelSpec::make(ed50, emax, data.design);
  spec.ed50_bounds = scenario.bounds;
  const Posterior posterior(spec, data);
  SamplerConfig cfg = scenario.sampler;
  cfg.seed = seed;
  cfg.store_pointwise = false;
  const PosteriorDraws draws = sample(posterior, cfg);
  for (const auto& b : curve_summary(draws, eval.label, scenario.eval_grid)) {
    est.estimate.push_back(b.median);
    est.lower.push_back(b.lower);
    est.upper.push_back(b.upper);
  }
  return est;
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::string_view scenario_id, int replication) {
  return derive_seed(master_seed, {fnv1a(scenario_id), static_cast<std::uint64_t>(replication)});
}

std::vector<ReplicationRecord> run_replication(const Scenario& scenario, int replication, std::uint64_t seed) {
  const TrialData data = generate_trial(scenario, seed);
  const auto truth = scenario.true_curve();
  std::vector<ReplicationRecord> out;
  for (Method m : scenario.methods) {
    ReplicationRecord r;
    r.scenario = scenario.id;
    r.replication = replication;
    r.seed = seed;
    r.method = m;
    try {
      const auto est = fit_method(m, scenario, data, derive_seed(seed, {method_index(m) + 1}));
      const auto metrics = evaluate_replication(est, truth);
      r.ok = true;
      r.mae = metrics.mae;
      r.coverage = metrics.coverage();
      r.length = metrics.mean_length();
      for (auto c : metrics.covered) r.covered += c ? '1' : '0';
    } catch (const Error& e) {
      r.ok = false;
      r.error = sanitize(e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

const MethodSummary& ScenarioResult::get(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw InputError(fmt::format("scenario {} has no results for {}", scenario, to_string(m)));
}

std::vector<ScenarioResult> aggregate(std::span<const Scenario> scenarios, std::span<const ReplicationRecord> records) {
  std::map<std::pair<std::string, Method>, std::vector<const ReplicationRecord*>> groups;
  for (const auto& r : records) groups[{r.scenario, r.method}].push_back(&r);
  std::vector<ScenarioResult> out;
  for (const auto& sc : scenarios) {
    ScenarioResult res;
    res.scenario = sc.id;
    for (Method m : sc.methods) {
      MethodSummary s;
      s.method = m;
      s.coverage_by_dose.assign(sc.eval_grid.size(), 0.0);
      const auto it = groups.find({sc.id, m});
      if (it != groups.end()) {
        for (const auto* r : it->second) {
          if (!r->ok) {
            ++s.failed;
            continue;
          }
          ++s.ok;
          s.mae += r->mae;
          s.coverage += r->coverage;
          s.length += r->length;
          for (std::size_t l = 0; l < r->covered.size() && l < s.coverage_by_dose.size(); ++l) {
            s.coverage_by_dose[l] += r->covered[l] == '1' ? 1.0 : 0.0;
          }
        }
      }
      const double n = static_cast<double>(s.ok);
      if (s.ok == 0) {
        s.mae = s.coverage = s.length = std::numeric_limits<double>::quiet_NaN();
      } else {
        s.mae /= n;
        s.coverage /= n;
        s.length /= n;
        for (auto& c : s.coverage_by_dose) c /= n;
      }
      res.methods.push_back(std::move(s));
    }
    out.push_back(std::move(res));
  }
  return out;
}

void write_raw_csv(std::ostream& os, std::span<const ReplicationRecord> records) {
  os << "scenario,replication,seed,method,status,mae,coverage,length,covered,error\n";
  for (const auto& r : records) {
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", r.scenario, r.replication, r.seed, to_string(r.method),
               r.ok ? "ok" : "failed", r.mae, r.coverage, r.length, r.covered, r.error);
  }
}

std::vector<ReplicationRecord> read_raw_csv(std::istream& is) {
  std::vector<ReplicationRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) continue;  // a torn final line from an interrupted run
    try {
      ReplicationRecord r;
      r.scenario = f[0];
      r.replication = std::stoi(f[1]);
      r.seed = std::stoull(f[2]);
      r.method = parse_method(f[3]);
      r.ok = f[4] == "ok";
      r.mae = std::stod(f[5]);
      r.coverage = std::stod(f[6]);
      r.length = std::stod(f[7]);
      r.covered = f[8];
      r.error = f[9];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InputError(fmt::format("raw ledger row {} is malformed", row));
    }
  }
  return out;
}

void write_results_csv(std::ostream& os, std::span<const ScenarioResult> results) {
  os << "scenario,method,replications_ok,replications_failed,mae,coverage,mean_length,coverage_by_dose\n";
  for (const auto& r : results) {
    for (const auto& m : r.methods) {
      fmt::print(os, "{},{},{},{},{},{},{},{}\n", r.scenario, to_string(m.method), m.ok, m.failed, m.mae, m.coverage,
                 m.length, fmt::join(m.coverage_by_dose, ";"));
    }
  }
}

StudyOutput run_study(std::span<const Scenario> scenarios, const StudyConfig& cfg) {
  std::set<std::string> ids;
  for (const auto& s : scenarios) {
    s.validate();
    if (!ids.insert(s.id).second) throw InputError(fmt::format("duplicate scenario id '{}'", s.id));
  }
  StudyOutput out;
  std::map<std::pair<std::string, int>, std::vector<ReplicationRecord>> done;

  const fs::path dir = cfg.out_dir;
  const fs::path raw_path = dir / "raw.csv";
  if (!cfg.out_dir.empty()) fs::create_directories(dir);
  if (cfg.resume && !cfg.out_dir.empty() && fs::exists(raw_path)) {
    std::ifstream in(raw_path);
    for (auto& r : read_raw_csv(in)) done[{r.scenario, r.replication}].push_back(std::move(r));
  }

  struct Task {
    std::size_t scenario;
    int replication;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    for (int rep = 0; rep < sc.replications; ++rep) {
      const auto it = done.find({sc.id, rep});
      if (it != done.end()) {
        std::set<Method> have;
        for (const auto& r : it->second) {
          if (r.seed != replication_seed(cfg.master_seed, sc.id, rep)) {
            throw InputError(fmt::format("resume ledger for {} replication {} was produced with a different seed",
                                         sc.id, rep));
          }
          have.insert(r.method);
        }
        if (std::all_of(sc.methods.begin(), sc.methods.end(), [&](Method m) { return have.count(m) > 0; })) {
          for (const auto& r : it->second) {
            if (std::count(sc.methods.begin(), sc.methods.end(), r.method)) out.records.push_back(r);
          }
          ++out.reused;
          continue;
        }
      }
      tasks.push_back({i, rep});
    }
  }

  std::ofstream ledger;
  if (!cfg.out_dir.empty()) {
    ledger.open(raw_path, std::ios::trunc);
    write_raw_csv(ledger, out.records);
    ledger.flush();
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t completed = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const auto& t = tasks[k];
      const auto& sc = scenarios[t.scenario];
      try {
        auto recs = run_replication(sc, t.replication, replication_seed(cfg.master_seed, sc.id, t.replication));
        std::lock_guard lock(mu);
        if (ledger.is_open()) {
          for (const auto& r : recs) {
            fmt::print(ledger, "{},{},{},{},{},{},{},{},{},{}\n", r.scenario, r.replication, r.seed,
                       to_string(r.method), r.ok ? "ok" : "failed", r.mae, r.coverage, r.length, r.covered, r.error);
          }
          ledger.flush();
        }
        for (auto& r : recs) out.records.push_back(std::move(r));
        ++completed;
        if (cfg.progress) cfg.progress(completed + out.reused, tasks.size() + out.reused);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < scenarios.size(); ++i) order[scenarios[i].id] = i;
  std::sort(out.records.begin(), out.records.end(), [&](const ReplicationRecord& a, const ReplicationRecord& b) {
    return std::tuple(order[a.scenario], a.replication, method_index(a.method)) <
           std::tuple(order[b.scenario], b.replication, method_index(b.method));
  });
  out.results = aggregate(scenarios, out.records);

  if (!cfg.out_dir.empty()) {
    ledger.close();
    const fs::path tmp = dir / "raw.csv.tmp";
    {
      std::ofstream os(tmp, std::ios::trunc);
      write_raw_csv(os, out.records);
    }
    fs::rename(tmp, raw_path);
    std::ofstream res(dir / "results.csv", std::ios::trunc);
    write_results_csv(res, out.results);
  }
  return out;
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw InputError(fmt::format("'{}' must be a table", where));
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError(fmt::format("unknown key '{}' in '{}'", key, where));
    }
  }
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw InputError(fmt::format("'{}' must be a number", what));
  return v.get<double>();
}

int schedule_index(const Scenario& s, const std::string& label, std::string_view what) {
  for (const auto& sc : s.schedules) {
    if (sc.label == label) return sc.id;
  }
  throw InputError(fmt::format("{}: unknown schedule '{}'", what, label));
}

// Applies a scalar setting such as "ed50.monthly" or "n_per_arm".
void apply_setting(Scenario& s, const std::string& key, double value) {
  if (key == "n_per_arm") {
    if (value < 1 || value != std::floor(value)) throw InputError("n_per_arm must be a positive integer");
    for (auto& a : s.arms) a.n_planned = static_cast<int>(value);
  } else if (key == "sigma") {
    s.sigma = value;
  } else if (key == "e0") {
    for (auto& t : s.truth) t.e0 = value;
  } else if (key == "emax") {
    for (auto& t : s.truth) t.emax = value;
  } else if (key.rfind("emax.", 0) == 0) {
    s.truth[static_cast<std::size_t>(schedule_index(s, key.substr(5), key))].emax = value;
  } else if (key.rfind("ed50.", 0) == 0) {
    s.truth[static_cast<std::size_t>(schedule_index(s, key.substr(5), key))].ed50 = value;
  } else {
    throw InputError(fmt::format("unknown scenario axis '{}'", key));
  }
}

}  // namespace

std::vector<Scenario> parse_scenarios(const json& doc) {
  try {
    check_keys(doc, "<root>", {"name", "replications", "methods", "design", "truth", "model", "evaluation", "sampler", "axes"});
    Scenario base;
    const json design = doc.value("design", json::object());
    check_keys(design, "design", {"schedules", "reference", "placebo_schedule", "doses", "n_per_arm", "bounds"});
    if (design.contains("schedules")) {
      for (const auto& s : design["schedules"]) {
        const auto label = s.at("label").get<std::string>();
        double hours = 0.0;
        if (s.contains("interval_hours")) {
          hours = number(s["interval_hours"], "interval_hours");
        } else if (auto h = interval_for_label(label)) {
          hours = *h;
        } else {
          throw InputError(fmt::format("schedule '{}' needs interval_hours", label));
        }
        base.schedules.push_back({static_cast<int>(base.schedules.size()), label, hours});
      }
    } else {
      base.schedules = {{0, "biweekly", 336.0}, {1, "monthly", 672.0}};
    }
    base.reference_schedule =
        schedule_index(base, design.value("reference", base.schedules.front().label), "design.reference");
    const int placebo =
        schedule_index(base, design.value("placebo_schedule", base.schedules[static_cast<std::size_t>(base.reference_schedule)].label),
                       "design.placebo_schedule");
    const int n = design.value("n_per_arm", 45);
    base.arms.push_back({placebo, 0.0, n});
    const std::vector<double> doses = design.value("doses", std::vector<double>{1.0, 3.0, 10.0});
    for (const auto& sc : base.schedules) {
      for (double d : doses) base.arms.push_back({sc.id, d, n});
    }
    if (design.contains("bounds")) {
      const auto b = design["bounds"].get<std::vector<double>>();
      if (b.size() != 2) throw InputError("design.bounds must be [lower, upper]");
      base.bounds = {b[0], b[1]};
    }

    const json truth = doc.value("truth", json::object());
    check_keys(truth, "truth", {"e0", "emax", "ed50", "sigma"});
    const auto& ref = base.schedules[static_cast<std::size_t>(base.reference_schedule)];
    const double ed50_ref = truth.contains("ed50") && truth["ed50"].is_number() ? truth["ed50"].get<double>() : 2.0;
    for (const auto& sc : base.schedules) {
      base.truth.push_back({truth.value("e0", -20.0), -60.0, rescale_ed50(ed50_ref, sc, ref)});
    }
    base.sigma = truth.value("sigma", 35.0);
    for (const char* field : {"emax", "ed50"}) {
      if (!truth.contains(field)) continue;
      const json& v = truth[field];
      if (v.is_number()) {
        if (std::string_view(field) == "emax") apply_setting(base, "emax", v.get<double>());
      } else if (v.is_object()) {
        for (const auto& [label, value] : v.items()) {
          apply_setting(base, fmt::format("{}.{}", field, label), number(value, field));
        }
      } else {
        throw InputError(fmt::format("truth.{} must be a number or a table of schedules", field));
      }
    }

    const json model = doc.value("model", json::object());
    check_keys(model, "model", {"pool_emax"});
    base.pool_emax = model.value("pool_emax", false);

    const json evaluation = doc.value("evaluation", json::object());
    check_keys(evaluation, "evaluation", {"schedule", "grid"});
    base.eval_schedule = schedule_index(base, evaluation.value("schedule", ref.label), "evaluation.schedule");
    base.eval_grid = linspace(0.0, 10.0, 10);
    if (evaluation.contains("grid")) {
      const json& g = evaluation["grid"];
      if (g.is_array()) {
        base.eval_grid = g.get<std::vector<double>>();
      } else {
        check_keys(g, "evaluation.grid", {"from", "to", "points"});
        base.eval_grid = linspace(g.value("from", 0.0), g.value("to", 10.0), g.value("points", std::size_t{10}));
      }
    }

    const json sampler = doc.value("sampler", json::object());
    check_keys(sampler, "sampler", {"chains", "iterations", "warmup", "target_accept", "max_tree_depth"});
    base.sampler.chains = sampler.value("chains", 2);
    base.sampler.iterations = sampler.value("iterations", 1500);
    base.sampler.warmup = sampler.value("warmup", 750);
    base.sampler.target_accept = sampler.value("target_accept", 0.8);
    base.sampler.max_tree_depth = sampler.value("max_tree_depth", 10);

    base.replications = doc.value("replications", 200);
    if (doc.contains("methods")) {
      for (const auto& m : doc["methods"]) base.methods.push_back(parse_method(m.get<std::string>()));
    } else {
      base.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    }

    std::vector<std::pair<std::string, std::vector<double>>> axes;
    const json axes_doc = doc.value("axes", json::object());
    if (!axes_doc.is_object()) throw InputError("'axes' must be a table");
    for (const auto& [key, values] : axes_doc.items()) {
      if (!values.is_array() || values.empty()) throw InputError(fmt::format("axis '{}' must be a non-empty array", key));
      std::vector<double> v;
      for (const auto& x : values) v.push_back(number(x, key));
      axes.emplace_back(key, std::move(v));
    }

    std::vector<Scenario> out;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
      Scenario s = base;
      std::vector<std::string> parts;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        apply_setting(s, axes[a].first, axes[a].second[idx[a]]);
        parts.push_back(fmt::format("{}={}", axes[a].first, axes[a].second[idx[a]]));
      }
      s.id = parts.empty() ? doc.value("name", std::string("base")) : fmt::format("{}", fmt::join(parts, ";"));
      s.validate();
      out.push_back(std::move(s));
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < axes[a].second.size()) break;
        idx[a] = 0;
        if (a == 0) return out;
      }
      if (axes.empty()) return out;
    }
  } catch (const json::exception& e) {
    throw InputError(fmt::format("scenario schema error: {}", e.what()));
  }
}

std::vector<Scenario> load_scenarios(const std::string& path) { return parse_scenarios(read_structured_file(path)); }

}  // namespace dosepool
