#pragma once

// Operating-characteristics study: scenario grids, trial generation, the
// four estimation methods and the MAE / coverage / interval-length metrics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dosepool/core_model.hpp"
#include "dosepool/posterior.hpp"
#include "dosepool/sampler.hpp"

namespace dosepool {

enum class Method { CpFrequentist, CpBayesian, PpFixed, PpRandom };

std::string_view to_string(Method m);
/// cp-freq | cp-bayes | pp-fe | pp-re
Method parse_method(std::string_view text);

struct Scenario {
  std::string id;
  std::vector<Schedule> schedules;
  int reference_schedule = 0;
  int eval_schedule = 0;
  std::vector<Arm> arms;          ///< n_planned is the per-arm sample size
  std::vector<EmaxParams> truth;  ///< per schedule, own dose scale
  double sigma = 35.0;
  int replications = 200;
  std::vector<Method> methods;
  std::vector<double> eval_grid;
  Bounds bounds{0.001, 15.0};
  bool pool_emax = false;  ///< partial pooling also applies to Emax
  SamplerConfig sampler;

  TrialDesign design() const;
  /// True curve of the evaluation schedule on the grid.
  std::vector<double> true_curve() const;
  void validate() const;
};

/// Seven-arm design (placebo + 1, 3, 10 on biweekly and monthly) with
/// E0 = -20, Emax = -60, sigma = 35 and ED50 biweekly = 2.
Scenario reference_scenario(double ed50_monthly, int n_per_arm, double emax_monthly = -60.0);
/// The 27-cell grid over ED50 monthly x N.
std::vector<Scenario> reference_grid(int replications);

/// Patient-level outcomes y ~ N(f(d), sigma^2), deterministic in seed.
TrialData generate_trial(const Scenario& scenario, std::uint64_t seed);

struct MethodEstimate {
  std::vector<double> estimate, lower, upper;
};

struct ReplicationMetrics {
  double mae = 0.0;
  std::vector<std::uint8_t> covered;
  std::vector<double> length;

  double coverage() const;
  double mean_length() const;
};

ReplicationMetrics evaluate_replication(const MethodEstimate& fit, std::span<const double> truth);

/// Point estimate and 95% band on the evaluation grid; throws on failure.
MethodEstimate fit_method(Method method, const Scenario& scenario, const TrialData& data, std::uint64_t seed);

struct ReplicationRecord {
  std::string scenario;
  int replication = 0;
  std::uint64_t seed = 0;
  Method method = Method::CpFrequentist;
  bool ok = false;
  std::string error;
  double mae = 0.0;
  double coverage = 0.0;
  double length = 0.0;
  std::string covered;  ///< one '0'/'1' per grid point
};

std::uint64_t replication_seed(std::uint64_t master_seed, std::string_view scenario_id, int replication);
/// All methods of one replication; fit failures become records with ok = false.
std::vector<ReplicationRecord> run_replication(const Scenario& scenario, int replication, std::uint64_t seed);

struct MethodSummary {
  Method method = Method::CpFrequentist;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double mae = 0.0;
  double coverage = 0.0;  ///< grid mean
  double length = 0.0;
  std::vector<double> coverage_by_dose;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<MethodSummary> methods;

  const MethodSummary& get(Method m) const;
};

/// Means over replications of the per-replication metrics.
std::vector<ScenarioResult> aggregate(std::span<const Scenario> scenarios, std::span<const ReplicationRecord> records);

struct StudyConfig {
  int workers = 1;
  std::uint64_t master_seed = 0;
  std::string out_dir;  ///< raw.csv and results.csv; empty keeps everything in memory
  bool resume = false;  ///< reuse replications already in out_dir/raw.csv
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct StudyOutput {
  std::vector<ScenarioResult> results;
  std::vector<ReplicationRecord> records;  ///< sorted by scenario, replication, method
  std::size_t reused = 0;
};

StudyOutput run_study(std::span<const Scenario> scenarios, const StudyConfig& cfg);

void write_raw_csv(std::ostream& os, std::span<const ReplicationRecord> records);
std::vector<ReplicationRecord> read_raw_csv(std::istream& is);
void write_results_csv(std::ostream& os, std::span<const ScenarioResult> results);

/// Scenario grid from a parsed TOML/JSON document (InputError on schema errors).
std::vector<Scenario> parse_scenarios(const nlohmann::json& doc);
std::vector<Scenario> load_scenarios(const std::string& path);

}  // namespace dosepool
