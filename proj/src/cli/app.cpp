#include "dosepool/cli/app.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "dosepool/config.hpp"
#include "dosepool/datasets.hpp"
#include "dosepool/diagnostics.hpp"
#include "dosepool/error.hpp"
#include "dosepool/io.hpp"
#include "dosepool/loo.hpp"
#include "dosepool/posterior.hpp"
#include "dosepool/rng.hpp"
#include "dosepool/sampler.hpp"
#include "dosepool/simd/kernels.hpp"
#include "dosepool/simulation.hpp"
#include "dosepool/summaries.hpp"

namespace dosepool::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataOptions {
  std::string data;
  std::string builtin;
  bool arm_level = false;
  std::string ref_schedule;
};

struct SamplerOptions {
  int chains = 3;
  int iterations = 4000;
  int warmup = 2000;
  int threads = 1;
  double target_accept = 0.8;
  std::optional<std::uint64_t> seed;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  auto* data = cmd->add_option("--data", o.data, "Trial data file (CSV or JSON)");
  auto* builtin = cmd->add_option("--builtin", o.builtin, "Embedded dataset")->check(CLI::IsMember({"dupilumab"}));
  data->excludes(builtin);
  cmd->add_flag("--arm-level", o.arm_level, "Rows are arm summaries with an se column");
  cmd->add_option("--ref-schedule", o.ref_schedule, "Reference schedule label");
}

void add_sampler_options(CLI::App* cmd, SamplerOptions& o) {
  cmd->add_option("--chains", o.chains, "Number of chains")->check(CLI::PositiveNumber);
  cmd->add_option("--iter", o.iterations, "Iterations per chain, warmup included")->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", o.warmup, "Warmup iterations per chain")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "Chains run concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--target-accept", o.target_accept, "Target acceptance statistic")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Master seed; random when omitted");
}

TrialData load_data(const DataOptions& o) {
  TrialData data;
  if (!o.builtin.empty()) {
    data = dupilumab();
  } else if (!o.data.empty()) {
    ReadOptions ro;
    ro.arm_level = o.arm_level;
    data = read_trial_file(o.data, ro);
  } else {
    throw InputError("one of --data or --builtin is required");
  }
  if (!o.ref_schedule.empty()) {
    const auto id = data.design.find_schedule(o.ref_schedule);
    if (!id) throw InputError(fmt::format("--ref-schedule: unknown schedule '{}'", o.ref_schedule));
    data.design.reference_schedule_id = *id;
  }
  return data;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& out) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  fmt::print(out, "seed: {} (pass --seed {} to reproduce)\n", s, s);
  return s;
}

SamplerConfig make_sampler(const SamplerOptions& o, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.chains = o.chains;
  cfg.iterations = o.iterations;
  cfg.warmup = o.warmup;
  cfg.threads = o.threads;
  cfg.target_accept = o.target_accept;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void set_ed50_prior(ModelSpec& spec, PriorSpec prior) {
  if (const auto* fu = std::get_if<prior::FunctionalUniformApprox>(&prior)) {
    spec.prior_dose_scale = fu->max_dose;
    spec.ed50_bounds = {0.0, prior::FunctionalUniformApprox::kUpperRatio * fu->max_dose};
  }
  spec.priors.ed50 = std::move(prior);
}

// Prior overrides from a config file: [priors] role = "family:params".
void apply_config(ModelSpec& spec, const std::string& path) {
  const json doc = read_structured_file(path);
  for (const auto& [section, body] : doc.items()) {
    if (section == "priors") {
      for (const auto& [role, text] : body.items()) {
        if (!text.is_string()) throw InputError(fmt::format("{}: priors.{} must be a string", path, role));
        PriorSpec p = parse_prior(text.get<std::string>());
        if (role == "ed50") {
          set_ed50_prior(spec, std::move(p));
        } else {
          spec.priors.set(role, std::move(p));
        }
      }
    } else if (section == "bounds") {
      const auto b = body.get<std::vector<double>>();
      if (b.size() != 2) throw InputError(fmt::format("{}: bounds must be [lower, upper]", path));
      spec.ed50_bounds = {b[0], b[1]};
    } else {
      throw InputError(fmt::format("{}: unknown section '{}'", path, section));
    }
  }
}

std::string file_safe(std::string_view name) {
  std::string s;
  for (char c : name) {
    if (c == '[') {
      s += '_';
    } else if (c != ']') {
      s += c;
    }
  }
  return s;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw InputError(fmt::format("cannot write '{}'", path.string()));
  body(os);
}

json diagnostics_json(const PosteriorDraws& draws, const SamplerConfig& cfg, const std::optional<Diagnostics>& diag,
                      const ModelSpec& spec, std::vector<std::string> warnings) {
  json j;
  j["model"] = spec.label;
  j["ed50"] = std::string(to_string(spec.ed50));
  j["emax"] = std::string(to_string(spec.emax));
  j["seed"] = cfg.seed;
  j["chains"] = draws.chains;
  j["iterations"] = cfg.iterations;
  j["warmup"] = cfg.warmup;
  j["draws_per_chain"] = draws.draws_per_chain;
  j["draws"] = draws.rows();
  j["divergences"] = draws.divergence_count();
  j["simd_backend"] = std::string(simd::backend_name(simd::kernels().backend));
  j["step_size"] = json::array();
  for (const auto& c : draws.chain_stats) j["step_size"].push_back(c.step_size);
  json params = json::object();
  bool converged = false;
  if (diag) {
    for (const auto& p : diag->params) {
      params[p.name] = {{"rhat", std::isnan(p.rhat) ? json(nullptr) : json(p.rhat)},
                        {"ess_bulk", std::isnan(p.ess_bulk) ? json(nullptr) : json(p.ess_bulk)}};
    }
    converged = diag->converged(1.05);
    for (const auto& w : diag->warnings) warnings.push_back(w);
    const double m = diag->max_rhat();
    j["max_rhat"] = std::isnan(m) ? json(nullptr) : json(m);
  }
  j["parameters"] = params;
  j["converged"] = converged;
  j["warnings"] = warnings;
  return j;
}

std::string method_label(const ModelSpec& spec) {
  if (spec.ed50 == Pooling::Shared && spec.emax == Pooling::Shared) return "cp";
  if (spec.emax == Pooling::Shared) return spec.ed50 == Pooling::FixedEffects ? "pp-fe" : "pp-re";
  return fmt::format("ed50-{}-emax-{}", to_string(spec.ed50), to_string(spec.emax));
}

struct FitOptions {
  DataOptions data;
  SamplerOptions sampler;
  std::string model = "cp";
  std::string ed50, emax;
  std::string tau_prior, tau_emax_prior, ed50_prior;
  std::string config;
  std::string out = "fit_out";
  bool save_draws = false;
  int grid_points = 30;
  double grid_max = 0.0;
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  TrialData data = load_data(o.data);
  for (const auto& w : data.warnings) fmt::print(err, "warning: {}\n", w);

  Pooling ed50 = Pooling::Shared, emax = Pooling::Shared;
  if (o.model == "pp-fe") ed50 = Pooling::FixedEffects;
  if (o.model == "pp-re") ed50 = Pooling::RandomEffects;
  if (!o.ed50.empty()) ed50 = parse_pooling(o.ed50);
  if (!o.emax.empty()) emax = parse_pooling(o.emax);
  ModelSpec spec = ModelSpec::make(ed50, emax, data.design);
  spec.label = method_label(spec);
  if (!o.config.empty()) apply_config(spec, o.config);
  if (!o.ed50_prior.empty()) set_ed50_prior(spec, parse_prior(o.ed50_prior));
  if (!o.tau_prior.empty()) spec.priors.set("tau_ed50", parse_prior(o.tau_prior));
  if (!o.tau_emax_prior.empty()) spec.priors.set("tau_emax", parse_prior(o.tau_emax_prior));

  const std::uint64_t seed = resolve_seed(o.sampler.seed, out);
  const SamplerConfig cfg = make_sampler(o.sampler, seed);
  const Posterior posterior(spec, data);
  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorDraws draws = sample(posterior, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::optional<Diagnostics> diag;
  std::vector<std::string> warnings = data.warnings;
  try {
    diag = diagnose(draws);
  } catch (const InsufficientDraws& e) {
    warnings.push_back(fmt::format("diagnostics skipped: {}", e.what()));
  }

  const fs::path dir = o.out;
  fs::create_directories(dir);
  const auto summaries = summarize_params(draws);
  write_file(dir / "params.csv", [&](std::ostream& os) { write_params_csv(os, summaries); });

  const auto& ref = data.design.reference();
  const double grid_max_ref = o.grid_max > 0.0 ? o.grid_max : data.design.max_dose();
  for (const auto& s : data.design.schedules) {
    const auto grid = linspace(0.0, convert_dose(grid_max_ref, ref, s), static_cast<std::size_t>(o.grid_points));
    const auto bands = curve_summary(draws, s.label, grid);
    write_file(dir / fmt::format("curve_{}.csv", s.label),
               [&](std::ostream& os) { write_curve_csv(os, bands, spec.label); });
  }
  if (draws.rows() >= 500) {
    for (const auto& name : draws.natural_names) {
      const auto col = draws.natural_column(name);
      const auto dens = marginal_density(col, density_grid(col));
      write_file(dir / fmt::format("density_{}.csv", file_safe(name)),
                 [&](std::ostream& os) { write_density_csv(os, dens); });
    }
  } else {
    warnings.push_back("density estimates need at least 500 draws; density files not written");
  }
  if (o.save_draws) write_file(dir / "draws.csv", [&](std::ostream& os) { write_draws_csv(os, draws); });

  json dj = diagnostics_json(draws, cfg, diag, spec, warnings);
  dj["runtime_seconds"] = secs;
  write_file(dir / "diagnostics.json", [&](std::ostream& os) { os << dj.dump(2) << '\n'; });

  fmt::print(out, "{} fit: {} chains x {} draws in {:.1f}s\n", spec.label, draws.chains, draws.draws_per_chain, secs);
  fmt::print(out, "{:<18} {:>10} {:>9} {:>10} {:>10} {:>10}\n", "parameter", "mean", "sd", "median", "q2.5",
             "q97.5");
  for (const auto& s : summaries) {
    fmt::print(out, "{:<18} {:>10.3f} {:>9.3f} {:>10.3f} {:>10.3f} {:>10.3f}\n", s.parameter, s.mean, s.sd, s.median,
               s.q025, s.q975);
  }
  if (draws.divergence_count() > 0) {
    fmt::print(err, "warning: {} divergent transitions after warmup\n", draws.divergence_count());
  }
  if (diag && !diag->converged(1.05)) {
    fmt::print(err, "WARNING: chains have not converged (max R-hat {:.3f} > 1.05); see diagnostics.json\n",
               diag->max_rhat());
  }
  fmt::print(out, "wrote {}\n", dir.string());
  return kOk;
}

struct CompareOptions {
  DataOptions data;
  SamplerOptions sampler;
  std::vector<int> models{1, 2, 3, 4, 5};
  std::string out;
};

int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  const TrialData data = load_data(o.data);
  for (const auto& w : data.warnings) fmt::print(err, "warning: {}\n", w);
  const std::uint64_t seed = resolve_seed(o.sampler.seed, out);

  struct Row {
    int model;
    std::string label, description;
    std::optional<LooResult> loo;
    std::string error;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < o.models.size(); ++i) {
    const int m = o.models[i];
    Row row{m, fmt::format("Model {}", m), "", std::nullopt, ""};
    try {
      const ModelSpec spec = menu_model(m, data.design);
      row.description = fmt::format("ed50={} emax={}", to_string(spec.ed50), to_string(spec.emax));
      const Posterior posterior(spec, data);
      const SamplerConfig cfg = make_sampler(o.sampler, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
      const PosteriorDraws draws = sample(posterior, cfg);
      row.loo = psis_loo(draws.pointwise_loglik, draws.rows(), draws.pointwise_dim);
      for (const auto& w : row.loo->warnings) fmt::print(err, "warning: {}: {}\n", row.label, w);
    } catch (const Error& e) {
      row.error = e.what();
      fmt::print(err, "error: {}: {}\n", row.label, e.what());
    }
    rows.push_back(std::move(row));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.loo) best = std::min(best, r.loo->loo_ic);
  }

  fmt::print(out, "{:<9} {:<22} {:>9} {:>9} {:>8} {:>7}\n", "model", "pooling", "LOO-IC", "dLOO-IC", "MCSE", "max k");
  for (const auto& r : rows) {
    if (r.loo) {
      fmt::print(out, "{:<9} {:<22} {:>9.2f} {:>9.2f} {:>8.2f} {:>7.2f}\n", r.label, r.description, r.loo->loo_ic,
                 r.loo->loo_ic - best, 2.0 * r.loo->mcse_elpd, r.loo->max_pareto_k());
    } else {
      fmt::print(out, "{:<9} {:<22} {:>9}\n", r.label, r.description, "failed");
    }
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "comparison.csv", [&](std::ostream& os) {
      os << "model,pooling,elpd_loo,loo_ic,delta_loo_ic,p_loo,mcse_loo_ic,max_pareto_k,status\n";
      for (const auto& r : rows) {
        if (r.loo) {
          fmt::print(os, "{},{},{},{},{},{},{},{},ok\n", r.model, r.description, r.loo->elpd_loo, r.loo->loo_ic,
                     r.loo->loo_ic - best, r.loo->p_loo, 2.0 * r.loo->mcse_elpd, r.loo->max_pareto_k());
        } else {
          fmt::print(os, "{},{},,,,,,,failed\n", r.model, r.description);
        }
      }
    });
  }
  const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return r.loo.has_value(); });
  return any_ok ? kOk : kNumericalError;
}

struct SimulateOptions {
  std::string scenarios;
  std::optional<int> reps;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::string out = "sim_out";
  std::string resume;
  std::optional<int> chains, iterations, warmup;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<Scenario> scenarios = load_scenarios(o.scenarios);
  for (auto& s : scenarios) {
    if (o.reps) s.replications = *o.reps;
    if (o.chains) s.sampler.chains = *o.chains;
    if (o.iterations) s.sampler.iterations = *o.iterations;
    if (o.warmup) s.sampler.warmup = *o.warmup;
    s.validate();
  }
  StudyConfig cfg;
  cfg.workers = o.workers;
  cfg.out_dir = o.resume.empty() ? o.out : o.resume;
  cfg.resume = !o.resume.empty();
  if (cfg.resume && !o.seed) {
    const auto seed_file = fs::path(cfg.out_dir) / "seed.txt";
    std::ifstream in(seed_file);
    std::uint64_t s = 0;
    if (!(in >> s)) throw InputError(fmt::format("--resume: cannot read {}; pass --seed", seed_file.string()));
    cfg.master_seed = s;
  } else {
    cfg.master_seed = resolve_seed(o.seed, out);
  }
  fs::create_directories(cfg.out_dir);
  write_file(fs::path(cfg.out_dir) / "seed.txt", [&](std::ostream& os) { os << cfg.master_seed << '\n'; });
  auto last = std::chrono::steady_clock::now();
  cfg.progress = [&](std::size_t done, std::size_t total) {
    const auto now = std::chrono::steady_clock::now();
    if (done == total || now - last > std::chrono::seconds(10)) {
      fmt::print(err, "progress: {}/{} replications\n", done, total);
      last = now;
    }
  };
  const StudyOutput res = run_study(scenarios, cfg);
  if (res.reused > 0) fmt::print(out, "resumed: reused {} completed replications\n", res.reused);
  fmt::print(out, "{:<44} {:<9} {:>5} {:>7} {:>8} {:>8}\n", "scenario", "method", "ok", "MAE", "coverage", "length");
  for (const auto& r : res.results) {
    for (const auto& m : r.methods) {
      fmt::print(out, "{:<44} {:<9} {:>5} {:>7.3f} {:>8.3f} {:>8.3f}\n", r.scenario, to_string(m.method), m.ok, m.mae,
                 m.coverage, m.length);
    }
  }
  std::size_t failed = 0;
  for (const auto& r : res.records) failed += r.ok ? 0 : 1;
  if (failed > 0) fmt::print(err, "warning: {} method fits failed; see raw.csv\n", failed);
  fmt::print(out, "wrote {}\n", cfg.out_dir);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian Emax dose-response modelling across dosing schedules"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model and write summaries");
  add_data_options(fit_cmd, fit.data);
  add_sampler_options(fit_cmd, fit.sampler);
  fit_cmd->add_option("--model", fit.model, "Pooling preset")->check(CLI::IsMember({"cp", "pp-fe", "pp-re"}));
  fit_cmd->add_option("--ed50", fit.ed50, "ED50 pooling: shared|fe|re");
  fit_cmd->add_option("--emax", fit.emax, "Emax pooling: shared|fe|re");
  fit_cmd->add_option("--tau-prior", fit.tau_prior, "Prior of tau_ED50, e.g. half-normal:1");
  fit_cmd->add_option("--tau-emax-prior", fit.tau_emax_prior, "Prior of tau_Emax, e.g. half-normal:10");
  fit_cmd->add_option("--ed50-prior", fit.ed50_prior, "Prior of ED50, e.g. fu-approx:600");
  fit_cmd->add_option("--config", fit.config, "TOML/JSON file with [priors] overrides");
  fit_cmd->add_option("--out", fit.out, "Output directory");
  fit_cmd->add_flag("--save-draws", fit.save_draws, "Also write draws.csv");
  fit_cmd->add_option("--grid-points", fit.grid_points, "Curve grid size")->check(CLI::Range(2, 100000));
  fit_cmd->add_option("--grid-max", fit.grid_max, "Curve grid end on the reference scale (default: largest dose)");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare models of the menu by LOO-IC");
  add_data_options(cmp_cmd, cmp.data);
  add_sampler_options(cmp_cmd, cmp.sampler);
  cmp_cmd->add_option("--models", cmp.models, "Subset of models 1-5")->delimiter(',')->check(CLI::Range(1, 5));
  cmp_cmd->add_option("--out", cmp.out, "Directory for comparison.csv");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
  sim_cmd->add_option("--scenarios", sim.scenarios, "Scenario grid (TOML or JSON)")->required();
  sim_cmd->add_option("--reps", sim.reps, "Replications per scenario")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--workers", sim.workers, "Parallel workers")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Master seed");
  sim_cmd->add_option("--out", sim.out, "Output directory");
  sim_cmd->add_option("--resume", sim.resume, "Continue the study in this directory");
  sim_cmd->add_option("--chains", sim.chains, "Override chains per fit")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--iter", sim.iterations, "Override iterations per chain")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--warmup", sim.warmup, "Override warmup per chain")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out, err);
    if (*cmp_cmd) return cmd_compare(cmp, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
  } catch (const InputError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const OutOfSupport& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const InsufficientDraws& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const Error& e) {
    fmt::print(err, "numerical failure: {}\n", e.what());
    return kNumericalError;
  } catch (const fs::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace dosepool::cli
