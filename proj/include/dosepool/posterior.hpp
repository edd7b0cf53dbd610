#pragma once

// Joint log posterior and analytic gradient for the Emax model menu:
// complete pooling, and partial pooling with schedule-specific fixed or
// random effects on ED50 and/or Emax. E0 and sigma are always shared.
//
// Unconstrained layout (in order, blocks present only when needed):
//   e0
//   emax                                   Shared
//   emax[s], s = 0..S-1                    FixedEffects
//   mu_emax, emax_raw[s], log_tau_emax     RandomEffects (non-centered)
//   ed50_logit                             Shared       ED50* on the reference scale
//   ed50_logit[s]                          FixedEffects ED50(s) on schedule s's own scale
//   mu_ed50_logit, ed50_raw[s], log_tau_ed50   RandomEffects:
//       log ED50*(s) = log mu_ED50 + u_s tau_ED50
//   log_sigma                              PatientLevel data only
//
// Bounded quantities use LogisticBounded over ModelSpec::ed50_bounds, scales
// use LogPositive; all log-Jacobians are part of the density.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dosepool/core_model.hpp"
#include "dosepool/log_density.hpp"
#include "dosepool/priors.hpp"

namespace dosepool {

enum class Pooling { Shared, FixedEffects, RandomEffects };

std::string_view to_string(Pooling p);
/// Accepts shared / fe / re (and the long spellings).
Pooling parse_pooling(std::string_view text);

struct Bounds {
  double lower = 0.0;
  double upper = 1.0;
};

struct ModelSpec {
  Pooling ed50 = Pooling::Shared;
  Pooling emax = Pooling::Shared;
  int reference_schedule_id = 0;
  /// D in the functional-uniform approximation; bounds default to [0, 1.5 D].
  double prior_dose_scale = 1.0;
  Bounds ed50_bounds{0.0, 1.5};
  PriorSet priors;
  std::string label;

  /// Defaults: D is the largest reference-scale dose for complete pooling
  /// of ED50 and the largest administered dose otherwise.
  static ModelSpec make(Pooling ed50, Pooling emax, const TrialDesign& design);

  /// Rescales D (and bounds) so the spec describes the same model for a
  /// different reference schedule.
  ModelSpec with_reference(int schedule_id, const TrialDesign& design) const;

  void validate(const TrialDesign& design) const;
};

/// Model 1..5 of the comparison menu: (Shared, Shared), (FE, Shared),
/// (RE, Shared), (FE, FE), (RE, RE).
ModelSpec menu_model(int number, const TrialDesign& design);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Natural-scale parameters. emax and ed50 hold one entry per schedule
/// (repeated under sharing); ed50 is on each schedule's own dose scale.
struct NaturalParams {
  double e0 = 0.0;
  std::vector<double> emax;
  std::vector<double> ed50;
  double sigma = kNaN;
  double mu_ed50 = kNaN;  ///< reference-scale location exp(mu), RandomEffects
  double tau_ed50 = kNaN;
  double mu_emax = kNaN;
  double tau_emax = kNaN;
};

struct LogPosteriorTerms {
  double loglik = 0.0;
  double prior = 0.0;     ///< priors of e0, emax, ed50, sigma and the tau's
  double deviates = 0.0;  ///< sum of -u^2/2 over non-centered deviates
  double jacobian = 0.0;
  double total() const { return loglik + prior + deviates + jacobian; }
};

/// Log-likelihood and its gradient at given natural-scale curve parameters.
struct DataLogLik {
  double value = 0.0;
  double d_e0 = 0.0;
  std::vector<double> d_emax;  ///< per schedule
  std::vector<double> d_ed50;  ///< per schedule
  double d_log_sigma = 0.0;    ///< zero for ArmLevel
};

class Posterior final : public LogDensity {
 public:
  Posterior(ModelSpec spec, const TrialData& data);

  const ModelSpec& spec() const { return spec_; }
  std::size_t schedule_count() const { return schedules_.size(); }
  std::size_t observation_count() const { return n_obs_; }
  ObservationKind kind() const { return kind_; }

  std::size_t dimension() const override { return dim_; }
  double log_density_gradient(std::span<const double> x, std::span<double> grad) const override;
  std::vector<std::string> parameter_names() const override;

  std::size_t natural_dimension() const override;
  std::vector<std::string> natural_names() const override;
  void write_natural(std::span<const double> x, std::span<double> out) const override;

  std::size_t pointwise_dimension() const override { return n_obs_; }
  /// Pointwise (normalized) log-likelihood in the original row order.
  void write_pointwise(std::span<const double> x, std::span<double> out) const override;

  double log_density(std::span<const double> x) const;
  LogPosteriorTerms terms(std::span<const double> x) const;

  NaturalParams to_natural(std::span<const double> x) const;
  /// Inverse map. RandomEffects blocks need tau > 0 and the location set.
  std::vector<double> from_natural(const NaturalParams& p) const;

  /// Data term evaluated directly at curve parameters.
  DataLogLik data_loglik(double e0, std::span<const double> emax, std::span<const double> ed50,
                         double sigma) const;

 private:
  double evaluate(std::span<const double> x, std::span<double> grad, LogPosteriorTerms* terms) const;

  ModelSpec spec_;
  ObservationKind kind_;
  std::vector<Schedule> schedules_;
  std::vector<double> interval_ratio_;  // interval(s) / interval(reference)
  // observations grouped by schedule, contiguous
  std::vector<double> dose_, value_, weight_, const_term_;
  std::vector<std::size_t> segment_begin_;  // size S+1
  std::vector<std::size_t> order_;          // grouped index -> original row
  std::size_t n_obs_ = 0;
  double const_sum_ = 0.0;

  std::size_t dim_ = 0;
  std::size_t i_e0_ = 0, i_emax_ = 0, i_log_tau_emax_ = 0;
  std::size_t i_ed50_ = 0, i_log_tau_ed50_ = 0, i_log_sigma_ = 0;
};

/// Checked entry points: throw NonFinite when any term is NaN or infinite.
double log_posterior(const Posterior& posterior, std::span<const double> x);
std::vector<double> grad_log_posterior(const Posterior& posterior, std::span<const double> x);

}  // namespace dosepool
