#pragma once

// Pareto-smoothed importance-sampling leave-one-out cross-validation.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dosepool {

struct LooResult {
  double elpd_loo = 0.0;
  double loo_ic = 0.0;  ///< -2 * elpd_loo
  double lpd = 0.0;     ///< in-sample log pointwise predictive density
  double p_loo = 0.0;   ///< lpd - elpd_loo
  double mcse_elpd = 0.0;
  std::vector<double> pointwise;
  std::vector<double> pareto_k;
  std::vector<std::string> warnings;

  double max_pareto_k() const;
};

/// Generalized Pareto fit to positive exceedances sorted ascending, with a
/// weakly informative shrinkage of k toward 0.5.
struct GpdFit {
  double k = 0.0;
  double sigma = 0.0;
};
GpdFit gpdfit(std::span<const double> exceedances);

/// Inverse CDF of the generalized Pareto with location 0.
double gpd_quantile(double p, double k, double sigma);

struct SmoothedWeights {
  std::vector<double> log_weights;  ///< normalized: logsumexp = 0
  double pareto_k = 0.0;            ///< +inf when the tail is too short to fit
};

/// Smooths raw log importance ratios: the largest min(0.2 S, 3 sqrt S) are
/// replaced by expected GPD order statistics, then truncated at the raw max.
SmoothedWeights psis_smooth(std::span<const double> log_ratios);

/// Pointwise log-likelihood laid out draws x observations (row-major).
/// Needs finite entries and at least 400 draws.
LooResult psis_loo(std::span<const double> loglik, std::size_t draws, std::size_t observations);

}  // namespace dosepool
