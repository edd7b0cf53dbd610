#pragma once

// Posterior and frequentist reporting: parameter tables, pointwise curve
// bands, kernel density estimates and their CSV forms.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dosepool/mle.hpp"
#include "dosepool/sampler.hpp"

namespace dosepool {

/// Sample quantile with linear interpolation between order statistics
/// (R type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> values, double p);

struct ParamSummary {
  std::string parameter;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

ParamSummary summarize(std::string name, std::span<const double> values);
/// One row per natural-scale parameter, in the draws' column order.
std::vector<ParamSummary> summarize_params(const PosteriorDraws& draws);

struct CurveBand {
  double dose = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Pointwise posterior median and equi-tailed interval of f on `schedule`'s
/// own dose scale.
std::vector<CurveBand> curve_summary(const PosteriorDraws& draws, std::string_view schedule,
                                     std::span<const double> dose_grid, double level = 0.95);
std::vector<CurveBand> curve_bands(const MleFit& fit, std::span<const double> dose_grid);

/// `count` equidistant points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/// 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to a tiny positive width for
/// degenerate samples.
double silverman_bandwidth(std::span<const double> values);
/// Gaussian KDE at `grid`; needs at least 500 values (InsufficientDraws).
std::vector<DensityPoint> marginal_density(std::span<const double> values, std::span<const double> grid);
/// Grid covering the sample plus three bandwidths on each side.
std::vector<double> density_grid(std::span<const double> values, std::size_t count = 512);

void write_params_csv(std::ostream& os, std::span<const ParamSummary> rows);
void write_curve_csv(std::ostream& os, std::span<const CurveBand> rows, std::string_view method);
void write_density_csv(std::ostream& os, std::span<const DensityPoint> rows);
/// One row per draw with chain, iteration, divergent and the natural columns.
void write_draws_csv(std::ostream& os, const PosteriorDraws& draws);

}  // namespace dosepool
