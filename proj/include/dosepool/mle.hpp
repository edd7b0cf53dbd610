#pragma once

// Bounded maximum-likelihood fit of the Emax model (complete pooling) by
// profiling ED50, with delta-method confidence bands for the curve.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dosepool/core_model.hpp"
#include "dosepool/posterior.hpp"

namespace dosepool {

struct ProfilePoint {
  double ed50 = 0.0;
  double rss = 0.0;  ///< weighted residual sum of squares (the deviance up to scale)
};

struct MleFit {
  EmaxParams params;
  double sigma_hat = 0.0;
  double rss = 0.0;
  /// Row-major covariance of (E0, Emax, ED50).
  std::array<double, 9> vcov{};
  bool converged = false;
  bool at_boundary = false;
  Bounds bounds;
  std::vector<ProfilePoint> profile;
  std::vector<std::string> warnings;

  double cov(int i, int j) const { return vcov[static_cast<std::size_t>(3 * i + j)]; }
};

/// Variance model: PatientLevel estimates sigma^2 = RSS/(n-3) from unit
/// weights; ArmLevel treats weights as known inverse variances.
MleFit fit_mle(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
               ObservationKind kind, Bounds bounds);

/// Converts every dose to the reference schedule first.
MleFit fit_mle(const TrialData& data, Bounds bounds);

struct CurvePoint {
  double dose = 0.0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// f-hat +/- 1.96 se with var f-hat(d) = J_d vcov J_d'. Throws FitFailure
/// when the fit did not converge.
std::vector<CurvePoint> curve_ci(const MleFit& fit, std::span<const double> dose_grid);

}  // namespace dosepool
