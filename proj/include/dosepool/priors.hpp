#pragma once

// Prior log-density kernels. Every kernel is unnormalized: additive
// constants that do not depend on the value are dropped, consistently per
// family, so HalfNormal(s) at 0 evaluates to 0.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dosepool/core_model.hpp"

namespace dosepool {

namespace prior {

struct Normal {
  double mu = 0.0;
  double sd = 1.0;
};

struct HalfNormal {
  double scale = 1.0;
};

struct LogNormal {
  double mu_log = 0.0;
  double sd_log = 1.0;
};

/// Log-normal(-2.5, 1.8) on ED50 / max_dose, restricted to (0, 1.5].
struct FunctionalUniformApprox {
  double max_dose = 1.0;
  static constexpr double kMuLog = -2.5;
  static constexpr double kSdLog = 1.8;
  static constexpr double kUpperRatio = 1.5;
};

/// sqrt det(F'F) over a dose grid, as a density in ED50 (Emax fixed at 1;
/// the shape in ED50 does not depend on E0 or Emax).
struct FunctionalUniformExact {
  std::vector<double> dose_grid;
};

}  // namespace prior

using PriorSpec = std::variant<prior::Normal, prior::HalfNormal, prior::LogNormal,
                               prior::FunctionalUniformApprox, prior::FunctionalUniformExact>;

/// Throws InputError when family parameters are invalid.
void validate_prior(const PriorSpec& spec);

/// Support of the family as a closed/open interval [lower, upper].
struct Support {
  double lower;
  double upper;
  bool lower_open;
};
Support prior_support(const PriorSpec& spec);

/// Unnormalized log density. Throws OutOfSupport outside the support.
double log_density(const PriorSpec& spec, double value);

/// d/dvalue of log_density.
double log_density_derivative(const PriorSpec& spec, double value);

struct LogDensityTerm {
  double value;
  double derivative;
};
/// Both at once, without support checks (the caller guarantees support).
LogDensityTerm log_density_term(const PriorSpec& spec, double value);

/// sqrt(det(F'F)) where F has rows (1, x/(x+ED50), -x Emax/(x+ED50)^2) for
/// each grid dose x. Throws SingularInformation when det <= 1e-14.
double functional_uniform_exact(std::span<const double> dose_grid, const EmaxParams& theta);

/// Ratio of the 97.5% to the 2.5% point of a log-normal with sd tau.
double wip_range(double tau);

/// Parses "normal:0,100", "half-normal:1", "lognormal:-2.5,1.8",
/// "fu-approx:600". Throws InputError on malformed text.
PriorSpec parse_prior(std::string_view text);
std::string describe(const PriorSpec& spec);

/// Priors for every role in the model menu.
struct PriorSet {
  PriorSpec e0 = prior::Normal{0.0, 100.0};
  PriorSpec emax = prior::Normal{0.0, 100.0};  ///< also mu_Emax under random effects
  PriorSpec ed50 = prior::FunctionalUniformApprox{1.0};  ///< ED50, ED50(i) or mu_ED50
  PriorSpec sigma = prior::HalfNormal{100.0};
  PriorSpec tau_ed50 = prior::HalfNormal{1.0};
  PriorSpec tau_emax = prior::HalfNormal{10.0};

  /// Defaults with the functional-uniform approximation scaled to max_dose.
  static PriorSet defaults(double max_dose);
  /// Replaces the prior for a role by name (e0, emax, ed50, sigma, tau_ed50,
  /// tau_emax). Throws InputError on unknown roles.
  void set(std::string_view role, PriorSpec spec);
};

}  // namespace dosepool
