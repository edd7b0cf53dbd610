#pragma once

// Convergence diagnostics: rank-normalized split R-hat and bulk effective
// sample size.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dosepool/sampler.hpp"

namespace dosepool {

struct ParamDiagnostic {
  std::string name;
  double rhat = 0.0;
  double ess_bulk = 0.0;
};

struct Diagnostics {
  std::vector<ParamDiagnostic> params;
  std::size_t divergences = 0;
  std::size_t chains = 0;
  std::size_t draws = 0;  ///< post-warmup draws over all chains
  std::vector<std::string> warnings;

  /// Largest R-hat, ignoring NaN; NaN when every entry is NaN.
  double max_rhat() const;
  /// False when any R-hat exceeds the threshold or is NaN.
  bool converged(double threshold = 1.05) const;
};

/// Draws laid out chain-major: chain c occupies [c * n, (c + 1) * n).
double split_rhat(std::span<const double> draws, std::size_t chains);
double ess_bulk(std::span<const double> draws, std::size_t chains);

/// Diagnostics for every natural-scale parameter. Needs at least two chains
/// and 100 draws per chain (InsufficientDraws otherwise).
Diagnostics diagnose(const PosteriorDraws& draws);

}  // namespace dosepool
