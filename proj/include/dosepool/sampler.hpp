#pragma once

// Hamiltonian Monte Carlo with multinomial No-U-Turn trajectories, a
// diagonal Euclidean metric, dual-averaging step-size adaptation and
// windowed metric adaptation during warmup.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dosepool/log_density.hpp"
#include "dosepool/rng.hpp"

namespace dosepool {

struct SamplerConfig {
  int chains = 3;
  int iterations = 4000;  ///< per chain, warmup included
  int warmup = 2000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  int threads = 1;  ///< chains run concurrently when > 1
  double init_radius = 2.0;
  double max_delta_h = 1000.0;
  bool store_pointwise = true;  ///< keep the per-draw pointwise log-likelihood

  int draws_per_chain() const { return iterations - warmup; }
  void validate() const;
};

struct ChainStats {
  double step_size = 0.0;
  std::vector<double> inv_metric;
  std::size_t divergences = 0;
  double mean_accept = 0.0;
  double mean_tree_depth = 0.0;
  std::size_t leapfrog_steps = 0;
};

/// Post-warmup draws, rows ordered chain-major (chain c, draw i at row
/// c * draws_per_chain + i).
struct PosteriorDraws {
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::vector<std::string> names;          ///< unconstrained coordinates
  std::vector<double> unconstrained;       ///< rows x names.size()
  std::vector<std::string> natural_names;  ///< natural-scale view
  std::vector<double> natural;             ///< rows x natural_names.size()
  std::size_t pointwise_dim = 0;
  std::vector<double> pointwise_loglik;    ///< rows x pointwise_dim
  std::vector<std::uint8_t> divergent;     ///< per row
  std::vector<ChainStats> chain_stats;

  std::size_t rows() const { return chains * draws_per_chain; }
  std::size_t divergence_count() const;
  /// Natural-scale column across all rows; throws InputError for unknown names.
  std::vector<double> natural_column(std::string_view name) const;
  std::vector<double> unconstrained_column(std::string_view name) const;
  bool has_natural(std::string_view name) const;
};

PosteriorDraws sample(const LogDensity& model, const SamplerConfig& cfg);

/// Position, momentum and cached potential/gradient of one phase-space point.
struct PhasePoint {
  std::vector<double> q, p, grad;  ///< grad of the log density at q
  double log_density = 0.0;
};

/// H(q, p) = -log pi(q) + p' M^{-1} p / 2 with M^{-1} = diag(inv_metric).
class DiagHamiltonian {
 public:
  DiagHamiltonian(const LogDensity& model, std::vector<double> inv_metric);

  void update(PhasePoint& z) const;
  double energy(const PhasePoint& z) const;
  void leapfrog(PhasePoint& z, double epsilon) const;
  void velocity(const PhasePoint& z, std::span<double> out) const;  // M^{-1} p
  void sample_momentum(PhasePoint& z, Rng& rng) const;
  std::vector<double>& inv_metric() { return inv_metric_; }
  const std::vector<double>& inv_metric() const { return inv_metric_; }

 private:
  const LogDensity& model_;
  std::vector<double> inv_metric_;
};

}  // namespace dosepool
