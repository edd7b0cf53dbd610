#include "dosepool/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

using Chains = std::vector<std::vector<double>>;

Chains split_chains(std::span<const double> draws, std::size_t chains) {
  const std::size_t n = draws.size() / chains;
  const std::size_t half = n / 2;
  Chains out;
  for (std::size_t c = 0; c < chains; ++c) {
    const auto chain = draws.subspan(c * n, n);
    out.emplace_back(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(chain.end() - static_cast<std::ptrdiff_t>(half), chain.end());
  }
  return out;
}

// Replaces values by normal scores of their pooled fractional ranks.
Chains rank_normalize(const Chains& chains) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const std::size_t S = pooled.size();
  std::vector<std::size_t> idx(S);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> rank(S);
  for (std::size_t i = 0; i < S;) {
    std::size_t j = i;
    while (j + 1 < S && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> std_normal;
  Chains out = chains;
  std::size_t k = 0;
  for (auto& c : out) {
    for (auto& v : c) {
      v = boost::math::quantile(std_normal, (rank[k++] - 0.375) / (static_cast<double>(S) + 0.25));
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double rhat_of(const Chains& chains) {
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double B = n * variance_of(means);
  const double W = mean_of(vars);
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

// Geyer initial monotone sequence estimator over several chains.
double ess_of(const Chains& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> chain_mean(m), chain_var(m);
  for (std::size_t c = 0; c < m; ++c) {
    chain_mean[c] = mean_of(chains[c]);
    chain_var[c] = variance_of(chains[c]);
  }
  auto mean_acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = chains[c];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - chain_mean[c]) * (x[i + lag] - chain_mean[c]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  const double mean_var = mean_of(chain_var);
  double var_plus = mean_var * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
  if (m > 1) var_plus += variance_of(chain_mean);

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t t = 1;
  while (t < n - 5 && rho_even + rho_odd > 0.0 && std::isfinite(rho_even + rho_odd)) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0) rho[max_t + 1] = rho_even;
  for (t = 1; t + 4 <= max_t; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
      rho[t + 2] = rho[t + 1];
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0 + 2.0 * std::accumulate(rho.begin(), rho.begin() + static_cast<std::ptrdiff_t>(max_t + 1), 0.0);
  if (max_t + 1 < n) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

bool is_constant(std::span<const double> draws) {
  return std::all_of(draws.begin(), draws.end(), [&](double v) { return v == draws.front(); });
}

void check_shape(std::span<const double> draws, std::size_t chains) {
  if (chains < 2) throw InsufficientDraws("diagnostics need at least two chains");
  if (draws.size() % chains != 0) throw InputError("draw count is not a multiple of the chain count");
  if (draws.size() / chains < 100) throw InsufficientDraws("diagnostics need at least 100 draws per chain");
}

}  // namespace

double split_rhat(std::span<const double> draws, std::size_t chains) {
  check_shape(draws, chains);
  if (is_constant(draws)) return std::numeric_limits<double>::quiet_NaN();
  const Chains split = split_chains(draws, chains);
  const double bulk = rhat_of(rank_normalize(split));
  std::vector<double> pooled(draws.begin(), draws.end());
  std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(pooled.size() / 2), pooled.end());
  double median = pooled[pooled.size() / 2];
  if (pooled.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(pooled.size() / 2)));
  }
  Chains folded = split;
  for (auto& c : folded) {
    for (auto& v : c) v = std::abs(v - median);
  }
  const double tail = rhat_of(rank_normalize(folded));
  return std::max(bulk, tail);
}

double ess_bulk(std::span<const double> draws, std::size_t chains) {
  check_shape(draws, chains);
  if (is_constant(draws)) return std::numeric_limits<double>::quiet_NaN();
  return ess_of(rank_normalize(split_chains(draws, chains)));
}

double Diagnostics::max_rhat() const {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : params) {
    if (!std::isnan(p.rhat) && !(p.rhat <= best)) best = p.rhat;
  }
  return best;
}

bool Diagnostics::converged(double threshold) const {
  return std::all_of(params.begin(), params.end(), [&](const ParamDiagnostic& p) { return p.rhat <= threshold; });
}

Diagnostics diagnose(const PosteriorDraws& draws) {
  Diagnostics d;
  d.chains = draws.chains;
  d.draws = draws.rows();
  d.divergences = draws.divergence_count();
  if (draws.chains < 2) throw InsufficientDraws("diagnostics need at least two chains");
  if (draws.draws_per_chain < 100) throw InsufficientDraws("diagnostics need at least 100 draws per chain");
  const bool use_natural = !draws.natural_names.empty();
  const auto& names = use_natural ? draws.natural_names : draws.names;
  for (const auto& name : names) {
    const auto col = use_natural ? draws.natural_column(name) : draws.unconstrained_column(name);
    ParamDiagnostic p{name, split_rhat(col, draws.chains), ess_bulk(col, draws.chains)};
    if (std::isnan(p.rhat)) d.warnings.push_back(fmt::format("{}: zero variance, R-hat undefined", name));
    d.params.push_back(std::move(p));
  }
  if (d.divergences > 0) {
    d.warnings.push_back(fmt::format("{} divergent transitions after warmup", d.divergences));
  }
  return d;
}

}  // namespace dosepool
