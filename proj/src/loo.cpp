#include "dosepool/loo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

constexpr double kParetoWarn = 0.7;

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double LooResult::max_pareto_k() const {
  return pareto_k.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : *std::max_element(pareto_k.begin(), pareto_k.end());
}

GpdFit gpdfit(std::span<const double> x) {
  const std::size_t N = x.size();
  constexpr double kPrior = 3.0;
  const std::size_t M = 30 + static_cast<std::size_t>(std::sqrt(static_cast<double>(N)));
  const double xstar = x[static_cast<std::size_t>(std::floor(static_cast<double>(N) / 4.0 + 0.5)) - 1];

  std::vector<double> theta(M), log_lik(M);
  for (std::size_t j = 0; j < M; ++j) {
    const double jj = static_cast<double>(j + 1);
    theta[j] = 1.0 / x[N - 1] + (1.0 - std::sqrt(static_cast<double>(M) / (jj - 0.5))) / kPrior / xstar;
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta[j] * v);
    k /= static_cast<double>(N);
    log_lik[j] = static_cast<double>(N) * (std::log(-theta[j] / k) - k - 1.0);
  }
  const double lse = log_sum_exp(log_lik);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < M; ++j) theta_hat += theta[j] * std::exp(log_lik[j] - lse);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(N);
  const double sigma = -k / theta_hat;
  const double n = static_cast<double>(N);
  k = k * n / (n + 10.0) + 10.0 * 0.5 / (n + 10.0);
  return {k, sigma};
}

double gpd_quantile(double p, double k, double sigma) {
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

SmoothedWeights psis_smooth(std::span<const double> log_ratios) {
  const std::size_t S = log_ratios.size();
  SmoothedWeights out;
  out.log_weights.assign(log_ratios.begin(), log_ratios.end());
  auto& lw = out.log_weights;
  const double max_lw = *std::max_element(lw.begin(), lw.end());
  for (auto& v : lw) v -= max_lw;

  const double s = static_cast<double>(S);
  const auto tail_len = static_cast<std::size_t>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
  std::vector<std::size_t> ord(S);
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });

  out.pareto_k = std::numeric_limits<double>::infinity();
  if (tail_len >= 5 && tail_len < S) {
    const std::span<const std::size_t> tail(ord.data() + (S - tail_len), tail_len);
    const double lo = lw[tail.front()], hi = lw[tail.back()];
    if (std::abs(hi - lo) > 1e-12) {
      const double cutoff = lw[ord[S - tail_len - 1]];
      const double exp_cutoff = std::exp(cutoff);
      std::vector<double> exceed(tail_len);
      for (std::size_t i = 0; i < tail_len; ++i) exceed[i] = std::exp(lw[tail[i]]) - exp_cutoff;
      const GpdFit fit = gpdfit(exceed);
      out.pareto_k = fit.k;
      if (std::isfinite(fit.k)) {
        for (std::size_t i = 0; i < tail_len; ++i) {
          const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(tail_len);
          lw[tail[i]] = std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
        }
      }
    }
  }
  for (auto& v : lw) v = std::min(v, 0.0);
  const double lse = log_sum_exp(lw);
  for (auto& v : lw) v -= lse;
  return out;
}

LooResult psis_loo(std::span<const double> loglik, std::size_t draws, std::size_t observations) {
  if (loglik.size() != draws * observations) throw InputError("log-likelihood matrix has the wrong size");
  if (draws < 400) throw InsufficientDraws(fmt::format("PSIS-LOO needs at least 400 draws, got {}", draws));
  if (!std::all_of(loglik.begin(), loglik.end(), [](double v) { return std::isfinite(v); })) {
    throw NonFinite("log-likelihood matrix contains non-finite entries");
  }
  LooResult r;
  std::vector<double> ll(draws), neg(draws), tmp(draws);
  double mcse_var = 0.0;
  std::size_t high_k = 0;
  for (std::size_t i = 0; i < observations; ++i) {
    for (std::size_t s = 0; s < draws; ++s) ll[s] = loglik[s * observations + i];
    r.lpd += log_sum_exp(ll) - std::log(static_cast<double>(draws));

    const auto [lo, hi] = std::minmax_element(ll.begin(), ll.end());
    if (*hi - *lo < 1e-12) {
      r.warnings.push_back(fmt::format("observation {}: degenerate importance weights", i + 1));
      const double mean = std::accumulate(ll.begin(), ll.end(), 0.0) / static_cast<double>(draws);
      r.pointwise.push_back(mean);
      r.pareto_k.push_back(0.0);
      continue;
    }
    for (std::size_t s = 0; s < draws; ++s) neg[s] = -ll[s];
    const SmoothedWeights w = psis_smooth(neg);
    for (std::size_t s = 0; s < draws; ++s) tmp[s] = w.log_weights[s] + ll[s];
    const double elpd_i = log_sum_exp(tmp);
    r.pointwise.push_back(elpd_i);
    r.pareto_k.push_back(w.pareto_k);
    if (w.pareto_k > kParetoWarn) ++high_k;

    // delta-method variance of log(sum w exp(ll)), treating draws as independent
    const double e = std::exp(elpd_i);
    double v = 0.0;
    for (std::size_t s = 0; s < draws; ++s) {
      const double wi = std::exp(w.log_weights[s]);
      const double d = std::exp(ll[s]) - e;
      v += wi * wi * d * d;
    }
    mcse_var += v / (e * e);
  }
  r.elpd_loo = std::accumulate(r.pointwise.begin(), r.pointwise.end(), 0.0);
  r.loo_ic = -2.0 * r.elpd_loo;
  r.p_loo = r.lpd - r.elpd_loo;
  r.mcse_elpd = std::sqrt(mcse_var);
  if (high_k > 0) {
    r.warnings.push_back(fmt::format("{} of {} Pareto k estimates exceed {}", high_k, observations, kParetoWarn));
  }
  return r;
}

}  // namespace dosepool
