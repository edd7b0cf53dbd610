#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dosepool/error.hpp"
#include "dosepool/loo.hpp"

using namespace dosepool;

namespace {

double log_normal_pdf(double y, double m, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (y - m) * (y - m) / var;
}

}  // namespace

TEST_CASE("identical draws reduce to the log-likelihood") {
  const std::size_t S = 500, N = 3;
  std::vector<double> ll(S * N);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < N; ++i) ll[s * N + i] = -1.0 - static_cast<double>(i);
  }
  const LooResult r = psis_loo(ll, S, N);
  CHECK(r.elpd_loo == doctest::Approx(-6.0));
  CHECK(r.loo_ic == -2.0 * r.elpd_loo);
  CHECK(r.p_loo == doctest::Approx(0.0));
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("conjugate normal model: PSIS-LOO matches exact leave-one-out") {
  // y_i ~ N(mu, 1), mu ~ N(0, 10^2); exact posterior draws of mu
  const std::vector<double> y{-0.8, 0.4, 1.1, 2.3, 0.6};
  const double prior_var = 100.0;
  const std::size_t S = 4000, N = y.size();
  auto posterior = [&](std::size_t skip) {
    double prec = 1.0 / prior_var, sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (i == skip) continue;
      prec += 1.0;
      sum += y[i];
    }
    return std::pair{sum / prec, 1.0 / prec};
  };
  const auto [m, v] = posterior(N);
  std::mt19937_64 gen(77);
  std::normal_distribution<double> z;
  std::vector<double> ll(S * N);
  for (std::size_t s = 0; s < S; ++s) {
    const double mu = m + std::sqrt(v) * z(gen);
    for (std::size_t i = 0; i < N; ++i) ll[s * N + i] = log_normal_pdf(y[i], mu, 1.0);
  }
  double exact = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto [mi, vi] = posterior(i);
    exact += log_normal_pdf(y[i], mi, 1.0 + vi);
  }
  const LooResult r = psis_loo(ll, S, N);
  CHECK(std::abs(r.elpd_loo - exact) < 0.3);
  CHECK(r.max_pareto_k() < 0.7);
  CHECK(r.loo_ic == -2.0 * r.elpd_loo);
  double sum = 0.0;
  for (double p : r.pointwise) sum += p;
  CHECK(sum == doctest::Approx(r.elpd_loo).epsilon(1e-12));
  CHECK(r.p_loo > 0.0);
  CHECK(r.elpd_loo <= r.lpd + 0.5);
  CHECK(r.mcse_elpd > 0.0);
  CHECK(r.mcse_elpd < 0.3);
}

TEST_CASE("smoothed weights are normalized, ordered and truncated") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  std::vector<double> lr(2000);
  for (auto& v : lr) v = 1.5 * z(gen);
  const SmoothedWeights w = psis_smooth(lr);
  double total = 0.0;
  for (double v : w.log_weights) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<std::size_t> ord(lr.size());
  for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return lr[a] < lr[b]; });
  for (std::size_t i = 1; i < ord.size(); ++i) CHECK(w.log_weights[ord[i]] >= w.log_weights[ord[i - 1]]);
  // the smoothed tail never exceeds the largest raw ratio
  const double top = *std::max_element(w.log_weights.begin(), w.log_weights.end());
  CHECK(top == w.log_weights[ord.back()]);
  CHECK(top - w.log_weights[ord[0]] <= lr[ord.back()] - lr[ord[0]] + 1e-12);
  CHECK(std::isfinite(w.pareto_k));
}

TEST_CASE("gpdfit recovers a known tail shape") {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double k : {0.2, 0.5, 0.9}) {
    std::vector<double> x(5000);
    for (auto& v : x) v = gpd_quantile(u(gen), k, 1.5);
    std::sort(x.begin(), x.end());
    const GpdFit fit = gpdfit(x);
    CHECK(std::abs(fit.k - k) < 0.08);
    CHECK(fit.sigma == doctest::Approx(1.5).epsilon(0.1));
  }
}

TEST_CASE("gpd_quantile inverts the distribution function") {
  for (double k : {-0.3, 0.0, 0.4, 1.2}) {
    for (double p : {0.01, 0.5, 0.93}) {
      const double q = gpd_quantile(p, k, 2.0);
      const double cdf = k == 0.0 ? 1.0 - std::exp(-q / 2.0) : 1.0 - std::pow(1.0 + k * q / 2.0, -1.0 / k);
      CHECK(cdf == doctest::Approx(p).epsilon(1e-12));
    }
  }
}

TEST_CASE("heavy-tailed ratios raise the k diagnostic") {
  // one observation whose likelihood varies wildly across draws
  const std::size_t S = 1000;
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z;
  std::vector<double> ll(S);
  for (auto& v : ll) v = -0.5 * std::pow(4.0 * z(gen), 2);
  const LooResult r = psis_loo(ll, S, 1);
  CHECK(r.pareto_k[0] > 0.7);
  CHECK(std::any_of(r.warnings.begin(), r.warnings.end(),
                    [](const std::string& w) { return w.find("Pareto k") != std::string::npos; }));
}

TEST_CASE("input checks") {
  std::vector<double> ll(399 * 2, -1.0);
  CHECK_THROWS_AS(psis_loo(ll, 399, 2), InsufficientDraws);
  std::vector<double> bad(400, -1.0);
  bad[17] = std::nan("");
  CHECK_THROWS_AS(psis_loo(bad, 400, 1), NonFinite);
}
