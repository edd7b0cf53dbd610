#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dosepool/diagnostics.hpp"
#include "dosepool/error.hpp"
#include "dosepool/posterior.hpp"
#include "dosepool/sampler.hpp"
#include "dosepool/transforms.hpp"

using namespace dosepool;

namespace {

struct StdNormal final : LogDensity {
  std::size_t dim;
  explicit StdNormal(std::size_t d) : dim(d) {}
  std::size_t dimension() const override { return dim; }
  double log_density_gradient(std::span<const double> x, std::span<double> g) const override {
    double lp = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      lp -= 0.5 * x[i] * x[i];
      g[i] = -x[i];
    }
    return lp;
  }
};

// y_i ~ N(mu, s^2), mu ~ N(m0, s0^2)
struct Conjugate final : LogDensity {
  std::vector<double> y;
  double s = 2.0, m0 = 1.0, s0 = 3.0;
  std::size_t dimension() const override { return 1; }
  double log_density_gradient(std::span<const double> x, std::span<double> g) const override {
    const double mu = x[0];
    double lp = -0.5 * (mu - m0) * (mu - m0) / (s0 * s0);
    g[0] = -(mu - m0) / (s0 * s0);
    for (double v : y) {
      lp -= 0.5 * (v - mu) * (v - mu) / (s * s);
      g[0] += (v - mu) / (s * s);
    }
    return lp;
  }
  double post_var() const { return 1.0 / (1.0 / (s0 * s0) + static_cast<double>(y.size()) / (s * s)); }
  double post_mean() const {
    return post_var() * (m0 / (s0 * s0) + std::accumulate(y.begin(), y.end(), 0.0) / (s * s));
  }
};

// Zero-mean Gaussian with sd (1, 2) and correlation 0.8.
struct Correlated final : LogDensity {
  static constexpr double s1 = 1.0, s2 = 2.0, rho = 0.8;
  std::size_t dimension() const override { return 2; }
  double log_density_gradient(std::span<const double> x, std::span<double> g) const override {
    const double a = x[0] / s1, b = x[1] / s2, c = 1.0 - rho * rho;
    g[0] = -(a - rho * b) / (c * s1);
    g[1] = -(b - rho * a) / (c * s2);
    return -0.5 * (a * a - 2.0 * rho * a * b + b * b) / c;
  }
};

// Centered version of random-effects ED50 with shared Emax: log ED50*(s)
// are parameters with a N(log mu, tau^2) density.
struct CenteredRandomEd50 final : LogDensity {
  const Posterior& post;
  std::vector<double> ratio;
  explicit CenteredRandomEd50(const Posterior& p, std::vector<double> r) : post(p), ratio(std::move(r)) {}
  std::size_t S() const { return ratio.size(); }
  std::size_t dimension() const override { return 4 + S(); }
  double log_density_gradient(std::span<const double> x, std::span<double> g) const override {
    const auto& spec = post.spec();
    const LogisticBounded bounded{spec.ed50_bounds.lower, spec.ed50_bounds.upper};
    const double e0 = x[0], emax = x[1];
    const auto mu = bounded.forward(x[2]);
    const double tau = std::exp(x[3]);
    const double lm = std::log(mu.value);
    std::vector<double> emaxs(S(), emax), ed50(S());
    for (std::size_t s = 0; s < S(); ++s) ed50[s] = std::exp(x[4 + s]) * ratio[s];
    const DataLogLik ll = post.data_loglik(e0, emaxs, ed50, 1.0);
    const auto pe0 = log_density_term(spec.priors.e0, e0);
    const auto pem = log_density_term(spec.priors.emax, emax);
    const auto pmu = log_density_term(spec.priors.ed50, mu.value);
    const auto ptau = log_density_term(spec.priors.tau_ed50, tau);
    double lp = ll.value + pe0.value + pem.value + pmu.value + mu.log_jacobian + ptau.value + x[3];
    g[0] = ll.d_e0 + pe0.derivative;
    g[1] = pem.derivative;
    double d_lm = 0.0, d_logtau = ptau.derivative * tau + 1.0;
    for (std::size_t s = 0; s < S(); ++s) {
      const double z = (x[4 + s] - lm) / tau;
      lp += -0.5 * z * z - x[3];
      g[1] += ll.d_emax[s];
      g[4 + s] = ll.d_ed50[s] * ed50[s] - z / tau;
      d_lm += z / tau;
      d_logtau += z * z - 1.0;
    }
    g[2] = (pmu.derivative + d_lm / mu.value) * mu.dvalue + mu.dlog_jacobian;
    g[3] = d_logtau;
    return lp;
  }
};

TrialData sparse_two_schedule() {
  TrialDesign d;
  d.schedules = {{0, "weekly", 168.0}, {1, "monthly", 672.0}};
  d.arms = {{0, 0.0, 20}, {0, 100.0, 20}, {1, 100.0, 20}, {1, 300.0, 20}};
  d.reference_schedule_id = 0;
  Observations o{ObservationKind::ArmLevel,
                 {{0, 0.0, -15.0, 12.0}, {0, 100.0, -60.0, 12.0}, {1, 100.0, -35.0, 12.0}, {1, 300.0, -55.0, 12.0}}};
  return TrialData(d, o);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// 3 Monte-Carlo standard errors, with ESS from the bulk estimator
bool within_mcse(const std::vector<double>& v, std::size_t chains, double truth) {
  const double mcse = std::sqrt(variance(v) / ess_bulk(v, chains));
  return std::abs(mean(v) - truth) < 3.0 * mcse;
}

}  // namespace

TEST_CASE("standard normal target") {
  SamplerConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 3000;
  cfg.warmup = 1000;
  cfg.seed = 42;
  const StdNormal target(1);
  const PosteriorDraws d = sample(target, cfg);
  REQUIRE(d.rows() == 6000);
  const auto x = d.unconstrained_column("x[0]");
  CHECK(std::abs(mean(x)) < 0.05);
  CHECK(std::abs(variance(x) - 1.0) < 0.1);
  CHECK(split_rhat(x, 3) < 1.01);
  CHECK(d.divergence_count() == 0);
}

TEST_CASE("conjugate normal posterior mean") {
  Conjugate target;
  target.y = {0.3, 2.2, -1.1, 4.0, 1.8, 0.9, 2.7, 3.1, -0.4, 1.5};
  SamplerConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 2000;
  cfg.warmup = 1000;
  cfg.seed = 7;
  const auto x = sample(target, cfg).unconstrained_column("x[0]");
  CHECK(within_mcse(x, 3, target.post_mean()));
  CHECK(variance(x) == doctest::Approx(target.post_var()).epsilon(0.1));
}

TEST_CASE("correlated Gaussian moments") {
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 3000;
  cfg.warmup = 1000;
  cfg.seed = 99;
  const PosteriorDraws d = sample(Correlated{}, cfg);
  const auto a = d.unconstrained_column("x[0]");
  const auto b = d.unconstrained_column("x[1]");
  std::vector<double> aa, bb, ab, diff2;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa.push_back(a[i] * a[i]);
    bb.push_back(b[i] * b[i]);
    ab.push_back(a[i] * b[i]);
    diff2.push_back((a[i] - b[i]) * (a[i] - b[i]));
  }
  const double s1 = Correlated::s1, s2 = Correlated::s2, rho = Correlated::rho;
  CHECK(within_mcse(a, 4, 0.0));
  CHECK(within_mcse(b, 4, 0.0));
  CHECK(within_mcse(aa, 4, s1 * s1));
  CHECK(within_mcse(bb, 4, s2 * s2));
  CHECK(within_mcse(ab, 4, rho * s1 * s2));
  CHECK(within_mcse(diff2, 4, s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2));
}

TEST_CASE("same seed reproduces draws bit for bit") {
  SamplerConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 400;
  cfg.warmup = 200;
  cfg.seed = 1234;
  const Correlated target;
  const auto a = sample(target, cfg);
  const auto b = sample(target, cfg);
  CHECK(a.unconstrained == b.unconstrained);
  cfg.threads = 3;
  const auto c = sample(target, cfg);
  CHECK(a.unconstrained == c.unconstrained);
  cfg.seed = 1235;
  CHECK(sample(target, cfg).unconstrained != a.unconstrained);
}

TEST_CASE("leapfrog conserves energy at small step sizes") {
  const Correlated target;
  const DiagHamiltonian h(target, {1.0, 1.0});
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    PhasePoint z;
    z.q = {rng.normal(), rng.normal()};
    z.p.resize(2);
    h.update(z);
    h.sample_momentum(z, rng);
    const double h0 = h.energy(z);
    for (int i = 0; i < 1000; ++i) h.leapfrog(z, 1e-4);
    CHECK(std::abs(h.energy(z) - h0) < 1e-6);
  }
}

TEST_CASE("non-centered random effects diverge less than the centered form") {
  const TrialData data = sparse_two_schedule();
  const Posterior nc(menu_model(3, data.design), data);
  const CenteredRandomEd50 centered(nc, {1.0, 4.0});

  // the centered density matches the non-centered one up to the Jacobian of u -> log ED50
  {
    std::vector<double> x(nc.dimension());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.3 * static_cast<double>(i) - 0.5;
    const NaturalParams p = nc.to_natural(x);
    std::vector<double> xc{p.e0, p.emax[0], x[2], std::log(p.tau_ed50)};
    for (std::size_t s = 0; s < 2; ++s) xc.push_back(std::log(p.ed50[s] / centered.ratio[s]));
    std::vector<double> g(xc.size());
    const double lc = centered.log_density_gradient(xc, g);
    CHECK(lc + 2.0 * std::log(p.tau_ed50) == doctest::Approx(nc.log_density(x)).epsilon(1e-10));
    for (std::size_t j = 0; j < xc.size(); ++j) {
      auto xp = xc, xm = xc;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      std::vector<double> scratch(xc.size());
      const double fd = (centered.log_density_gradient(xp, scratch) - centered.log_density_gradient(xm, scratch)) / 2e-6;
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  SamplerConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 2000;
  cfg.warmup = 1000;
  cfg.seed = 2;
  const auto d_nc = sample(nc, cfg);
  const auto d_c = sample(centered, cfg);
  MESSAGE("divergences: non-centered " << d_nc.divergence_count() << ", centered " << d_c.divergence_count());
  CHECK(static_cast<double>(d_nc.divergence_count()) < 0.005 * static_cast<double>(d_nc.rows()));
  CHECK(d_c.divergence_count() > d_nc.divergence_count());
}

TEST_CASE("natural view and pointwise log-likelihood are stored per draw") {
  const TrialData data = sparse_two_schedule();
  const Posterior post(menu_model(5, data.design), data);
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 300;
  cfg.warmup = 150;
  cfg.seed = 5;
  const auto d = sample(post, cfg);
  REQUIRE(d.pointwise_dim == 4);
  const std::size_t dim = d.names.size();
  const auto bounds = post.spec().ed50_bounds;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::span<const double> x(d.unconstrained.data() + r * dim, dim);
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) sum += d.pointwise_loglik[r * 4 + j];
    CHECK(std::abs(sum - post.terms(x).loglik) < 1e-8);
  }
  for (double v : d.natural_column("tau_ed50")) CHECK(v >= 0.0);
  for (double v : d.natural_column("mu_ed50")) CHECK((v > bounds.lower && v < bounds.upper));
  CHECK_THROWS_AS(d.natural_column("nope"), InputError);
}

TEST_CASE("configuration checks") {
  SamplerConfig cfg;
  cfg.warmup = cfg.iterations;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.warmup = 10;
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("a density that is never finite fails to initialize") {
  struct Nowhere final : LogDensity {
    std::size_t dimension() const override { return 2; }
    double log_density_gradient(std::span<const double>, std::span<double> g) const override {
      g[0] = g[1] = 0.0;
      return -std::numeric_limits<double>::infinity();
    }
  };
  SamplerConfig cfg;
  cfg.iterations = 20;
  cfg.warmup = 10;
  CHECK_THROWS_AS(sample(Nowhere{}, cfg), InitializationFailure);
}
