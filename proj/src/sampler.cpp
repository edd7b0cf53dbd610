#include "dosepool/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinStepSize = 1e-12;

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_to(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

std::vector<double> sum_of(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

bool no_u_turn(const std::vector<double>& p_sharp_minus, const std::vector<double>& p_sharp_plus,
               const std::vector<double>& rho) {
  return dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0;
}

// Dual averaging of log step size toward a target acceptance statistic.
class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double delta) : delta_(delta) {}

  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  double learn(double accept_stat) {
    counter_ += 1.0;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step_size() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kKappa = 0.75;
  static constexpr double kT0 = 10.0;
  double delta_;
  double mu_ = std::log(10.0);
  double counter_ = 0.0, s_bar_ = 0.0, x_bar_ = 0.0;
};

// Windowed diagonal-metric estimation: a fast initial buffer, doubling slow
// windows, then a fast terminal buffer.
class MetricAdapter {
 public:
  MetricAdapter(int num_warmup, std::size_t dim) : num_warmup_(num_warmup), mean_(dim), m2_(dim) {
    if (num_warmup >= 20 && init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
      init_buffer_ = static_cast<int>(0.15 * num_warmup);
      term_buffer_ = static_cast<int>(0.1 * num_warmup);
      base_window_ = num_warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + base_window_ - 1;
  }

  // Returns true when a window closed and inv_metric was updated.
  bool learn(std::vector<double>& inv_metric, std::span<const double> q) {
    if (in_window()) add_sample(q);
    if (end_of_window()) {
      compute_next_window();
      const double n = static_cast<double>(count_);
      for (std::size_t i = 0; i < inv_metric.size(); ++i) {
        const double var = m2_[i] / (n - 1.0);
        inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
      }
      count_ = 0;
      std::fill(mean_.begin(), mean_.end(), 0.0);
      std::fill(m2_.begin(), m2_.end(), 0.0);
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ && counter_ != num_warmup_;
  }
  bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }
  void compute_next_window() {
    if (next_window_ == num_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != num_warmup_ - term_buffer_ - 1) {
      if (next_window_ + 2 * window_size_ >= num_warmup_ - term_buffer_) next_window_ = num_warmup_ - term_buffer_ - 1;
    }
  }
  void add_sample(std::span<const double> q) {
    ++count_;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q[i] - mean_[i];
      mean_[i] += d / static_cast<double>(count_);
      m2_[i] += d * (q[i] - mean_[i]);
    }
  }

  int num_warmup_;
  int init_buffer_ = 75, term_buffer_ = 50, base_window_ = 25;
  int window_size_ = 0, next_window_ = 0, counter_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_;
};

struct Transition {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

struct ChainOutput {
  std::vector<double> unconstrained, natural, pointwise;
  std::vector<std::uint8_t> divergent;
  ChainStats stats;
};

class NutsChain {
 public:
  NutsChain(const LogDensity& model, const SamplerConfig& cfg, int chain)
      : model_(model),
        cfg_(cfg),
        rng_(cfg.seed, static_cast<std::uint64_t>(chain)),
        ham_(model, std::vector<double>(model.dimension(), 1.0)),
        dim_(model.dimension()) {}

  ChainOutput run() {
    initialize();
    StepSizeAdapter step_adapter(cfg_.target_accept);
    step_adapter.set_mu(std::log(10.0 * epsilon_));
    MetricAdapter metric_adapter(cfg_.warmup, dim_);
    init_step_size();

    ChainOutput out;
    const std::size_t keep = static_cast<std::size_t>(cfg_.draws_per_chain());
    const std::size_t nat_dim = model_.natural_dimension();
    const std::size_t pw_dim = cfg_.store_pointwise ? model_.pointwise_dimension() : 0;
    out.unconstrained.reserve(keep * dim_);
    out.natural.resize(keep * nat_dim);
    out.pointwise.resize(keep * pw_dim);
    double accept_sum = 0.0, depth_sum = 0.0;

    for (int it = 0; it < cfg_.iterations; ++it) {
      const bool warming = it < cfg_.warmup;
      const Transition t = transition();
      if (warming) {
        epsilon_ = step_adapter.learn(t.accept_stat);
        if (metric_adapter.learn(ham_.inv_metric(), z_.q)) {
          init_step_size();
          step_adapter.set_mu(std::log(10.0 * epsilon_));
          step_adapter.restart();
        }
        if (it + 1 == cfg_.warmup) epsilon_ = step_adapter.final_step_size();
        if (!(epsilon_ >= kMinStepSize)) {
          throw AdaptationFailure(fmt::format("step size underflow ({:.3g}) during warmup", epsilon_));
        }
        continue;
      }
      const std::size_t row = static_cast<std::size_t>(it - cfg_.warmup);
      out.unconstrained.insert(out.unconstrained.end(), z_.q.begin(), z_.q.end());
      if (nat_dim) model_.write_natural(z_.q, std::span(out.natural).subspan(row * nat_dim, nat_dim));
      if (pw_dim) model_.write_pointwise(z_.q, std::span(out.pointwise).subspan(row * pw_dim, pw_dim));
      out.divergent.push_back(t.divergent ? 1 : 0);
      out.stats.divergences += t.divergent ? 1 : 0;
      accept_sum += t.accept_stat;
      depth_sum += t.depth;
    }
    out.stats.step_size = epsilon_;
    out.stats.inv_metric = ham_.inv_metric();
    out.stats.mean_accept = keep ? accept_sum / static_cast<double>(keep) : 0.0;
    out.stats.mean_tree_depth = keep ? depth_sum / static_cast<double>(keep) : 0.0;
    out.stats.leapfrog_steps = leapfrogs_;
    return out;
  }

 private:
  void initialize() {
    z_.q.assign(dim_, 0.0);
    z_.p.assign(dim_, 0.0);
    z_.grad.assign(dim_, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (auto& v : z_.q) v = rng_.uniform(-cfg_.init_radius, cfg_.init_radius);
      ham_.update(z_);
      const bool ok = std::isfinite(z_.log_density) &&
                      std::all_of(z_.grad.begin(), z_.grad.end(), [](double g) { return std::isfinite(g); });
      if (ok) return;
    }
    throw InitializationFailure("no finite log density and gradient after 100 random initializations");
  }

  double energy_or_inf(const PhasePoint& z) const {
    const double h = ham_.energy(z);
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }

  void init_step_size() {
    const PhasePoint z_init = z_;
    auto trial = [&] {
      z_ = z_init;
      ham_.sample_momentum(z_, rng_);
      const double h0 = ham_.energy(z_);
      ham_.leapfrog(z_, epsilon_);
      return h0 - energy_or_inf(z_);
    };
    const double log_target = std::log(0.8);
    double delta_h = trial();
    const int direction = delta_h > log_target ? 1 : -1;
    for (;;) {
      delta_h = trial();
      if (direction == 1 && !(delta_h > log_target)) break;
      if (direction == -1 && !(delta_h < log_target)) break;
      epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
      if (epsilon_ > 1e7) throw AdaptationFailure("step size search diverged; the posterior may be improper");
      if (!(epsilon_ >= kMinStepSize)) throw AdaptationFailure("no acceptably small step size found");
    }
    z_ = z_init;
  }

  Transition transition() {
    ham_.sample_momentum(z_, rng_);
    ham_.update(z_);
    PhasePoint z_fwd = z_, z_bck = z_, z_sample = z_, z_propose = z_;

    std::vector<double> p_sharp(dim_);
    ham_.velocity(z_, p_sharp);
    std::vector<double> p_fwd_fwd = z_.p, p_sharp_fwd_fwd = p_sharp;
    std::vector<double> p_fwd_bck = z_.p, p_sharp_fwd_bck = p_sharp;
    std::vector<double> p_bck_fwd = z_.p, p_sharp_bck_fwd = p_sharp;
    std::vector<double> p_bck_bck = z_.p, p_sharp_bck_bck = p_sharp;
    std::vector<double> rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = ham_.energy(z_);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    divergent_ = false;
    int depth = 0;

    while (depth < cfg_.max_tree_depth) {
      std::vector<double> rho_fwd(dim_, 0.0), rho_bck(dim_, 0.0);
      bool valid = false;
      double log_sum_weight_subtree = kNegInf;
      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        z_ = z_fwd;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd, h0, 1.0,
                           n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = z_;
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        z_ = z_bck;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd, p_bck_bck, h0, -1.0,
                           n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = z_;
      }
      if (!valid) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = sum_of(rho_bck, rho_fwd);
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, sum_of(rho_bck, p_fwd_bck));
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, sum_of(rho_fwd, p_bck_fwd));
      if (!persist) break;
    }

    leapfrogs_ += static_cast<std::size_t>(n_leapfrog);
    z_ = z_sample;
    return {n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0, depth, n_leapfrog, divergent_};
  }

  bool build_tree(int depth, PhasePoint& z_propose, std::vector<double>& p_sharp_beg, std::vector<double>& p_sharp_end,
                  std::vector<double>& rho, std::vector<double>& p_beg, std::vector<double>& p_end, double h0,
                  double sign, int& n_leapfrog, double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      ham_.leapfrog(z_, sign * epsilon_);
      ++n_leapfrog;
      const double h = energy_or_inf(z_);
      if (h - h0 > cfg_.max_delta_h) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z_;
      ham_.velocity(z_, p_sharp_beg);
      p_sharp_end = p_sharp_beg;
      add_to(rho, z_.p);
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    double log_sum_weight_init = kNegInf;
    std::vector<double> p_init_end(dim_), p_sharp_init_end(dim_), rho_init(dim_, 0.0);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, h0, sign,
                    n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = kNegInf;
    std::vector<double> p_final_beg(dim_), p_sharp_final_beg(dim_), rho_final(dim_, 0.0);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, h0, sign,
                    n_leapfrog, log_sum_weight_final, sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const std::vector<double> rho_subtree = sum_of(rho_init, rho_final);
    add_to(rho, rho_subtree);
    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, sum_of(rho_init, p_final_beg));
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, sum_of(rho_final, p_init_end));
    return persist;
  }

  const LogDensity& model_;
  const SamplerConfig& cfg_;
  Rng rng_;
  DiagHamiltonian ham_;
  std::size_t dim_;
  PhasePoint z_;
  double epsilon_ = 1.0;
  bool divergent_ = false;
  std::size_t leapfrogs_ = 0;
};

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw InputError("chains must be positive");
  if (iterations < 1 || warmup < 1) throw InputError("iterations and warmup must be positive");
  if (!(warmup < iterations)) throw InputError("warmup must be smaller than iterations");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target_accept must lie in (0, 1)");
  if (max_tree_depth < 1) throw InputError("max_tree_depth must be positive");
}

DiagHamiltonian::DiagHamiltonian(const LogDensity& model, std::vector<double> inv_metric)
    : model_(model), inv_metric_(std::move(inv_metric)) {}

void DiagHamiltonian::update(PhasePoint& z) const {
  z.grad.resize(z.q.size());
  z.log_density = model_.log_density_gradient(z.q, z.grad);
}

double DiagHamiltonian::energy(const PhasePoint& z) const {
  double k = 0.0;
  for (std::size_t i = 0; i < z.p.size(); ++i) k += inv_metric_[i] * z.p[i] * z.p[i];
  return -z.log_density + 0.5 * k;
}

void DiagHamiltonian::leapfrog(PhasePoint& z, double epsilon) const {
  const double half = 0.5 * epsilon;
  for (std::size_t i = 0; i < z.q.size(); ++i) z.p[i] += half * z.grad[i];
  for (std::size_t i = 0; i < z.q.size(); ++i) z.q[i] += epsilon * inv_metric_[i] * z.p[i];
  update(z);
  for (std::size_t i = 0; i < z.q.size(); ++i) z.p[i] += half * z.grad[i];
}

void DiagHamiltonian::velocity(const PhasePoint& z, std::span<double> out) const {
  for (std::size_t i = 0; i < z.p.size(); ++i) out[i] = inv_metric_[i] * z.p[i];
}

void DiagHamiltonian::sample_momentum(PhasePoint& z, Rng& rng) const {
  z.p.resize(z.q.size());
  for (std::size_t i = 0; i < z.p.size(); ++i) z.p[i] = rng.normal() / std::sqrt(inv_metric_[i]);
}

std::size_t PosteriorDraws::divergence_count() const {
  return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), std::uint8_t{1}));
}

namespace {
std::vector<double> extract(const std::vector<std::string>& names, const std::vector<double>& data,
                            std::size_t rows, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError(fmt::format("no parameter named '{}'", name));
  const std::size_t col = static_cast<std::size_t>(it - names.begin());
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * names.size() + col];
  return out;
}
}  // namespace

std::vector<double> PosteriorDraws::natural_column(std::string_view name) const {
  return extract(natural_names, natural, rows(), name);
}

std::vector<double> PosteriorDraws::unconstrained_column(std::string_view name) const {
  return extract(names, unconstrained, rows(), name);
}

bool PosteriorDraws::has_natural(std::string_view name) const {
  return std::find(natural_names.begin(), natural_names.end(), name) != natural_names.end();
}

PosteriorDraws sample(const LogDensity& model, const SamplerConfig& cfg) {
  cfg.validate();
  const auto n_chains = static_cast<std::size_t>(cfg.chains);
  std::vector<ChainOutput> outputs(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  auto run_chain = [&](std::size_t c) {
    try {
      outputs[c] = NutsChain(model, cfg, static_cast<int>(c)).run();
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (cfg.threads > 1 && n_chains > 1) {
    std::vector<std::jthread> workers;
    const auto n_threads = std::min(n_chains, static_cast<std::size_t>(cfg.threads));
    for (std::size_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t c = t; c < n_chains; c += n_threads) run_chain(c);
      });
    }
  } else {
    for (std::size_t c = 0; c < n_chains; ++c) run_chain(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorDraws d;
  d.chains = n_chains;
  d.draws_per_chain = static_cast<std::size_t>(cfg.draws_per_chain());
  d.names = model.parameter_names();
  d.natural_names = model.natural_names();
  d.pointwise_dim = cfg.store_pointwise ? model.pointwise_dimension() : 0;
  for (auto& o : outputs) {
    d.unconstrained.insert(d.unconstrained.end(), o.unconstrained.begin(), o.unconstrained.end());
    d.natural.insert(d.natural.end(), o.natural.begin(), o.natural.end());
    d.pointwise_loglik.insert(d.pointwise_loglik.end(), o.pointwise.begin(), o.pointwise.end());
    d.divergent.insert(d.divergent.end(), o.divergent.begin(), o.divergent.end());
    d.chain_stats.push_back(std::move(o.stats));
  }
  return d;
}

}  // namespace dosepool
