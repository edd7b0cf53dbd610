#include "dosepool/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "dosepool/error.hpp"
#include "dosepool/simd/kernels.hpp"
#include "dosepool/transforms.hpp"

namespace dosepool {

std::vector<std::string> LogDensity::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dimension(); ++i) names.push_back(fmt::format("x[{}]", i));
  return names;
}

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::Shared:
      return "shared";
    case Pooling::FixedEffects:
      return "fe";
    case Pooling::RandomEffects:
      return "re";
  }
  return "?";
}

Pooling parse_pooling(std::string_view text) {
  if (text == "shared") return Pooling::Shared;
  if (text == "fe" || text == "fixed" || text == "fixed-effects") return Pooling::FixedEffects;
  if (text == "re" || text == "random" || text == "random-effects") return Pooling::RandomEffects;
  throw InputError(fmt::format("unknown pooling mode '{}' (expected shared|fe|re)", text));
}

ModelSpec ModelSpec::make(Pooling ed50, Pooling emax, const TrialDesign& design) {
  ModelSpec s;
  s.ed50 = ed50;
  s.emax = emax;
  s.reference_schedule_id = design.reference_schedule_id;
  s.prior_dose_scale = ed50 == Pooling::Shared ? design.max_dose() : design.max_raw_dose();
  s.ed50_bounds = {0.0, prior::FunctionalUniformApprox::kUpperRatio * s.prior_dose_scale};
  s.priors = PriorSet::defaults(s.prior_dose_scale);
  s.label = fmt::format("ed50={},emax={}", to_string(ed50), to_string(emax));
  return s;
}

ModelSpec ModelSpec::with_reference(int schedule_id, const TrialDesign& design) const {
  ModelSpec s = *this;
  const double ratio =
      design.schedule(schedule_id).interval_hours / design.schedule(reference_schedule_id).interval_hours;
  s.reference_schedule_id = schedule_id;
  if (ed50 == Pooling::FixedEffects) return s;  // own-scale parameters do not depend on the reference
  s.prior_dose_scale *= ratio;
  s.ed50_bounds = {ed50_bounds.lower * ratio, ed50_bounds.upper * ratio};
  if (auto* fu = std::get_if<prior::FunctionalUniformApprox>(&s.priors.ed50)) fu->max_dose *= ratio;
  return s;
}

void ModelSpec::validate(const TrialDesign& design) const {
  (void)design.schedule(reference_schedule_id);
  if (!(prior_dose_scale > 0.0)) throw InputError("prior dose scale must be positive");
  if (!(ed50_bounds.lower >= 0.0) || !(ed50_bounds.upper > ed50_bounds.lower) || !std::isfinite(ed50_bounds.upper)) {
    throw InputError(fmt::format("invalid ED50 bounds [{}, {}]", ed50_bounds.lower, ed50_bounds.upper));
  }
  for (const auto* p : {&priors.e0, &priors.emax, &priors.ed50, &priors.sigma, &priors.tau_ed50, &priors.tau_emax}) {
    validate_prior(*p);
  }
  const Support sup = prior_support(priors.ed50);
  if (ed50_bounds.lower < sup.lower || ed50_bounds.upper > sup.upper * (1.0 + 1e-12)) {
    throw InputError(fmt::format("ED50 bounds [{}, {}] exceed the support of the ED50 prior {}", ed50_bounds.lower,
                                 ed50_bounds.upper, describe(priors.ed50)));
  }
  for (const auto* p : {&priors.sigma, &priors.tau_ed50, &priors.tau_emax}) {
    if (prior_support(*p).lower < 0.0) throw InputError("scale priors must have non-negative support");
  }
}

ModelSpec menu_model(int number, const TrialDesign& design) {
  using P = Pooling;
  static constexpr std::pair<P, P> kMenu[] = {{P::Shared, P::Shared},
                                              {P::FixedEffects, P::Shared},
                                              {P::RandomEffects, P::Shared},
                                              {P::FixedEffects, P::FixedEffects},
                                              {P::RandomEffects, P::RandomEffects}};
  if (number < 1 || number > 5) throw InputError(fmt::format("model number {} outside 1..5", number));
  const auto [ed50, emax] = kMenu[number - 1];
  ModelSpec s = ModelSpec::make(ed50, emax, design);
  s.label = fmt::format("Model {}", number);
  return s;
}

Posterior::Posterior(ModelSpec spec, const TrialData& data)
    : spec_(std::move(spec)), kind_(data.observations.kind), schedules_(data.design.schedules) {
  spec_.validate(data.design);
  const std::size_t S = schedules_.size();
  const double ref_hours = data.design.schedule(spec_.reference_schedule_id).interval_hours;
  for (const auto& s : schedules_) interval_ratio_.push_back(s.interval_hours / ref_hours);

  const auto& rows = data.observations.rows;
  n_obs_ = rows.size();
  order_.resize(n_obs_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].schedule_id < rows[b].schedule_id; });
  segment_begin_.assign(S + 1, 0);
  for (std::size_t k : order_) {
    const auto& r = rows[k];
    dose_.push_back(r.dose);
    value_.push_back(r.value);
    if (kind_ == ObservationKind::ArmLevel) {
      weight_.push_back(1.0 / (r.se * r.se));
      const_term_.push_back(-0.5 * std::log(2.0 * std::numbers::pi * r.se * r.se));
    } else {
      weight_.push_back(1.0);
      const_term_.push_back(-0.5 * std::log(2.0 * std::numbers::pi));
    }
    ++segment_begin_[static_cast<std::size_t>(r.schedule_id) + 1];
  }
  std::partial_sum(segment_begin_.begin(), segment_begin_.end(), segment_begin_.begin());
  const_sum_ = std::accumulate(const_term_.begin(), const_term_.end(), 0.0);

  std::size_t next = 0;
  i_e0_ = next++;
  i_emax_ = next;
  switch (spec_.emax) {
    case Pooling::Shared:
      next += 1;
      break;
    case Pooling::FixedEffects:
      next += S;
      break;
    case Pooling::RandomEffects:
      next += S + 1;
      i_log_tau_emax_ = next++;
      break;
  }
  i_ed50_ = next;
  switch (spec_.ed50) {
    case Pooling::Shared:
      next += 1;
      break;
    case Pooling::FixedEffects:
      next += S;
      break;
    case Pooling::RandomEffects:
      next += S + 1;
      i_log_tau_ed50_ = next++;
      break;
  }
  if (kind_ == ObservationKind::PatientLevel) i_log_sigma_ = next++;
  dim_ = next;
}

DataLogLik Posterior::data_loglik(double e0, std::span<const double> emax, std::span<const double> ed50,
                                  double sigma) const {
  const std::size_t S = schedules_.size();
  const auto& k = simd::kernels();
  DataLogLik out;
  out.d_emax.assign(S, 0.0);
  out.d_ed50.assign(S, 0.0);
  const double inv_var = kind_ == ObservationKind::PatientLevel ? 1.0 / (sigma * sigma) : 1.0;
  double rr = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t b = segment_begin_[s];
    const std::size_t n = segment_begin_[s + 1] - b;
    if (n == 0) continue;
    const auto m = k.moments(std::span(dose_).subspan(b, n), std::span(value_).subspan(b, n),
                             std::span(weight_).subspan(b, n), e0, emax[s], ed50[s]);
    rr += m.rr;
    out.d_e0 += m.r * inv_var;
    out.d_emax[s] = m.rh * inv_var;
    out.d_ed50[s] = -emax[s] * m.rq * inv_var;
  }
  const double n = static_cast<double>(n_obs_);
  if (kind_ == ObservationKind::PatientLevel) {
    out.value = -0.5 * rr * inv_var - n * std::log(sigma) + const_sum_;
    out.d_log_sigma = rr * inv_var - n;
  } else {
    out.value = -0.5 * rr + const_sum_;
  }
  return out;
}

double Posterior::evaluate(std::span<const double> x, std::span<double> grad, LogPosteriorTerms* terms) const {
  const std::size_t S = schedules_.size();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  LogPosteriorTerms t;

  const double e0 = x[i_e0_];
  {
    const auto p = log_density_term(spec_.priors.e0, e0);
    t.prior += p.value;
    if (want_grad) grad[i_e0_] += p.derivative;
  }

  // Emax per schedule
  std::vector<double> emax(S);
  double tau_emax = 0.0;
  switch (spec_.emax) {
    case Pooling::Shared: {
      std::fill(emax.begin(), emax.end(), x[i_emax_]);
      const auto p = log_density_term(spec_.priors.emax, x[i_emax_]);
      t.prior += p.value;
      if (want_grad) grad[i_emax_] += p.derivative;
      break;
    }
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) {
        emax[s] = x[i_emax_ + s];
        const auto p = log_density_term(spec_.priors.emax, emax[s]);
        t.prior += p.value;
        if (want_grad) grad[i_emax_ + s] += p.derivative;
      }
      break;
    case Pooling::RandomEffects: {
      const double mu = x[i_emax_];
      const auto tt = LogPositive{}.forward(x[i_log_tau_emax_]);
      tau_emax = tt.value;
      const auto pm = log_density_term(spec_.priors.emax, mu);
      const auto pt = log_density_term(spec_.priors.tau_emax, tau_emax);
      t.prior += pm.value + pt.value;
      t.jacobian += tt.log_jacobian;
      for (std::size_t s = 0; s < S; ++s) {
        const double u = x[i_emax_ + 1 + s];
        emax[s] = mu + u * tau_emax;
        t.deviates += -0.5 * u * u;
        if (want_grad) grad[i_emax_ + 1 + s] += -u;
      }
      if (want_grad) {
        grad[i_emax_] += pm.derivative;
        grad[i_log_tau_emax_] += pt.derivative * tt.dvalue + tt.dlog_jacobian;
      }
      break;
    }
  }

  // ED50 per schedule (own scale)
  std::vector<double> ed50(S);
  const LogisticBounded bounded{spec_.ed50_bounds.lower, spec_.ed50_bounds.upper};
  double tau_ed50 = 0.0;
  double mu_ed50 = 0.0;
  TransformValue mu_tv{};
  switch (spec_.ed50) {
    case Pooling::Shared: {
      mu_tv = bounded.forward(x[i_ed50_]);
      mu_ed50 = mu_tv.value;
      for (std::size_t s = 0; s < S; ++s) ed50[s] = mu_ed50 * interval_ratio_[s];
      break;
    }
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) {
        const auto tv = bounded.forward(x[i_ed50_ + s]);
        ed50[s] = tv.value;
        const auto p = log_density_term(spec_.priors.ed50, tv.value);
        t.prior += p.value;
        t.jacobian += tv.log_jacobian;
        if (want_grad) grad[i_ed50_ + s] += p.derivative * tv.dvalue + tv.dlog_jacobian;
      }
      break;
    case Pooling::RandomEffects: {
      mu_tv = bounded.forward(x[i_ed50_]);
      mu_ed50 = mu_tv.value;
      const auto tt = LogPositive{}.forward(x[i_log_tau_ed50_]);
      tau_ed50 = tt.value;
      const auto pt = log_density_term(spec_.priors.tau_ed50, tau_ed50);
      t.prior += pt.value;
      t.jacobian += tt.log_jacobian;
      const double log_mu = std::log(mu_ed50);
      for (std::size_t s = 0; s < S; ++s) {
        const double u = x[i_ed50_ + 1 + s];
        ed50[s] = std::exp(log_mu + u * tau_ed50) * interval_ratio_[s];
        t.deviates += -0.5 * u * u;
        if (want_grad) grad[i_ed50_ + 1 + s] += -u;
      }
      if (want_grad) grad[i_log_tau_ed50_] += pt.derivative * tt.dvalue + tt.dlog_jacobian;
      break;
    }
  }
  if (spec_.ed50 != Pooling::FixedEffects) {
    const auto p = log_density_term(spec_.priors.ed50, mu_ed50);
    t.prior += p.value;
    t.jacobian += mu_tv.log_jacobian;
    if (want_grad) grad[i_ed50_] += p.derivative * mu_tv.dvalue + mu_tv.dlog_jacobian;
  }

  double sigma = 1.0;
  if (kind_ == ObservationKind::PatientLevel) {
    const auto st = LogPositive{}.forward(x[i_log_sigma_]);
    sigma = st.value;
    const auto p = log_density_term(spec_.priors.sigma, sigma);
    t.prior += p.value;
    t.jacobian += st.log_jacobian;
    if (want_grad) grad[i_log_sigma_] += p.derivative * st.dvalue + st.dlog_jacobian;
  }

  const DataLogLik ll = data_loglik(e0, emax, ed50, sigma);
  t.loglik = ll.value;

  if (want_grad) {
    grad[i_e0_] += ll.d_e0;
    switch (spec_.emax) {
      case Pooling::Shared:
        for (std::size_t s = 0; s < S; ++s) grad[i_emax_] += ll.d_emax[s];
        break;
      case Pooling::FixedEffects:
        for (std::size_t s = 0; s < S; ++s) grad[i_emax_ + s] += ll.d_emax[s];
        break;
      case Pooling::RandomEffects:
        for (std::size_t s = 0; s < S; ++s) {
          const double u = x[i_emax_ + 1 + s];
          grad[i_emax_] += ll.d_emax[s];
          grad[i_emax_ + 1 + s] += ll.d_emax[s] * tau_emax;
          grad[i_log_tau_emax_] += ll.d_emax[s] * u * tau_emax;
        }
        break;
    }
    switch (spec_.ed50) {
      case Pooling::Shared: {
        double d_mu = 0.0;
        for (std::size_t s = 0; s < S; ++s) d_mu += ll.d_ed50[s] * interval_ratio_[s];
        grad[i_ed50_] += d_mu * mu_tv.dvalue;
        break;
      }
      case Pooling::FixedEffects:
        for (std::size_t s = 0; s < S; ++s) {
          grad[i_ed50_ + s] += ll.d_ed50[s] * bounded.forward(x[i_ed50_ + s]).dvalue;
        }
        break;
      case Pooling::RandomEffects: {
        double d_mu = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          const double u = x[i_ed50_ + 1 + s];
          const double g = ll.d_ed50[s] * ed50[s];  // d loglik / d log ED50(s)
          d_mu += g / mu_ed50;
          grad[i_ed50_ + 1 + s] += g * tau_ed50;
          grad[i_log_tau_ed50_] += g * u * tau_ed50;
        }
        grad[i_ed50_] += d_mu * mu_tv.dvalue;
        break;
      }
    }
    if (kind_ == ObservationKind::PatientLevel) grad[i_log_sigma_] += ll.d_log_sigma;
  }

  if (terms) *terms = t;
  return t.total();
}

double Posterior::log_density_gradient(std::span<const double> x, std::span<double> grad) const {
  return evaluate(x, grad, nullptr);
}

double Posterior::log_density(std::span<const double> x) const { return evaluate(x, {}, nullptr); }

LogPosteriorTerms Posterior::terms(std::span<const double> x) const {
  LogPosteriorTerms t;
  evaluate(x, {}, &t);
  return t;
}

std::vector<std::string> Posterior::parameter_names() const {
  std::vector<std::string> n(dim_);
  n[i_e0_] = "e0";
  const std::size_t S = schedules_.size();
  switch (spec_.emax) {
    case Pooling::Shared:
      n[i_emax_] = "emax";
      break;
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) n[i_emax_ + s] = fmt::format("emax[{}]", schedules_[s].label);
      break;
    case Pooling::RandomEffects:
      n[i_emax_] = "mu_emax";
      for (std::size_t s = 0; s < S; ++s) n[i_emax_ + 1 + s] = fmt::format("emax_raw[{}]", schedules_[s].label);
      n[i_log_tau_emax_] = "log_tau_emax";
      break;
  }
  switch (spec_.ed50) {
    case Pooling::Shared:
      n[i_ed50_] = "ed50_logit";
      break;
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) n[i_ed50_ + s] = fmt::format("ed50_logit[{}]", schedules_[s].label);
      break;
    case Pooling::RandomEffects:
      n[i_ed50_] = "mu_ed50_logit";
      for (std::size_t s = 0; s < S; ++s) n[i_ed50_ + 1 + s] = fmt::format("ed50_raw[{}]", schedules_[s].label);
      n[i_log_tau_ed50_] = "log_tau_ed50";
      break;
  }
  if (kind_ == ObservationKind::PatientLevel) n[i_log_sigma_] = "log_sigma";
  return n;
}

std::vector<std::string> Posterior::natural_names() const {
  std::vector<std::string> n{"e0"};
  if (spec_.emax == Pooling::Shared) {
    n.emplace_back("emax");
  } else {
    for (const auto& s : schedules_) n.push_back(fmt::format("emax[{}]", s.label));
  }
  for (const auto& s : schedules_) n.push_back(fmt::format("ed50[{}]", s.label));
  if (spec_.ed50 == Pooling::RandomEffects) {
    n.emplace_back("mu_ed50");
    n.emplace_back("tau_ed50");
  }
  if (spec_.emax == Pooling::RandomEffects) {
    n.emplace_back("mu_emax");
    n.emplace_back("tau_emax");
  }
  if (kind_ == ObservationKind::PatientLevel) n.emplace_back("sigma");
  return n;
}

std::size_t Posterior::natural_dimension() const { return natural_names().size(); }

void Posterior::write_natural(std::span<const double> x, std::span<double> out) const {
  const NaturalParams p = to_natural(x);
  std::size_t k = 0;
  out[k++] = p.e0;
  if (spec_.emax == Pooling::Shared) {
    out[k++] = p.emax[0];
  } else {
    for (double v : p.emax) out[k++] = v;
  }
  for (double v : p.ed50) out[k++] = v;
  if (spec_.ed50 == Pooling::RandomEffects) {
    out[k++] = p.mu_ed50;
    out[k++] = p.tau_ed50;
  }
  if (spec_.emax == Pooling::RandomEffects) {
    out[k++] = p.mu_emax;
    out[k++] = p.tau_emax;
  }
  if (kind_ == ObservationKind::PatientLevel) out[k++] = p.sigma;
}

void Posterior::write_pointwise(std::span<const double> x, std::span<double> out) const {
  const NaturalParams p = to_natural(x);
  const auto& k = simd::kernels();
  std::vector<double> sq(n_obs_);
  for (std::size_t s = 0; s < schedules_.size(); ++s) {
    const std::size_t b = segment_begin_[s];
    const std::size_t n = segment_begin_[s + 1] - b;
    if (n == 0) continue;
    k.weighted_residuals(std::span(dose_).subspan(b, n), std::span(value_).subspan(b, n),
                         std::span(weight_).subspan(b, n), p.e0, p.emax[s], p.ed50[s], std::span(sq).subspan(b, n));
  }
  const bool patient = kind_ == ObservationKind::PatientLevel;
  const double inv_var = patient ? 1.0 / (p.sigma * p.sigma) : 1.0;
  const double log_sigma = patient ? std::log(p.sigma) : 0.0;
  for (std::size_t i = 0; i < n_obs_; ++i) {
    out[order_[i]] = -0.5 * sq[i] * inv_var - log_sigma + const_term_[i];
  }
}

NaturalParams Posterior::to_natural(std::span<const double> x) const {
  const std::size_t S = schedules_.size();
  NaturalParams p;
  p.e0 = x[i_e0_];
  p.emax.resize(S);
  p.ed50.resize(S);
  switch (spec_.emax) {
    case Pooling::Shared:
      std::fill(p.emax.begin(), p.emax.end(), x[i_emax_]);
      break;
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) p.emax[s] = x[i_emax_ + s];
      break;
    case Pooling::RandomEffects:
      p.mu_emax = x[i_emax_];
      p.tau_emax = std::exp(x[i_log_tau_emax_]);
      for (std::size_t s = 0; s < S; ++s) p.emax[s] = p.mu_emax + x[i_emax_ + 1 + s] * p.tau_emax;
      break;
  }
  const LogisticBounded bounded{spec_.ed50_bounds.lower, spec_.ed50_bounds.upper};
  switch (spec_.ed50) {
    case Pooling::Shared: {
      const double v = bounded.forward(x[i_ed50_]).value;
      for (std::size_t s = 0; s < S; ++s) p.ed50[s] = v * interval_ratio_[s];
      break;
    }
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) p.ed50[s] = bounded.forward(x[i_ed50_ + s]).value;
      break;
    case Pooling::RandomEffects:
      p.mu_ed50 = bounded.forward(x[i_ed50_]).value;
      p.tau_ed50 = std::exp(x[i_log_tau_ed50_]);
      for (std::size_t s = 0; s < S; ++s) {
        p.ed50[s] = std::exp(std::log(p.mu_ed50) + x[i_ed50_ + 1 + s] * p.tau_ed50) * interval_ratio_[s];
      }
      break;
  }
  if (kind_ == ObservationKind::PatientLevel) p.sigma = std::exp(x[i_log_sigma_]);
  return p;
}

std::vector<double> Posterior::from_natural(const NaturalParams& p) const {
  const std::size_t S = schedules_.size();
  if (p.emax.size() != S || p.ed50.size() != S) throw InputError("natural parameters need one entry per schedule");
  std::vector<double> x(dim_);
  x[i_e0_] = p.e0;
  switch (spec_.emax) {
    case Pooling::Shared:
      x[i_emax_] = p.emax[0];
      break;
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) x[i_emax_ + s] = p.emax[s];
      break;
    case Pooling::RandomEffects:
      if (!(p.tau_emax > 0.0) || std::isnan(p.mu_emax)) throw InputError("random Emax needs mu_emax and tau_emax > 0");
      x[i_emax_] = p.mu_emax;
      x[i_log_tau_emax_] = std::log(p.tau_emax);
      for (std::size_t s = 0; s < S; ++s) x[i_emax_ + 1 + s] = (p.emax[s] - p.mu_emax) / p.tau_emax;
      break;
  }
  const LogisticBounded bounded{spec_.ed50_bounds.lower, spec_.ed50_bounds.upper};
  switch (spec_.ed50) {
    case Pooling::Shared:
      x[i_ed50_] = bounded.inverse(p.ed50[static_cast<std::size_t>(spec_.reference_schedule_id)]);
      break;
    case Pooling::FixedEffects:
      for (std::size_t s = 0; s < S; ++s) x[i_ed50_ + s] = bounded.inverse(p.ed50[s]);
      break;
    case Pooling::RandomEffects:
      if (!(p.tau_ed50 > 0.0) || !(p.mu_ed50 > 0.0)) throw InputError("random ED50 needs mu_ed50 > 0 and tau_ed50 > 0");
      x[i_ed50_] = bounded.inverse(p.mu_ed50);
      x[i_log_tau_ed50_] = std::log(p.tau_ed50);
      for (std::size_t s = 0; s < S; ++s) {
        x[i_ed50_ + 1 + s] = (std::log(p.ed50[s] / interval_ratio_[s]) - std::log(p.mu_ed50)) / p.tau_ed50;
      }
      break;
  }
  if (kind_ == ObservationKind::PatientLevel) {
    if (!(p.sigma > 0.0)) throw InputError("patient-level model needs sigma > 0");
    x[i_log_sigma_] = std::log(p.sigma);
  }
  return x;
}

double log_posterior(const Posterior& posterior, std::span<const double> x) {
  if (x.size() != posterior.dimension()) throw InputError("parameter vector has the wrong dimension");
  const auto t = posterior.terms(x);
  for (double v : {t.loglik, t.prior, t.deviates, t.jacobian}) {
    if (!std::isfinite(v)) {
      throw NonFinite(fmt::format("log posterior term non-finite (loglik {}, prior {}, deviates {}, jacobian {})",
                                  t.loglik, t.prior, t.deviates, t.jacobian));
    }
  }
  return t.total();
}

std::vector<double> grad_log_posterior(const Posterior& posterior, std::span<const double> x) {
  if (x.size() != posterior.dimension()) throw InputError("parameter vector has the wrong dimension");
  std::vector<double> g(x.size());
  const double v = posterior.log_density_gradient(x, g);
  if (!std::isfinite(v) || std::any_of(g.begin(), g.end(), [](double d) { return !std::isfinite(d); })) {
    throw NonFinite("log posterior gradient non-finite");
  }
  return g;
}

}  // namespace dosepool
