#include "dosepool/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

const Schedule& TrialDesign::schedule(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= schedules.size()) {
    throw InputError(fmt::format("unknown schedule id {}", id));
  }
  return schedules[static_cast<std::size_t>(id)];
}

std::optional<int> TrialDesign::find_schedule(std::string_view label) const {
  for (const auto& s : schedules) {
    if (s.label == label) return s.id;
  }
  return std::nullopt;
}

double TrialDesign::max_dose() const {
  double m = 0.0;
  for (const auto& a : arms) {
    m = std::max(m, convert_dose(a.dose, schedule(a.schedule_id), reference()));
  }
  return m;
}

double TrialDesign::max_raw_dose() const {
  double m = 0.0;
  for (const auto& a : arms) m = std::max(m, a.dose);
  return m;
}

bool TrialDesign::has_placebo() const {
  return std::any_of(arms.begin(), arms.end(), [](const Arm& a) { return a.dose == 0.0; });
}

void TrialDesign::validate() const {
  if (schedules.empty()) throw InputError("design has no schedules");
  for (std::size_t i = 0; i < schedules.size(); ++i) {
    const auto& s = schedules[i];
    if (s.id != static_cast<int>(i)) {
      throw InputError(fmt::format("schedule ids must be dense 0..S-1; got {} at position {}", s.id, i));
    }
    if (!(s.interval_hours > 0.0) || !std::isfinite(s.interval_hours)) {
      throw InputError(fmt::format("schedule '{}' has non-positive interval_hours", s.label));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (schedules[j].label == s.label) {
        throw InputError(fmt::format("duplicate schedule label '{}'", s.label));
      }
    }
  }
  (void)schedule(reference_schedule_id);
  for (const auto& a : arms) {
    (void)schedule(a.schedule_id);
    if (!(a.dose >= 0.0) || !std::isfinite(a.dose)) throw InputError("arm dose must be finite and >= 0");
    if (a.n_planned <= 0) throw InputError("arm sample size must be positive");
  }
  if (arms.empty()) throw InputError("design has no arms");
  if (!(max_dose() > 0.0)) throw InputError("design needs at least one arm with a positive dose");
}

void Observations::validate(const TrialDesign& design) const {
  if (rows.empty()) throw InputError("no observations");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    (void)design.schedule(r.schedule_id);
    if (!std::isfinite(r.value)) throw InputError(fmt::format("observation {}: non-finite response", i));
    if (!(r.dose >= 0.0) || !std::isfinite(r.dose)) {
      throw InputError(fmt::format("observation {}: dose must be finite and >= 0", i));
    }
    if (kind == ObservationKind::ArmLevel) {
      if (!(r.se > 0.0) || !std::isfinite(r.se)) {
        throw InputError(fmt::format("observation {}: arm-level rows need se > 0", i));
      }
    } else if (r.se != 0.0) {
      throw InputError(fmt::format("observation {}: patient-level rows carry no se", i));
    }
  }
}

TrialData::TrialData(TrialDesign d, Observations o) : design(std::move(d)), observations(std::move(o)) {
  design.validate();
  observations.validate(design);
  if (!design.has_placebo()) {
    warnings.emplace_back("no placebo arm: E0 is not anchored by a zero-dose group");
  }
}

EmaxGradient emax_gradient(const EmaxParams& p, double dose) {
  const double denom = p.ed50 + dose;
  return {1.0, dose / denom, -p.emax * dose / (denom * denom)};
}

double convert_dose(double dose, const Schedule& from, const Schedule& to) {
  return dose * to.interval_hours / from.interval_hours;
}

double rescale_ed50(double ed50_star, const Schedule& target, const Schedule& reference) {
  return ed50_star * target.interval_hours / reference.interval_hours;
}

std::optional<double> interval_for_label(std::string_view label) {
  std::string l(label);
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "weekly") return 168.0;
  if (l == "biweekly") return 336.0;
  if (l == "monthly") return 672.0;
  return std::nullopt;
}

TrialDesign design_from_observations(const std::vector<Schedule>& schedules, const Observations& obs,
                                     std::span<const int> arm_sizes) {
  TrialDesign d;
  d.schedules = schedules;
  std::map<std::pair<int, double>, std::size_t> index;
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const auto& r = obs.rows[i];
    auto key = std::make_pair(r.schedule_id, r.dose);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, d.arms.size());
      int n = 1;
      if (obs.kind == ObservationKind::ArmLevel && i < arm_sizes.size() && arm_sizes[i] > 0) n = arm_sizes[i];
      d.arms.push_back({r.schedule_id, r.dose, n});
    } else if (obs.kind == ObservationKind::PatientLevel) {
      ++d.arms[it->second].n_planned;
    }
  }
  d.reference_schedule_id = schedules.empty() ? 0 : default_reference_schedule(d);
  return d;
}

int default_reference_schedule(const TrialDesign& design) {
  std::vector<int> active(design.schedules.size(), 0);
  for (const auto& a : design.arms) {
    if (a.dose > 0.0) ++active[static_cast<std::size_t>(a.schedule_id)];
  }
  int best = 0;
  for (std::size_t i = 1; i < design.schedules.size(); ++i) {
    const auto b = static_cast<std::size_t>(best);
    if (active[i] > active[b] ||
        (active[i] == active[b] && design.schedules[i].interval_hours < design.schedules[b].interval_hours)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

Observations pooled_to_reference(const TrialDesign& design, const Observations& obs) {
  Observations out = obs;
  const auto& ref = design.reference();
  for (auto& r : out.rows) {
    r.dose = convert_dose(r.dose, design.schedule(r.schedule_id), ref);
    r.schedule_id = ref.id;
  }
  return out;
}

}  // namespace dosepool
