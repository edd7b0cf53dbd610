#pragma once

// Trial data structures, the Emax curve and the schedule re-scaling algebra.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dosepool {

/// An administration schedule. interval_hours is the time between doses
/// (weekly = 168, biweekly = 336, monthly = 672).
struct Schedule {
  int id = 0;
  std::string label;
  double interval_hours = 0.0;
};

struct Arm {
  int schedule_id = 0;
  double dose = 0.0;  ///< on the arm's own schedule scale
  int n_planned = 1;
};

struct TrialDesign {
  std::vector<Schedule> schedules;
  std::vector<Arm> arms;
  int reference_schedule_id = 0;

  const Schedule& schedule(int id) const;
  const Schedule& reference() const { return schedule(reference_schedule_id); }
  std::optional<int> find_schedule(std::string_view label) const;

  /// Largest dose after conversion to the reference schedule.
  double max_dose() const;
  /// Largest dose as administered (no conversion).
  double max_raw_dose() const;
  bool has_placebo() const;

  /// Throws InputError when ids are not dense, intervals are not positive or
  /// an arm references an unknown schedule.
  void validate() const;
};

enum class ObservationKind { PatientLevel, ArmLevel };

struct Observation {
  int schedule_id = 0;
  double dose = 0.0;
  double value = 0.0;
  double se = 0.0;  ///< ArmLevel only; zero for PatientLevel rows
};

struct Observations {
  ObservationKind kind = ObservationKind::PatientLevel;
  std::vector<Observation> rows;

  std::size_t size() const { return rows.size(); }
  void validate(const TrialDesign& design) const;
};

/// Design plus observations, validated together. Non-fatal findings (no
/// placebo arm) are collected in `warnings`.
struct TrialData {
  TrialDesign design;
  Observations observations;
  std::vector<std::string> warnings;

  TrialData() = default;
  TrialData(TrialDesign d, Observations o);
};

struct EmaxParams {
  double e0 = 0.0;
  double emax = 0.0;
  double ed50 = 1.0;
};

/// f(d) = E0 + Emax d / (ED50 + d)
inline double emax_response(const EmaxParams& p, double dose) {
  return p.e0 + p.emax * dose / (p.ed50 + dose);
}

/// Gradient of emax_response w.r.t. (E0, Emax, ED50).
struct EmaxGradient {
  double d_e0 = 1.0;
  double d_emax = 0.0;
  double d_ed50 = 0.0;
};
EmaxGradient emax_gradient(const EmaxParams& p, double dose);

/// Dose on schedule `from` expressed on schedule `to`:
/// dose * to.interval_hours / from.interval_hours. A monthly dose is half
/// as much per biweekly interval.
double convert_dose(double dose, const Schedule& from, const Schedule& to);

/// Schedule-specific ED50 (on the target schedule's own dose scale) from the
/// re-scaled ED50* expressed on the reference schedule.
double rescale_ed50(double ed50_star, const Schedule& target, const Schedule& reference);

/// Interval hours for the well-known labels weekly / biweekly / monthly.
std::optional<double> interval_for_label(std::string_view label);

/// Derives a design (schedules, arms) from observations. Arms are the
/// distinct (schedule, dose) pairs in order of appearance; n_planned is the
/// row count for patient-level data.
TrialDesign design_from_observations(const std::vector<Schedule>& schedules,
                                     const Observations& obs,
                                     std::span<const int> arm_sizes = {});

/// Default reference: the schedule with most active arms, ties broken by the
/// shorter interval.
int default_reference_schedule(const TrialDesign& design);

/// Copy of the observations with every dose converted to the reference
/// schedule and all rows relabelled to it (complete pooling input).
Observations pooled_to_reference(const TrialDesign& design, const Observations& obs);

}  // namespace dosepool
