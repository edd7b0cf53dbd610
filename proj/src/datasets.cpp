#include "dosepool/datasets.hpp"

namespace dosepool {

TrialData dupilumab() {
  std::vector<Schedule> schedules{{0, "weekly", 168.0}, {1, "biweekly", 336.0}, {2, "monthly", 672.0}};
  struct Row {
    int schedule;
    double dose, mean, se;
    int n;
  };
  static constexpr Row kRows[] = {
      {0, 0.0, -18.1, 5.2, 61},   {0, 300.0, -73.7, 5.2, 63}, {1, 200.0, -65.4, 5.2, 61},
      {1, 300.0, -68.2, 5.1, 64}, {2, 100.0, -44.8, 5.0, 65}, {2, 300.0, -63.5, 4.9, 65},
  };
  Observations obs;
  obs.kind = ObservationKind::ArmLevel;
  TrialDesign design;
  design.schedules = schedules;
  for (const auto& r : kRows) {
    obs.rows.push_back({r.schedule, r.dose, r.mean, r.se});
    design.arms.push_back({r.schedule, r.dose, r.n});
  }
  design.reference_schedule_id = 1;
  return TrialData(std::move(design), std::move(obs));
}

}  // namespace dosepool
