#pragma once

#include "dosepool/core_model.hpp"

namespace dosepool {

/// Phase IIb dupilumab EASI summary: six arms over weekly, biweekly and
/// monthly schedules, LS-mean percent change with standard errors.
/// Arm-level, reference schedule biweekly.
TrialData dupilumab();

}  // namespace dosepool
