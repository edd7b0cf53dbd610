#pragma once

// Trial data ingestion. CSV columns:
//   schedule, [interval_hours,] dose, response [, se] [, n]
// interval_hours falls back to the label (weekly/biweekly/monthly). Rows
// with an se are arm-level summaries; otherwise each row is a patient.

#include <iosfwd>
#include <optional>
#include <string>

#include "dosepool/core_model.hpp"

namespace dosepool {

struct ReadOptions {
  bool arm_level = false;                 ///< require the se column
  std::optional<std::string> reference;  ///< schedule label
};

TrialData read_trial_csv(std::istream& in, const ReadOptions& opts = {});
TrialData read_trial_csv_file(const std::string& path, const ReadOptions& opts = {});

/// JSON mirror: {"kind", "reference", "schedules": [{label, interval_hours}],
/// "observations": [{schedule, dose, response, se?, n?}]}.
TrialData read_trial_json(std::istream& in, const ReadOptions& opts = {});
std::string trial_to_json(const TrialData& data);

/// Picks CSV or JSON by extension.
TrialData read_trial_file(const std::string& path, const ReadOptions& opts = {});

}  // namespace dosepool
