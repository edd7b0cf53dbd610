#include "dosepool/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& text, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw InputError(fmt::format("row {}, column '{}': '{}' is not a number", row, column, text));
  }
  return v;
}

// Accumulates rows keyed by schedule label, then builds the validated data.
class Builder {
 public:
  void add(std::size_t row, const std::string& label, std::optional<double> interval, double dose, double value,
           std::optional<double> se, std::optional<int> n) {
    if (label.empty()) throw InputError(fmt::format("row {}, column 'schedule': empty label", row));
    auto it = ids_.find(label);
    if (it == ids_.end()) {
      const auto hours = interval ? interval : interval_for_label(label);
      if (!hours) {
        throw InputError(fmt::format(
            "row {}, column 'interval_hours': schedule '{}' has no interval and the label is not weekly, biweekly "
            "or monthly",
            row, label));
      }
      it = ids_.emplace(label, static_cast<int>(schedules_.size())).first;
      schedules_.push_back({it->second, label, *hours});
    } else if (interval && *interval != schedules_[static_cast<std::size_t>(it->second)].interval_hours) {
      throw InputError(fmt::format("row {}, column 'interval_hours': inconsistent interval for '{}'", row, label));
    }
    if (!(dose >= 0.0)) throw InputError(fmt::format("row {}, column 'dose': dose must be >= 0", row));
    if (se && !(*se > 0.0)) throw InputError(fmt::format("row {}, column 'se': standard error must be > 0", row));
    if (n && *n <= 0) throw InputError(fmt::format("row {}, column 'n': sample size must be positive", row));
    obs_.rows.push_back({it->second, dose, value, se.value_or(0.0)});
    sizes_.push_back(n.value_or(0));
  }

  TrialData build(bool arm_level, const std::optional<std::string>& reference) {
    if (obs_.rows.empty()) throw InputError("no data rows");
    obs_.kind = arm_level ? ObservationKind::ArmLevel : ObservationKind::PatientLevel;
    TrialDesign design = design_from_observations(schedules_, obs_, sizes_);
    if (reference) {
      const auto id = design.find_schedule(*reference);
      if (!id) throw InputError(fmt::format("reference schedule '{}' does not occur in the data", *reference));
      design.reference_schedule_id = *id;
    }
    return TrialData(std::move(design), std::move(obs_));
  }

 private:
  std::map<std::string, int> ids_;
  std::vector<Schedule> schedules_;
  Observations obs_;
  std::vector<int> sizes_;
};

}  // namespace

TrialData read_trial_csv(std::istream& in, const ReadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV input");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    col[name] = i;
  }
  for (const char* required : {"schedule", "dose", "response"}) {
    if (!col.count(required)) throw InputError(fmt::format("missing required column '{}'", required));
  }
  const bool has_se = col.count("se") > 0;
  if (opts.arm_level && !has_se) throw InputError("missing column 'se' required for arm-level data");
  const bool arm_level = opts.arm_level || has_se;

  Builder b;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw InputError(fmt::format("row {}: expected {} fields, found {}", row, header.size(), f.size()));
    }
    auto num = [&](const char* name) { return parse_number(f[col.at(name)], row, name); };
    std::optional<double> interval, se;
    std::optional<int> n;
    if (col.count("interval_hours") && !f[col.at("interval_hours")].empty()) interval = num("interval_hours");
    if (has_se) {
      if (f[col.at("se")].empty()) throw InputError(fmt::format("row {}, column 'se': missing value", row));
      se = num("se");
    }
    if (col.count("n") && !f[col.at("n")].empty()) n = static_cast<int>(num("n"));
    b.add(row, f[col.at("schedule")], interval, num("dose"), num("response"), se, n);
  }
  return b.build(arm_level, opts.reference);
}

TrialData read_trial_csv_file(const std::string& path, const ReadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  return read_trial_csv(in, opts);
}

TrialData read_trial_json(std::istream& in, const ReadOptions& opts) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("invalid JSON: {}", e.what()));
  }
  try {
    const bool arm_level = opts.arm_level || j.value("kind", std::string("patient")) == "arm";
    std::map<std::string, double> hours;
    for (const auto& s : j.value("schedules", nlohmann::json::array())) {
      hours[s.at("label").get<std::string>()] = s.at("interval_hours").get<double>();
    }
    Builder b;
    std::size_t row = 0;
    for (const auto& o : j.at("observations")) {
      ++row;
      const auto label = o.at("schedule").get<std::string>();
      std::optional<double> interval, se;
      std::optional<int> n;
      if (hours.count(label)) interval = hours[label];
      if (o.contains("se")) se = o["se"].get<double>();
      if (arm_level && !se) throw InputError(fmt::format("observation {}: missing 'se' for arm-level data", row));
      if (o.contains("n")) n = o["n"].get<int>();
      b.add(row, label, interval, o.at("dose").get<double>(), o.at("response").get<double>(), se, n);
    }
    auto reference = opts.reference;
    if (!reference && j.contains("reference")) reference = j["reference"].get<std::string>();
    return b.build(arm_level, reference);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("JSON schema error: {}", e.what()));
  }
}

std::string trial_to_json(const TrialData& data) {
  nlohmann::json j;
  const bool arm = data.observations.kind == ObservationKind::ArmLevel;
  j["kind"] = arm ? "arm" : "patient";
  j["reference"] = data.design.reference().label;
  for (const auto& s : data.design.schedules) j["schedules"].push_back({{"label", s.label}, {"interval_hours", s.interval_hours}});
  for (const auto& r : data.observations.rows) {
    nlohmann::json o{{"schedule", data.design.schedule(r.schedule_id).label}, {"dose", r.dose}, {"response", r.value}};
    if (arm) {
      o["se"] = r.se;
      for (const auto& a : data.design.arms) {
        if (a.schedule_id == r.schedule_id && a.dose == r.dose) o["n"] = a.n_planned;
      }
    }
    j["observations"].push_back(std::move(o));
  }
  return j.dump(2);
}

TrialData read_trial_file(const std::string& path, const ReadOptions& opts) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    return read_trial_json(in, opts);
  }
  return read_trial_csv_file(path, opts);
}

}  // namespace dosepool
