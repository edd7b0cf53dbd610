#include <doctest.h>

#include <sstream>

#include "dosepool/config.hpp"
#include "dosepool/datasets.hpp"
#include "dosepool/error.hpp"
#include "dosepool/io.hpp"

using namespace dosepool;

namespace {

std::string error_of(const std::string& csv, ReadOptions opts = {}) {
  std::istringstream in(csv);
  try {
    read_trial_csv(in, opts);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("patient-level CSV") {
  std::istringstream in(
      "schedule,dose,response\n"
      "biweekly,0,-10\n"
      "biweekly,0,-12\n"
      "monthly,3,-40\n"
      "biweekly,10,-70\n");
  const TrialData d = read_trial_csv(in);
  CHECK(d.observations.kind == ObservationKind::PatientLevel);
  CHECK(d.observations.size() == 4);
  REQUIRE(d.design.schedules.size() == 2);
  CHECK(d.design.schedules[0].interval_hours == 336.0);
  CHECK(d.design.schedules[1].interval_hours == 672.0);
  CHECK(d.design.arms.size() == 3);
  CHECK(d.design.arms[0].n_planned == 2);
}

TEST_CASE("explicit interval column wins over the label") {
  std::istringstream in(
      "schedule,interval_hours,dose,response\n"
      "q3w,504,0,-1\n"
      "q3w,504,5,-2\n"
      "weekly,100,5,-3\n");
  const TrialData d = read_trial_csv(in);
  CHECK(d.design.schedules[0].interval_hours == 504.0);
  CHECK(d.design.schedules[1].interval_hours == 100.0);
}

TEST_CASE("arm-level CSV matches the embedded dataset") {
  const TrialData file = read_trial_csv_file(DOSEPOOL_SOURCE_DIR "/data/dupilumab.csv", {true, std::string("biweekly")});
  const TrialData builtin = dupilumab();
  REQUIRE(file.observations.size() == builtin.observations.size());
  CHECK(file.observations.kind == ObservationKind::ArmLevel);
  for (std::size_t i = 0; i < file.observations.size(); ++i) {
    const auto& a = file.observations.rows[i];
    const auto& b = builtin.observations.rows[i];
    CHECK(a.schedule_id == b.schedule_id);
    CHECK(a.dose == b.dose);
    CHECK(a.value == b.value);
    CHECK(a.se == b.se);
    CHECK(file.design.arms[i].n_planned == builtin.design.arms[i].n_planned);
  }
  CHECK(file.design.reference().label == "biweekly");
}

TEST_CASE("schema errors carry row and column") {
  CHECK(error_of("schedule,dose,response\nweekly,abc,1\n").find("row 2, column 'dose'") != std::string::npos);
  CHECK(error_of("schedule,dose,response\nweekly,1,1\nweekly,-1,1\n").find("row 3, column 'dose'") !=
        std::string::npos);
  CHECK(error_of("schedule,dose\nweekly,1\n").find("missing required column 'response'") != std::string::npos);
  CHECK(error_of("schedule,dose,response\nweekly,1,1\nweekly,2\n").find("row 3") != std::string::npos);
  CHECK(error_of("schedule,dose,response\ndaily,1,1\n").find("column 'interval_hours'") != std::string::npos);
  CHECK(error_of("schedule,dose,response,se\nweekly,1,1,0\n").find("column 'se'") != std::string::npos);
  CHECK(error_of("schedule,dose,response\nweekly,1,1\n", {true, std::nullopt}).find("missing column 'se'") !=
        std::string::npos);
  CHECK(error_of("schedule,dose,response\nweekly,1,1\n", {false, std::string("monthly")}).find("reference") !=
        std::string::npos);
  CHECK(error_of("").find("empty") != std::string::npos);
}

TEST_CASE("JSON round trip") {
  const TrialData a = dupilumab();
  std::istringstream in(trial_to_json(a));
  const TrialData b = read_trial_json(in);
  CHECK(b.observations.kind == a.observations.kind);
  REQUIRE(b.observations.size() == a.observations.size());
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    CHECK(b.observations.rows[i].value == a.observations.rows[i].value);
    CHECK(b.observations.rows[i].se == a.observations.rows[i].se);
    CHECK(b.observations.rows[i].dose == a.observations.rows[i].dose);
  }
  CHECK(b.design.reference().label == "biweekly");
  std::istringstream broken("{\"kind\": ");
  CHECK_THROWS_AS(read_trial_json(broken), InputError);
}

TEST_CASE("TOML converts to the JSON document model") {
  const auto j = parse_toml("name = \"x\"\n[design]\ndoses = [1, 3, 10]\n[truth]\nsigma = 35.0\n");
  CHECK(j["name"] == "x");
  CHECK(j["design"]["doses"].size() == 3);
  CHECK(j["truth"]["sigma"].get<double>() == 35.0);
  CHECK_THROWS_AS(parse_toml("a = [1,"), InputError);
  CHECK_THROWS_AS(parse_json("{"), InputError);
}
