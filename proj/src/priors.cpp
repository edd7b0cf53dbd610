#include "dosepool/priors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSingularTol = 1e-14;

// F'F and F'dF/dED50 for Emax = emax.
void information(std::span<const double> grid, double ed50, double emax, Eigen::Matrix3d& ftf,
                 Eigen::Matrix3d& ftdf) {
  ftf.setZero();
  ftdf.setZero();
  for (double x : grid) {
    const double s = x + ed50;
    const Eigen::Vector3d row(1.0, x / s, -x * emax / (s * s));
    const Eigen::Vector3d drow(0.0, -x / (s * s), 2.0 * x * emax / (s * s * s));
    ftf += row * row.transpose();
    ftdf += row * drow.transpose();
  }
}

double exact_log_density(const prior::FunctionalUniformExact& p, double ed50, double* derivative) {
  Eigen::Matrix3d ftf, ftdf;
  information(p.dose_grid, ed50, 1.0, ftf, ftdf);
  const double det = ftf.determinant();
  if (!(det > kSingularTol)) {
    throw SingularInformation(fmt::format("functional uniform prior: det(F'F) = {:.3g}", det));
  }
  if (derivative) *derivative = (ftf.inverse() * ftdf).trace();
  return 0.5 * std::log(det);
}

void check_support(const PriorSpec& spec, double value) {
  const Support s = prior_support(spec);
  const bool below = s.lower_open ? !(value > s.lower) : !(value >= s.lower);
  if (below || !(value <= s.upper)) {
    throw OutOfSupport(fmt::format("value {} outside support of {}", value, describe(spec)));
  }
}

double parse_number(std::string_view text) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && *(last - 1) == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InputError(fmt::format("bad number '{}' in prior", text));
  return v;
}

}  // namespace

void validate_prior(const PriorSpec& spec) {
  std::visit(overloaded{
                 [](const prior::Normal& p) {
                   if (!(p.sd > 0.0)) throw InputError("normal prior needs sd > 0");
                 },
                 [](const prior::HalfNormal& p) {
                   if (!(p.scale > 0.0)) throw InputError("half-normal prior needs scale > 0");
                 },
                 [](const prior::LogNormal& p) {
                   if (!(p.sd_log > 0.0)) throw InputError("log-normal prior needs sd_log > 0");
                 },
                 [](const prior::FunctionalUniformApprox& p) {
                   if (!(p.max_dose > 0.0)) throw InputError("functional-uniform prior needs max_dose > 0");
                 },
                 [](const prior::FunctionalUniformExact& p) {
                   if (p.dose_grid.empty()) throw InputError("functional-uniform grid is empty");
                   if (!std::is_sorted(p.dose_grid.begin(), p.dose_grid.end()) || p.dose_grid.front() < 0.0) {
                     throw InputError("functional-uniform grid must be sorted and non-negative");
                   }
                 },
             },
             spec);
}

Support prior_support(const PriorSpec& spec) {
  return std::visit(overloaded{
                        [](const prior::Normal&) { return Support{-kInf, kInf, true}; },
                        [](const prior::HalfNormal&) { return Support{0.0, kInf, false}; },
                        [](const prior::LogNormal&) { return Support{0.0, kInf, true}; },
                        [](const prior::FunctionalUniformApprox& p) {
                          return Support{0.0, prior::FunctionalUniformApprox::kUpperRatio * p.max_dose, true};
                        },
                        [](const prior::FunctionalUniformExact&) { return Support{0.0, kInf, true}; },
                    },
                    spec);
}

LogDensityTerm log_density_term(const PriorSpec& spec, double value) {
  return std::visit(
      overloaded{
          [&](const prior::Normal& p) {
            const double z = (value - p.mu) / p.sd;
            return LogDensityTerm{-0.5 * z * z, -z / p.sd};
          },
          [&](const prior::HalfNormal& p) {
            const double z = value / p.scale;
            return LogDensityTerm{-0.5 * z * z, -z / p.scale};
          },
          [&](const prior::LogNormal& p) {
            const double lv = std::log(value);
            const double z = (lv - p.mu_log) / p.sd_log;
            return LogDensityTerm{-lv - 0.5 * z * z, (-1.0 - z / p.sd_log) / value};
          },
          [&](const prior::FunctionalUniformApprox& p) {
            using F = prior::FunctionalUniformApprox;
            const double lr = std::log(value / p.max_dose);
            const double z = (lr - F::kMuLog) / F::kSdLog;
            return LogDensityTerm{-lr - 0.5 * z * z, (-1.0 - z / F::kSdLog) / value};
          },
          [&](const prior::FunctionalUniformExact& p) {
            double d = 0.0;
            const double v = exact_log_density(p, value, &d);
            return LogDensityTerm{v, d};
          },
      },
      spec);
}

double log_density(const PriorSpec& spec, double value) {
  check_support(spec, value);
  return log_density_term(spec, value).value;
}

double log_density_derivative(const PriorSpec& spec, double value) {
  check_support(spec, value);
  return log_density_term(spec, value).derivative;
}

double functional_uniform_exact(std::span<const double> dose_grid, const EmaxParams& theta) {
  if (!(theta.ed50 > 0.0)) throw OutOfSupport("functional uniform prior needs ED50 > 0");
  Eigen::Matrix3d ftf, ftdf;
  information(dose_grid, theta.ed50, theta.emax, ftf, ftdf);
  const double det = ftf.determinant();
  if (!(det > kSingularTol)) {
    throw SingularInformation(fmt::format("functional uniform prior: det(F'F) = {:.3g}", det));
  }
  return std::sqrt(det);
}

double wip_range(double tau) {
  if (!(tau >= 0.0)) throw InputError("heterogeneity must be >= 0");
  return std::exp(3.92 * tau);
}

PriorSpec parse_prior(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InputError(fmt::format("prior '{}' lacks ':'", text));
  const auto family = text.substr(0, colon);
  std::vector<double> args;
  auto rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    args.push_back(parse_number(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw InputError(fmt::format("prior '{}' expects {} parameter(s)", family, n));
    }
  };
  PriorSpec spec;
  if (family == "normal") {
    need(2);
    spec = prior::Normal{args[0], args[1]};
  } else if (family == "half-normal" || family == "half_normal") {
    need(1);
    spec = prior::HalfNormal{args[0]};
  } else if (family == "lognormal" || family == "log-normal") {
    need(2);
    spec = prior::LogNormal{args[0], args[1]};
  } else if (family == "fu-approx" || family == "functional-uniform") {
    need(1);
    spec = prior::FunctionalUniformApprox{args[0]};
  } else if (family == "fu-exact") {
    if (args.empty()) throw InputError("fu-exact needs a dose grid");
    spec = prior::FunctionalUniformExact{args};
  } else {
    throw InputError(fmt::format("unknown prior family '{}'", family));
  }
  validate_prior(spec);
  return spec;
}

std::string describe(const PriorSpec& spec) {
  return std::visit(overloaded{
                        [](const prior::Normal& p) { return fmt::format("normal({}, {})", p.mu, p.sd); },
                        [](const prior::HalfNormal& p) { return fmt::format("half-normal({})", p.scale); },
                        [](const prior::LogNormal& p) {
                          return fmt::format("lognormal({}, {})", p.mu_log, p.sd_log);
                        },
                        [](const prior::FunctionalUniformApprox& p) {
                          return fmt::format("fu-approx(D={})", p.max_dose);
                        },
                        [](const prior::FunctionalUniformExact& p) {
                          return fmt::format("fu-exact({} doses)", p.dose_grid.size());
                        },
                    },
                    spec);
}

PriorSet PriorSet::defaults(double max_dose) {
  PriorSet p;
  p.ed50 = prior::FunctionalUniformApprox{max_dose};
  return p;
}

void PriorSet::set(std::string_view role, PriorSpec spec) {
  validate_prior(spec);
  if (role == "e0") {
    e0 = std::move(spec);
  } else if (role == "emax") {
    emax = std::move(spec);
  } else if (role == "ed50") {
    ed50 = std::move(spec);
  } else if (role == "sigma") {
    sigma = std::move(spec);
  } else if (role == "tau_ed50") {
    tau_ed50 = std::move(spec);
  } else if (role == "tau_emax") {
    tau_emax = std::move(spec);
  } else {
    throw InputError(fmt::format("unknown prior role '{}'", role));
  }
}

}  // namespace dosepool
