#include "dosepool/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dosepool/error.hpp"
#include "dosepool/simd/kernels.hpp"

namespace dosepool {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

ParamSummary summarize(std::string name, std::span<const double> values) {
  if (values.empty()) throw InputError(fmt::format("no draws for {}", name));
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  ParamSummary s;
  s.parameter = std::move(name);
  s.mean = mean;
  s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.median = quantile_sorted(v, 0.5);
  s.q025 = quantile_sorted(v, 0.025);
  s.q975 = quantile_sorted(v, 0.975);
  return s;
}

std::vector<ParamSummary> summarize_params(const PosteriorDraws& draws) {
  std::vector<ParamSummary> out;
  for (const auto& name : draws.natural_names) out.push_back(summarize(name, draws.natural_column(name)));
  return out;
}

std::vector<CurveBand> curve_summary(const PosteriorDraws& draws, std::string_view schedule,
                                     std::span<const double> dose_grid, double level) {
  const auto e0 = draws.natural_column("e0");
  const std::string emax_name =
      draws.has_natural("emax") ? std::string("emax") : fmt::format("emax[{}]", schedule);
  const auto emax = draws.natural_column(emax_name);
  const auto ed50 = draws.natural_column(fmt::format("ed50[{}]", schedule));
  const double tail = 0.5 * (1.0 - level);
  const auto& k = simd::kernels();
  std::vector<double> f(e0.size());
  std::vector<CurveBand> out;
  for (double dose : dose_grid) {
    k.curve(e0, emax, ed50, dose, f);
    std::sort(f.begin(), f.end());
    out.push_back({dose, quantile_sorted(f, 0.5), quantile_sorted(f, tail), quantile_sorted(f, 1.0 - tail)});
  }
  return out;
}

std::vector<CurveBand> curve_bands(const MleFit& fit, std::span<const double> dose_grid) {
  std::vector<CurveBand> out;
  for (const auto& p : curve_ci(fit, dose_grid)) out.push_back({p.dose, p.estimate, p.lower, p.upper});
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  if (count > 1) v.back() = hi;
  return v;
}

double silverman_bandwidth(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : std::max(std::abs(mean) * 1e-3, 1e-8);
  return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<DensityPoint> marginal_density(std::span<const double> values, std::span<const double> grid) {
  if (values.size() < 500) {
    throw InsufficientDraws(fmt::format("density estimate needs at least 500 draws, got {}", values.size()));
  }
  const double h = silverman_bandwidth(values);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<DensityPoint> out;
  out.reserve(grid.size());
  for (double x : grid) {
    double s = 0.0;
    for (double v : values) {
      const double z = (x - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    out.push_back({x, s * norm});
  }
  return out;
}

std::vector<double> density_grid(std::span<const double> values, std::size_t count) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double h = silverman_bandwidth(values);
  return linspace(*lo - 3.0 * h, *hi + 3.0 * h, count);
}

void write_params_csv(std::ostream& os, std::span<const ParamSummary> rows) {
  os << "parameter,mean,sd,median,q025,q975\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{}\n", r.parameter, r.mean, r.sd, r.median, r.q025, r.q975);
  }
}

void write_curve_csv(std::ostream& os, std::span<const CurveBand> rows, std::string_view method) {
  os << "dose,median,lower,upper,method\n";
  for (const auto& r : rows) fmt::print(os, "{},{},{},{},{}\n", r.dose, r.median, r.lower, r.upper, method);
}

void write_density_csv(std::ostream& os, std::span<const DensityPoint> rows) {
  os << "x,density\n";
  for (const auto& r : rows) fmt::print(os, "{},{}\n", r.x, r.density);
}

void write_draws_csv(std::ostream& os, const PosteriorDraws& draws) {
  os << "chain,iteration,divergent";
  for (const auto& n : draws.natural_names) os << ',' << n;
  os << '\n';
  const std::size_t cols = draws.natural_names.size();
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    fmt::print(os, "{},{},{}", r / draws.draws_per_chain + 1, r % draws.draws_per_chain + 1,
               static_cast<int>(draws.divergent[r]));
    for (std::size_t c = 0; c < cols; ++c) fmt::print(os, ",{}", draws.natural[r * cols + c]);
    os << '\n';
  }
}

}  // namespace dosepool
