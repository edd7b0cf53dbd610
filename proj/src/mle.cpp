#include "dosepool/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "dosepool/error.hpp"

namespace dosepool {

namespace {

constexpr int kGridPoints = 201;
constexpr double kRelTol = 1e-6;

struct LinearFit {
  double e0 = 0.0;
  double emax = 0.0;
  double rss = std::numeric_limits<double>::infinity();
};

class Profile {
 public:
  Profile(std::span<const double> d, std::span<const double> y, std::span<const double> w) : d_(d), y_(y), w_(w) {}

  // Weighted least squares of y on (1, d/(ed50+d)).
  LinearFit at(double ed50) const {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      const double x = d_[i] / (ed50 + d_[i]);
      const double w = weight(i);
      sw += w;
      sx += w * x;
      sy += w * y_[i];
      sxx += w * x * x;
      sxy += w * x * y_[i];
    }
    const double det = sw * sxx - sx * sx;
    LinearFit f;
    if (!(std::abs(det) > 1e-300)) return f;
    f.emax = (sw * sxy - sx * sy) / det;
    f.e0 = (sy - f.emax * sx) / sw;
    double rss = 0.0;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      const double r = y_[i] - (f.e0 + f.emax * d_[i] / (ed50 + d_[i]));
      rss += weight(i) * r * r;
    }
    f.rss = rss;
    return f;
  }

  double weight(std::size_t i) const { return w_.empty() ? 1.0 : w_[i]; }

 private:
  std::span<const double> d_, y_, w_;
};

}  // namespace

MleFit fit_mle(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
               ObservationKind kind, Bounds bounds) {
  if (dose.size() != value.size() || (!weight.empty() && weight.size() != dose.size())) {
    throw InputError("dose, value and weight lengths differ");
  }
  if (std::set<double>(dose.begin(), dose.end()).size() < 3) {
    throw TooFewDoses("maximum likelihood needs at least 3 distinct dose levels");
  }
  if (!(bounds.upper > bounds.lower) || !(bounds.lower >= 0.0)) {
    throw InputError(fmt::format("invalid ED50 bounds [{}, {}]", bounds.lower, bounds.upper));
  }
  const std::size_t n = dose.size();
  if (kind == ObservationKind::PatientLevel && n <= 3) throw InputError("need more than 3 observations");

  const Profile profile(dose, value, weight);
  MleFit fit;
  fit.bounds = bounds;
  // a zero lower bound is profiled from a small positive value on the log grid
  const double lo = bounds.lower > 0.0 ? bounds.lower : bounds.upper * 1e-6;
  const double log_lo = std::log(lo), log_hi = std::log(bounds.upper);
  std::size_t best = 0;
  for (int g = 0; g < kGridPoints; ++g) {
    const double ed50 = std::exp(log_lo + (log_hi - log_lo) * g / (kGridPoints - 1));
    fit.profile.push_back({ed50, profile.at(ed50).rss});
    if (fit.profile.back().rss < fit.profile[best].rss) best = static_cast<std::size_t>(g);
  }

  // golden-section refinement on log ED50 between the grid neighbours
  double a = std::log(fit.profile[best == 0 ? 0 : best - 1].ed50);
  double b = std::log(fit.profile[std::min<std::size_t>(best + 1, kGridPoints - 1)].ed50);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = profile.at(std::exp(c)).rss, fd = profile.at(std::exp(d)).rss;
  while (std::exp(b) - std::exp(a) > kRelTol * std::exp(0.5 * (a + b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = profile.at(std::exp(c)).rss;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = profile.at(std::exp(d)).rss;
    }
  }
  double ed50 = std::exp(0.5 * (a + b));
  LinearFit lin = profile.at(ed50);
  if (fit.profile[best].rss <= lin.rss) {
    ed50 = fit.profile[best].ed50;
    lin = profile.at(ed50);
  }
  const auto [pmin, pmax] = std::minmax_element(fit.profile.begin(), fit.profile.end(),
                                                [](const auto& x, const auto& y) { return x.rss < y.rss; });
  if (pmax->rss - pmin->rss <= 1e-10 * (1.0 + pmin->rss)) {
    // flat profile: ED50 is not identified by the data
    ed50 = bounds.upper;
    lin = profile.at(ed50);
  }
  fit.params = {lin.e0, lin.emax, ed50};
  fit.rss = lin.rss;
  if (!std::isfinite(lin.rss)) throw FitFailure("least-squares subproblem is singular");

  const double rel = kRelTol * 10.0;
  if (std::abs(ed50 - lo) <= rel * lo || std::abs(ed50 - bounds.upper) <= rel * bounds.upper) {
    fit.at_boundary = true;
    fit.warnings.push_back(fmt::format("BoundaryEstimate: ED50 estimate {} lies on a bound of [{}, {}]", ed50,
                                       bounds.lower, bounds.upper));
  }

  double scale = 1.0;
  if (kind == ObservationKind::PatientLevel) {
    fit.sigma_hat = std::sqrt(lin.rss / static_cast<double>(n - 3));
    scale = fit.sigma_hat * fit.sigma_hat;
  } else {
    fit.sigma_hat = 1.0;
  }
  Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const EmaxGradient g = emax_gradient(fit.params, dose[i]);
    const Eigen::Vector3d j(g.d_e0, g.d_emax, g.d_ed50);
    info += profile.weight(i) * j * j.transpose();
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(info);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12 * std::pow(info.norm(), 3)) {
    fit.vcov.fill(std::numeric_limits<double>::quiet_NaN());
    fit.converged = false;
    fit.warnings.push_back("SingularInformation: information matrix is singular at the estimate");
    return fit;
  }
  const Eigen::Matrix3d raw = scale * lu.inverse();
  const Eigen::Matrix3d v = 0.5 * (raw + raw.transpose());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) fit.vcov[static_cast<std::size_t>(3 * i + j)] = v(i, j);
  }
  fit.converged = true;
  return fit;
}

MleFit fit_mle(const TrialData& data, Bounds bounds) {
  const Observations pooled = pooled_to_reference(data.design, data.observations);
  std::vector<double> d, y, w;
  for (const auto& r : pooled.rows) {
    d.push_back(r.dose);
    y.push_back(r.value);
    if (pooled.kind == ObservationKind::ArmLevel) w.push_back(1.0 / (r.se * r.se));
  }
  return fit_mle(d, y, w, pooled.kind, bounds);
}

std::vector<CurvePoint> curve_ci(const MleFit& fit, std::span<const double> dose_grid) {
  if (!fit.converged) throw FitFailure("confidence band requested for a fit that did not converge");
  std::vector<CurvePoint> out;
  out.reserve(dose_grid.size());
  for (double dose : dose_grid) {
    const EmaxGradient g = emax_gradient(fit.params, dose);
    const double j[3] = {g.d_e0, g.d_emax, g.d_ed50};
    double var = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) var += j[a] * fit.cov(a, b) * j[b];
    }
    const double est = emax_response(fit.params, dose);
    const double half = 1.96 * std::sqrt(std::max(var, 0.0));
    out.push_back({dose, est, est - half, est + half});
  }
  return out;
}

}  // namespace dosepool
