#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dosepool {

/// A differentiable log density on R^n, as consumed by the sampler.
///
/// log_density_gradient must not throw on numerical trouble; it returns a
/// non-finite value instead, which the sampler treats as a divergence.
/// The optional reporting hooks let the sampler materialize natural-scale
/// parameters and pointwise log-likelihoods for each stored draw.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual std::size_t dimension() const = 0;
  virtual double log_density_gradient(std::span<const double> x, std::span<double> grad) const = 0;
  virtual std::vector<std::string> parameter_names() const;

  virtual std::size_t natural_dimension() const { return 0; }
  virtual std::vector<std::string> natural_names() const { return {}; }
  virtual void write_natural(std::span<const double> /*x*/, std::span<double> /*out*/) const {}

  virtual std::size_t pointwise_dimension() const { return 0; }
  virtual void write_pointwise(std::span<const double> /*x*/, std::span<double> /*out*/) const {}
};

}  // namespace dosepool
