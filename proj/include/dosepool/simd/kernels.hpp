#pragma once

// Data-parallel inner loops of the Emax likelihood and curve evaluation.
// Every kernel has a scalar reference implementation and an AVX2 variant;
// kernels() picks one at runtime from CPU support (override with the
// environment variable DOSEPOOL_SIMD=scalar).

#include <cstddef>
#include <span>
#include <string_view>

namespace dosepool::simd {

/// Weighted residual moments over observations that share (E0, Emax, ED50):
/// with h = d/(ED50+d), q = d/(ED50+d)^2 and r = y - (E0 + Emax h),
///   rr = sum w r^2,  r = sum w r,  rh = sum w r h,  rq = sum w r q.
struct SegmentMoments {
  double rr = 0.0;
  double r = 0.0;
  double rh = 0.0;
  double rq = 0.0;
};

using MomentsFn = SegmentMoments (*)(std::span<const double> dose, std::span<const double> value,
                                     std::span<const double> weight, double e0, double emax, double ed50);

/// out[i] = w[i] * (y[i] - f(d[i]))^2
using WeightedResidualsFn = void (*)(std::span<const double> dose, std::span<const double> value,
                                     std::span<const double> weight, double e0, double emax, double ed50,
                                     std::span<double> out);

/// out[k] = e0[k] + emax[k] * dose / (ed50[k] + dose), one Emax curve per draw.
using CurveFn = void (*)(std::span<const double> e0, std::span<const double> emax, std::span<const double> ed50,
                         double dose, std::span<double> out);

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  MomentsFn moments;
  WeightedResidualsFn weighted_residuals;
  CurveFn curve;
};

bool backend_available(Backend b);
std::string_view backend_name(Backend b);

/// Runtime-selected table.
const KernelTable& kernels();
/// Explicit backend; throws std::runtime_error when the CPU lacks it.
const KernelTable& kernels(Backend b);

namespace scalar {
SegmentMoments moments(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
                       double e0, double emax, double ed50);
void weighted_residuals(std::span<const double> dose, std::span<const double> value,
                        std::span<const double> weight, double e0, double emax, double ed50, std::span<double> out);
void curve(std::span<const double> e0, std::span<const double> emax, std::span<const double> ed50, double dose,
           std::span<double> out);
}  // namespace scalar

#if defined(DOSEPOOL_HAVE_AVX2)
namespace avx2 {
SegmentMoments moments(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
                       double e0, double emax, double ed50);
void weighted_residuals(std::span<const double> dose, std::span<const double> value,
                        std::span<const double> weight, double e0, double emax, double ed50, std::span<double> out);
void curve(std::span<const double> e0, std::span<const double> emax, std::span<const double> ed50, double dose,
           std::span<double> out);
}  // namespace avx2
#endif

}  // namespace dosepool::simd
