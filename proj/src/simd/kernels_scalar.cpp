#include "dosepool/simd/kernels.hpp"

namespace dosepool::simd::scalar {

SegmentMoments moments(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
                       double e0, double emax, double ed50) {
  SegmentMoments m;
  for (std::size_t i = 0; i < dose.size(); ++i) {
    const double s = ed50 + dose[i];
    const double h = dose[i] / s;
    const double q = h / s;
    const double r = value[i] - (e0 + emax * h);
    const double wr = weight[i] * r;
    m.rr += wr * r;
    m.r += wr;
    m.rh += wr * h;
    m.rq += wr * q;
  }
  return m;
}

void weighted_residuals(std::span<const double> dose, std::span<const double> value,
                        std::span<const double> weight, double e0, double emax, double ed50, std::span<double> out) {
  for (std::size_t i = 0; i < dose.size(); ++i) {
    const double r = value[i] - (e0 + emax * dose[i] / (ed50 + dose[i]));
    out[i] = weight[i] * r * r;
  }
}

void curve(std::span<const double> e0, std::span<const double> emax, std::span<const double> ed50, double dose,
           std::span<double> out) {
  for (std::size_t k = 0; k < e0.size(); ++k) {
    out[k] = e0[k] + emax[k] * dose / (ed50[k] + dose);
  }
}

}  // namespace dosepool::simd::scalar
