#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dosepool/simd/kernels.hpp"

namespace dosepool::simd {

namespace {

constexpr KernelTable kScalar{Backend::Scalar, &scalar::moments, &scalar::weighted_residuals, &scalar::curve};
#if defined(DOSEPOOL_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2, &avx2::moments, &avx2::weighted_residuals, &avx2::curve};
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("DOSEPOOL_SIMD"); env && std::string(env) == "scalar") return kScalar;
#if defined(DOSEPOOL_HAVE_AVX2)
  if (backend_available(Backend::Avx2)) return kAvx2;
#endif
  return kScalar;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(DOSEPOOL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

const KernelTable& kernels() {
  static const KernelTable& table = select();
  return table;
}

const KernelTable& kernels(Backend b) {
  if (!backend_available(b)) throw std::runtime_error(std::string("SIMD backend unavailable: ") + std::string(backend_name(b)));
#if defined(DOSEPOOL_HAVE_AVX2)
  if (b == Backend::Avx2) return kAvx2;
#endif
  return kScalar;
}

}  // namespace dosepool::simd
