#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dosepool/simd/kernels.hpp"

using namespace dosepool::simd;

namespace {

struct Sample {
  std::vector<double> dose, value, weight;
};

Sample make_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    s.dose.push_back(20.0 * u(gen));
    s.value.push_back(-100.0 + 120.0 * u(gen));
    s.weight.push_back(0.01 + u(gen));
  }
  return s;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar moments match a direct sum") {
  const Sample s = make_sample(37, 1);
  const double e0 = -18.0, emax = -55.0, ed50 = 3.3;
  double rr = 0, r = 0, rh = 0, rq = 0;
  for (std::size_t i = 0; i < s.dose.size(); ++i) {
    const double h = s.dose[i] / (ed50 + s.dose[i]);
    const double q = s.dose[i] / ((ed50 + s.dose[i]) * (ed50 + s.dose[i]));
    const double res = s.value[i] - (e0 + emax * h);
    rr += s.weight[i] * res * res;
    r += s.weight[i] * res;
    rh += s.weight[i] * res * h;
    rq += s.weight[i] * res * q;
  }
  const auto m = scalar::moments(s.dose, s.value, s.weight, e0, emax, ed50);
  CHECK(close(m.rr, rr, 1e-13));
  CHECK(close(m.r, r, 1e-13));
  CHECK(close(m.rh, rh, 1e-13));
  CHECK(close(m.rq, rq, 1e-13));
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!backend_available(Backend::Avx2)) {
    MESSAGE("AVX2 unavailable on this CPU; equivalence not exercised");
    return;
  }
  const auto& scalar_k = kernels(Backend::Scalar);
  const auto& avx = kernels(Backend::Avx2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 17u, 315u, 1000u}) {
    const Sample s = make_sample(n, 100 + n);
    const auto a = scalar_k.moments(s.dose, s.value, s.weight, -20.0, -60.0, 2.0);
    const auto b = avx.moments(s.dose, s.value, s.weight, -20.0, -60.0, 2.0);
    CHECK(close(b.rr, a.rr, 1e-12));
    CHECK(close(b.r, a.r, 1e-12));
    CHECK(close(b.rh, a.rh, 1e-12));
    CHECK(close(b.rq, a.rq, 1e-12));

    std::vector<double> oa(n), ob(n);
    scalar_k.weighted_residuals(s.dose, s.value, s.weight, 1.0, 2.0, 0.7, oa);
    avx.weighted_residuals(s.dose, s.value, s.weight, 1.0, 2.0, 0.7, ob);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(ob[i], oa[i], 1e-13));

    std::vector<double> ca(n), cb(n);
    scalar_k.curve(s.value, s.weight, s.dose, 4.5, ca);
    avx.curve(s.value, s.weight, s.dose, 4.5, cb);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(cb[i], ca[i], 1e-13));
  }
}

TEST_CASE("runtime dispatch returns a usable table") {
  const auto& k = kernels();
  CHECK(backend_available(k.backend));
  CHECK(backend_available(Backend::Scalar));
  CHECK_FALSE(backend_name(k.backend).empty());
}
