#include <random>
#include <vector>

#include "cfb/checks.hpp"
#include "cfb/simd/kernels.hpp"
#include "doctest.h"

using namespace cfb;

TEST_CASE("every available variant matches the scalar reference") {
  const auto r = checks::simd_equivalence(11);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("dispatch can be forced and restored") {
  const simd::Isa original = simd::active_isa();
  const auto isas = simd::available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == simd::Isa::Scalar);
  for (auto isa : isas) {
    simd::force_isa(isa);
    CHECK(simd::active_isa() == isa);
  }
  simd::force_isa(original);
  CHECK(simd::active_isa() == original);
}

TEST_CASE("span lengths must agree") {
  const std::vector<double> a(5, 1.0), b(4, 1.0);
  CHECK_THROWS(simd::sq_euclidean(a, b));
  CHECK_THROWS(simd::weighted_dot(a, a, b));
}

TEST_CASE("known values") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1}, w{1, 0.5, 0, 2, 1};
  for (auto isa : simd::available_isas()) {
    simd::force_isa(isa);
    CHECK(simd::sq_euclidean(a, b) == 40.0);
    CHECK(simd::weighted_sq_diff(a, b, w) == 16 + 2 + 0 + 8 + 16);
    CHECK(simd::weighted_dot(a, b, w) == 5 + 4 + 0 + 16 + 5);
  }
}
