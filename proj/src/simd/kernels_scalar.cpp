#include "cfb/simd/kernels.hpp"

namespace cfb::simd::scalar {

double weighted_sq_diff(const double* a, const double* b, const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += w[i] * d * d;
  }
  return acc;
}

double weighted_dot(const double* a, const double* b, const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * a[i] * b[i];
  return acc;
}

double sq_euclidean(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace cfb::simd::scalar
