#pragma once

// Data-parallel reductions used by the distance and Gram builders.
//
// Every kernel has a scalar reference in cfb::simd::scalar and vectorized
// variants (AVX2+FMA on x86-64, NEON on AArch64). The free functions in
// cfb::simd forward to whichever variant was selected at startup from the
// CPU feature flags. Variants agree with the scalar reference up to
// floating-point reassociation, never bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cfb::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// ISA currently used by the dispatching entry points.
Isa active_isa();

/// ISAs compiled in and supported by the running CPU; Scalar is always first.
std::vector<Isa> available_isas();

/// Pin the dispatch target. Throws std::invalid_argument if `isa` is not available.
void force_isa(Isa isa);

/// sum_i w[i] * (a[i] - b[i])^2
double weighted_sq_diff(std::span<const double> a, std::span<const double> b,
                        std::span<const double> w);

/// sum_i w[i] * a[i] * b[i]
double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> w);

/// sum_i (a[i] - b[i])^2
double sq_euclidean(std::span<const double> a, std::span<const double> b);

namespace scalar {
double weighted_sq_diff(const double* a, const double* b, const double* w, std::size_t n);
double weighted_dot(const double* a, const double* b, const double* w, std::size_t n);
double sq_euclidean(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double weighted_sq_diff(const double* a, const double* b, const double* w, std::size_t n);
double weighted_dot(const double* a, const double* b, const double* w, std::size_t n);
double sq_euclidean(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double weighted_sq_diff(const double* a, const double* b, const double* w, std::size_t n);
double weighted_dot(const double* a, const double* b, const double* w, std::size_t n);
double sq_euclidean(const double* a, const double* b, std::size_t n);
}  // namespace neon
#endif

}  // namespace cfb::simd
