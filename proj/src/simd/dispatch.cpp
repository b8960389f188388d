#include <atomic>
#include <stdexcept>
#include <string>

#include "cfb/simd/kernels.hpp"

namespace cfb::simd {
namespace {

struct Table {
  Isa isa;
  double (*weighted_sq_diff)(const double*, const double*, const double*, std::size_t);
  double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
  double (*sq_euclidean)(const double*, const double*, std::size_t);
};

constexpr Table kScalar{Isa::Scalar, scalar::weighted_sq_diff, scalar::weighted_dot,
                        scalar::sq_euclidean};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2{Isa::Avx2, avx2::weighted_sq_diff, avx2::weighted_dot,
                      avx2::sq_euclidean};
#endif
#if defined(__aarch64__)
constexpr Table kNeon{Isa::Neon, neon::weighted_sq_diff, neon::weighted_dot,
                      neon::sq_euclidean};
#endif

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
      return &kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::Neon:
      return &kNeon;
#endif
    default:
      return nullptr;
  }
}

const Table* detect() {
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_has(isa) && table_for(isa) != nullptr) return table_for(isa);
  }
  return &kScalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{detect()};
  return table;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd kernel: length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa active_isa() { return current().load(std::memory_order_acquire)->isa; }

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_has(isa) && table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

void force_isa(Isa isa) {
  if (!cpu_has(isa) || table_for(isa) == nullptr) {
    throw std::invalid_argument("simd: ISA not available: " + std::string(isa_name(isa)));
  }
  current().store(table_for(isa), std::memory_order_release);
}

double weighted_sq_diff(std::span<const double> a, std::span<const double> b,
                        std::span<const double> w) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), w.size());
  return current().load(std::memory_order_acquire)
      ->weighted_sq_diff(a.data(), b.data(), w.data(), a.size());
}

double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> w) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), w.size());
  return current().load(std::memory_order_acquire)
      ->weighted_dot(a.data(), b.data(), w.data(), a.size());
}

double sq_euclidean(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return current().load(std::memory_order_acquire)->sq_euclidean(a.data(), b.data(), a.size());
}

}  // namespace cfb::simd
