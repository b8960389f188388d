#include "cfb/kernel_spec.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cfb/error.hpp"

namespace cfb {

void KernelSpec::validate() const {
  if (kind == KernelKind::Linear) {
    if (!std::isfinite(offset)) throw InvalidArgument("linear kernel: offset must be finite");
    return;
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument("kernel bandwidth must be positive and finite, got " +
                          std::to_string(bandwidth));
  }
}

std::string_view kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::GaussianNormalized:
      return "gaussian_normalized";
    case KernelKind::Gaussian:
      return "gaussian";
    case KernelKind::Exponential:
      return "exponential";
    case KernelKind::Linear:
      return "linear";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  for (KernelKind k : {KernelKind::GaussianNormalized, KernelKind::Gaussian,
                       KernelKind::Exponential, KernelKind::Linear}) {
    if (kernel_kind_name(k) == name) return k;
  }
  throw InvalidArgument("unknown kernel kind '" + std::string(name) + "'");
}

double kernel_eval(const KernelSpec& spec, double x) {
  if (spec.kind == KernelKind::Linear) return x + spec.offset;
  if (x < 0.0) {
    if (x < -1e-12) {
      throw InvalidArgument("kernel_eval: negative squared distance " + std::to_string(x));
    }
    x = 0.0;
  }
  const double s = spec.bandwidth;
  switch (spec.kind) {
    case KernelKind::GaussianNormalized:
      return std::exp(-x / (s * s)) / (std::sqrt(2.0 * std::numbers::pi) * s);
    case KernelKind::Gaussian:
      return std::exp(-2.0 * x / s);
    case KernelKind::Exponential:
      return std::exp(-std::sqrt(x) / s);
    case KernelKind::Linear:
      break;
  }
  return x + spec.offset;
}

std::string describe(const KernelSpec& spec) {
  std::ostringstream os;
  os << kernel_kind_name(spec.kind);
  if (spec.distance_based()) {
    os << "(bandwidth=" << spec.bandwidth << ")";
  } else {
    os << "(offset=" << spec.offset << ")";
  }
  return os.str();
}

}  // namespace cfb
