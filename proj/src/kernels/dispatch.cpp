#include <cstdlib>
#include <string>

#include "tshrink/kernels.hpp"

namespace tshrink::kernels {
namespace {

Backend detect_backend() {
  const char* env = std::getenv("TWEEDIE_SHRINK_SIMD");
  const std::string requested = env ? env : "auto";
  if (requested == "scalar") return Backend::scalar;
#if defined(__x86_64__)
  const bool have_avx2 = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (requested == "avx2") return have_avx2 ? Backend::avx2 : Backend::scalar;
  if (requested == "auto" && have_avx2) return Backend::avx2;
#elif defined(__aarch64__)
  if (requested == "neon" || requested == "auto") return Backend::neon;
#endif
  return Backend::scalar;
}

}  // namespace

Backend active_backend() {
  static const Backend backend = detect_backend();
  return backend;
}

const KernelTable& active_table() {
  switch (active_backend()) {
#if defined(__x86_64__)
    case Backend::avx2: return avx2_table();
#endif
#if defined(__aarch64__)
    case Backend::neon: return neon_table();
#endif
    default: return scalar_table();
  }
}

std::string backend_name(Backend backend) {
  switch (backend) {
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
    default: return "scalar";
  }
}

}  // namespace tshrink::kernels
