#include <atomic>
#include <cstdlib>
#include <string_view>

#include "iongate/kernels.hpp"

namespace iongate::kernels {

#ifndef IONGATE_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* detect() {
  if (const char* env = std::getenv("IONGATE_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_table();
  }
  if (avx2_table() != nullptr && cpu_has_avx2()) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{detect()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view which) {
  if (which == "scalar") {
    slot().store(&scalar_table(), std::memory_order_release);
    return true;
  }
  if (which == "avx2") {
    if (avx2_table() == nullptr || !cpu_has_avx2()) return false;
    slot().store(avx2_table(), std::memory_order_release);
    return true;
  }
  return false;
}

}  // namespace iongate::kernels
