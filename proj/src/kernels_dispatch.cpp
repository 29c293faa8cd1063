#include "pdcp/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace pdcp::kern {

#if defined(PDCP_HAVE_AVX2)
const Kernels& avx2_kernels();
#endif
#if defined(PDCP_HAVE_NEON)
const Kernels& neon_kernels();
#endif

namespace {

const Kernels* lookup(const char* name) {
  if (std::strcmp(name, "scalar") == 0) return &scalar_kernels();
#if defined(PDCP_HAVE_AVX2)
  if (std::strcmp(name, "avx2") == 0 && __builtin_cpu_supports("avx2"))
    return &avx2_kernels();
#endif
#if defined(PDCP_HAVE_NEON)
  if (std::strcmp(name, "neon") == 0) return &neon_kernels();
#endif
  return nullptr;
}

const Kernels* detect() {
  if (const char* env = std::getenv("PDCP_KERNELS")) {
    if (const Kernels* k = lookup(env)) return k;
  }
#if defined(PDCP_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return &avx2_kernels();
#endif
#if defined(PDCP_HAVE_NEON)
  return &neon_kernels();
#endif
  return &scalar_kernels();
}

const Kernels*& slot() {
  static const Kernels* active_kernels = detect();
  return active_kernels;
}

}  // namespace

const Kernels& active() { return *slot(); }

const char* active_name() { return active().name; }

bool force_backend(const char* name) {
  const Kernels* k = lookup(name);
  if (!k) return false;
  slot() = k;
  return true;
}

}  // namespace pdcp::kern
