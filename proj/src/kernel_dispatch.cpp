#include <cstdlib>
#include <string>

#include "bdi/common.hpp"
#include "bdi/kernel.hpp"

namespace bdi::kernel {

namespace detail {
void sweep_scalar(const PointEval*, std::size_t, const double*, std::size_t,
                  const SweepRange&, double*, double*, double*);
#if BDI_BUILD_AVX2
void sweep_avx2(const PointEval*, std::size_t, const double*, std::size_t,
                const SweepRange&, double*, double*, double*);
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if BDI_BUILD_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("BDI_KERNEL")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2") {
      if (!cpu_has_avx2()) throw error("BDI_KERNEL=avx2 requested but unsupported");
      return Backend::Avx2;
    }
    if (!v.empty()) throw error("BDI_KERNEL: unknown backend '" + v + "'");
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend& current() {
  static Backend b = detect_backend();
  return b;
}

}  // namespace

bool backend_supported(Backend b) {
  return b == Backend::Scalar || (b == Backend::Avx2 && cpu_has_avx2());
}

Backend active_backend() { return current(); }

void set_backend(Backend b) {
  if (!backend_supported(b)) throw error("kernel backend not supported on this CPU");
  current() = b;
}

const char* backend_name(Backend b) {
  return b == Backend::Scalar ? "scalar" : "avx2";
}

sweep_fn sweep_for(Backend b) {
#if BDI_BUILD_AVX2
  if (b == Backend::Avx2) return detail::sweep_avx2;
#endif
  (void)b;
  return detail::sweep_scalar;
}

sweep_fn sweep() { return sweep_for(current()); }

}  // namespace bdi::kernel
