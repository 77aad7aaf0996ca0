#include "mentor/netcore/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "mentor/error.hpp"

namespace mentor::netcore::kernels {

namespace {

const KernelTable kScalar{Isa::scalar,     scalar::dot,     scalar::axpy,
                          scalar::gemm_nn, scalar::gemm_tn, scalar::gemm_nt};

#if defined(MENTOR_HAVE_AVX2)
const KernelTable kAvx2{Isa::avx2, avx2::dot, avx2::axpy, avx2::gemm_nn, avx2::gemm_tn, avx2::gemm_nt};
#endif

const KernelTable* initial_table() {
  if (const char* env = std::getenv("MENTOR_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
  }
  if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(MENTOR_HAVE_AVX2)
  return &kAvx2;
#else
  return nullptr;
#endif
}

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (isa == Isa::scalar) {
    active_slot().store(&kScalar);
    return;
  }
  const KernelTable* t = avx2_table();
  if (t == nullptr || !cpu_has_avx2()) throw ParameterError("AVX2 kernels are not available");
  active_slot().store(t);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace mentor::netcore::kernels
