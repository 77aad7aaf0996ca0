#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic for the dense layers. Every kernel has a scalar
// reference version and, on x86-64, an AVX2+FMA version; the active table is
// chosen once at startup from the CPU features (or MENTOR_ISA=scalar|avx2)
// and can be switched for equivalence testing.

namespace mentor::netcore::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// C[m x n] (+)= A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n, bool accumulate);
  /// C[m x n] += A^T * B with A[k x m], B[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  /// C[m x n] (+)= A * B^T with A[m x k], B[n x k]
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n, bool accumulate);
};

const KernelTable& scalar_table();
/// Null when the build has no AVX2 path.
const KernelTable* avx2_table();

bool cpu_has_avx2();

/// Table used by all layers.
const KernelTable& active();
/// Switch the active table. Throws ParameterError if the ISA is unavailable.
void set_active(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace mentor::netcore::kernels
