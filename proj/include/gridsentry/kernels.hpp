#pragma once

#include <cstdint>
#include <string_view>

// Data-parallel inner loops of the pipeline, with a scalar reference
// implementation and SIMD variants selected once at startup from cpuid.
// All matrices are dense row-major. The reduction kernels (triangle scan,
// off-diagonal min) and the elementwise assembly are bit-identical across
// backends; matvec reassociates the accumulation and agrees to rounding.
namespace gridsentry::kernels {

enum class Backend {
  Scalar,
  Avx2,
};

std::string_view backend_name(Backend b);

// Backend used by the free functions below. Defaults to the best variant
// the CPU supports; GRIDSENTRY_KERNELS=scalar|avx2 overrides at startup.
Backend active_backend();
bool backend_supported(Backend b);

// Testing hook. Throws std::invalid_argument if unsupported on this CPU.
void force_backend(Backend b);

// out[i*n+j] = (diag[i] + diag[j]) - inv[i*n+j] - inv_t[i*n+j]
// where inv_t is the transpose of inv and diag its diagonal. This is the
// pairwise resistance distance of a grounded conductance inverse; the
// diagonal comes out exactly zero.
void pairwise_resistance(const double* inv, const double* inv_t,
                         const double* diag, int n, double* out);

// max over all (i,j,k) of e[i,j] - e[i,k] - e[k,j]; <= 0 means the matrix
// satisfies the triangle inequality. n >= 1.
double max_triangle_violation(const double* e, int n);

// min over i != j of e[i,j]; +inf for n < 2.
double min_off_diagonal(const double* e, int n);

// y = a * x for a dense row-major (rows x cols) matrix.
void matvec(const double* a, int rows, int cols, const double* x, double* y);

namespace detail {
struct KernelTable {
  void (*pairwise_resistance)(const double*, const double*, const double*,
                              int, double*);
  double (*max_triangle_violation)(const double*, int);
  double (*min_off_diagonal)(const double*, int);
  void (*matvec)(const double*, int, int, const double*, double*);
};

const KernelTable& scalar_table();
#if defined(GRIDSENTRY_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace gridsentry::kernels
