// AVX2/FMA variants. Compiled with -mavx2 -mfma in its own translation unit;
// only reached when cpuid reports support.

#include "gridsentry/kernels.hpp"

#include <immintrin.h>

#include <limits>

namespace gridsentry::kernels {
namespace {

void pairwise_resistance_avx2(const double* inv, const double* inv_t,
                              const double* diag, int n, double* out) {
  for (int i = 0; i < n; ++i) {
    const double di = diag[i];
    const __m256d vdi = _mm256_set1_pd(di);
    const double* inv_row = inv + static_cast<std::size_t>(i) * n;
    const double* invt_row = inv_t + static_cast<std::size_t>(i) * n;
    double* out_row = out + static_cast<std::size_t>(i) * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d v = _mm256_add_pd(vdi, _mm256_loadu_pd(diag + j));
      v = _mm256_sub_pd(v, _mm256_loadu_pd(inv_row + j));
      v = _mm256_sub_pd(v, _mm256_loadu_pd(invt_row + j));
      _mm256_storeu_pd(out_row + j, v);
    }
    for (; j < n; ++j) out_row[j] = (di + diag[j]) - inv_row[j] - invt_row[j];
  }
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d m = _mm_max_pd(lo, hi);
  m = _mm_max_sd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(m);
}

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d m = _mm_min_pd(lo, hi);
  m = _mm_min_sd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(m);
}

double max_triangle_violation_avx2(const double* e, int n) {
  double worst = -std::numeric_limits<double>::infinity();
  __m256d vworst = _mm256_set1_pd(worst);
  for (int i = 0; i < n; ++i) {
    const double* ei = e + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      const double eik = ei[k];
      const __m256d veik = _mm256_set1_pd(eik);
      const double* ek = e + static_cast<std::size_t>(k) * n;
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d v = _mm256_sub_pd(_mm256_loadu_pd(ei + j), veik);
        v = _mm256_sub_pd(v, _mm256_loadu_pd(ek + j));
        vworst = _mm256_max_pd(vworst, v);
      }
      for (; j < n; ++j) {
        const double v = (ei[j] - eik) - ek[j];
        if (v > worst) worst = v;
      }
    }
  }
  const double vec = hmax(vworst);
  return vec > worst ? vec : worst;
}

double min_off_diagonal_avx2(const double* e, int n) {
  double best = std::numeric_limits<double>::infinity();
  __m256d vbest = _mm256_set1_pd(best);
  for (int i = 0; i < n; ++i) {
    const double* row = e + static_cast<std::size_t>(i) * n;
    // strip [0, i)
    int j = 0;
    for (; j + 4 <= i; j += 4)
      vbest = _mm256_min_pd(vbest, _mm256_loadu_pd(row + j));
    for (; j < i; ++j)
      if (row[j] < best) best = row[j];
    // strip (i, n)
    j = i + 1;
    for (; j + 4 <= n; j += 4)
      vbest = _mm256_min_pd(vbest, _mm256_loadu_pd(row + j));
    for (; j < n; ++j)
      if (row[j] < best) best = row[j];
  }
  const double vec = hmin(vbest);
  return vec < best ? vec : best;
}

void matvec_avx2(const double* a, int rows, int cols, const double* x,
                 double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* row = a + static_cast<std::size_t>(i) * cols;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int j = 0;
    for (; j + 8 <= cols; j += 8) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j),
                             acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j + 4),
                             _mm256_loadu_pd(x + j + 4), acc1);
    }
    for (; j + 4 <= cols; j += 4) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j),
                             acc0);
    }
    __m256d acc = _mm256_add_pd(acc0, acc1);
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    double total = _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
    for (; j < cols; ++j) total += row[j] * x[j];
    y[i] = total;
  }
}

}  // namespace

namespace detail {
const KernelTable& avx2_table() {
  static const KernelTable t{pairwise_resistance_avx2,
                             max_triangle_violation_avx2,
                             min_off_diagonal_avx2, matvec_avx2};
  return t;
}
}  // namespace detail

}  // namespace gridsentry::kernels
