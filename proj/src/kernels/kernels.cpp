#include "gridsentry/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace gridsentry::kernels {

namespace {

void pairwise_resistance_scalar(const double* inv, const double* inv_t,
                                const double* diag, int n, double* out) {
  for (int i = 0; i < n; ++i) {
    const double di = diag[i];
    const double* inv_row = inv + static_cast<std::size_t>(i) * n;
    const double* invt_row = inv_t + static_cast<std::size_t>(i) * n;
    double* out_row = out + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      out_row[j] = (di + diag[j]) - inv_row[j] - invt_row[j];
    }
  }
}

double max_triangle_violation_scalar(const double* e, int n) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double* ei = e + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      const double eik = ei[k];
      const double* ek = e + static_cast<std::size_t>(k) * n;
      for (int j = 0; j < n; ++j) {
        const double v = (ei[j] - eik) - ek[j];
        if (v > worst) worst = v;
      }
    }
  }
  return worst;
}

double min_off_diagonal_scalar(const double* e, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double* row = e + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < i; ++j)
      if (row[j] < best) best = row[j];
    for (int j = i + 1; j < n; ++j)
      if (row[j] < best) best = row[j];
  }
  return best;
}

void matvec_scalar(const double* a, int rows, int cols, const double* x,
                   double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* row = a + static_cast<std::size_t>(i) * cols;
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

Backend pick_default() {
#if defined(GRIDSENTRY_HAVE_AVX2)
  if (const char* env = std::getenv("GRIDSENTRY_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && backend_supported(Backend::Avx2)) return Backend::Avx2;
  }
  if (backend_supported(Backend::Avx2)) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{pick_default()};
  return b;
}

const detail::KernelTable& table_for(Backend b) {
#if defined(GRIDSENTRY_HAVE_AVX2)
  if (b == Backend::Avx2) return detail::avx2_table();
#endif
  (void)b;
  return detail::scalar_table();
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() {
  static const KernelTable t{pairwise_resistance_scalar,
                             max_triangle_violation_scalar,
                             min_off_diagonal_scalar, matvec_scalar};
  return t;
}
}  // namespace detail

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(GRIDSENTRY_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument("kernel backend not supported on this CPU: " +
                                std::string(backend_name(b)));
  current().store(b, std::memory_order_relaxed);
}

void pairwise_resistance(const double* inv, const double* inv_t,
                         const double* diag, int n, double* out) {
  table_for(active_backend()).pairwise_resistance(inv, inv_t, diag, n, out);
}

double max_triangle_violation(const double* e, int n) {
  return table_for(active_backend()).max_triangle_violation(e, n);
}

double min_off_diagonal(const double* e, int n) {
  return table_for(active_backend()).min_off_diagonal(e, n);
}

void matvec(const double* a, int rows, int cols, const double* x, double* y) {
  table_for(active_backend()).matvec(a, rows, cols, x, y);
}

}  // namespace gridsentry::kernels
