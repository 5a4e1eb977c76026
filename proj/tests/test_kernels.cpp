#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <limits>
#include <random>
#include <vector>

#include "gridsentry/kernels.hpp"

using namespace gridsentry;

namespace {

std::vector<double> random_matrix(int n, std::mt19937_64& rng, double lo = -5.0,
                                  double hi = 5.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (auto& v : m) v = dist(rng);
  return m;
}

// Independent reference for the triangle scan: plain triple loop, different
// expression grouping than the kernel.
double triangle_violation_reference(const std::vector<double>& e, int n) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double lhs = e[i * n + j];
        const double rhs = e[i * n + k] + e[k * n + j];
        if (lhs - rhs > worst) worst = lhs - rhs;
      }
  return worst;
}

struct BackendGuard {
  kernels::Backend saved = kernels::active_backend();
  ~BackendGuard() { kernels::force_backend(saved); }
};

}  // namespace

TEST_CASE("scalar backend is always supported") {
  CHECK(kernels::backend_supported(kernels::Backend::Scalar));
  BackendGuard guard;
  kernels::force_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
}

TEST_CASE("pairwise resistance kernel matches the formula and zeroes the "
          "diagonal") {
  std::mt19937_64 rng(7);
  BackendGuard guard;
  for (int n : {1, 2, 3, 5, 8, 13, 117}) {
    const auto inv = random_matrix(n, rng);
    std::vector<double> inv_t(inv.size()), diag(n);
    for (int i = 0; i < n; ++i) {
      diag[i] = inv[i * n + i];
      for (int j = 0; j < n; ++j) inv_t[j * n + i] = inv[i * n + j];
    }
    std::vector<double> out(inv.size());
    kernels::force_backend(kernels::Backend::Scalar);
    kernels::pairwise_resistance(inv.data(), inv_t.data(), diag.data(), n,
                                 out.data());
    for (int i = 0; i < n; ++i) {
      CHECK(out[i * n + i] == 0.0);
      for (int j = 0; j < n; ++j) {
        const double expect =
            (diag[i] + diag[j]) - inv[i * n + j] - inv[j * n + i];
        CHECK(out[i * n + j] == doctest::Approx(expect).epsilon(1e-15));
      }
    }
    if (kernels::backend_supported(kernels::Backend::Avx2)) {
      std::vector<double> out2(inv.size());
      kernels::force_backend(kernels::Backend::Avx2);
      kernels::pairwise_resistance(inv.data(), inv_t.data(), diag.data(), n,
                                   out2.data());
      CHECK(out2 == out);  // bit-identical
    }
  }
}

TEST_CASE("triangle violation kernel agrees with the brute-force reference") {
  std::mt19937_64 rng(11);
  BackendGuard guard;
  for (int n : {1, 2, 3, 4, 7, 12, 33}) {
    const auto e = random_matrix(n, rng, 0.0, 10.0);
    const double expect = triangle_violation_reference(e, n);
    kernels::force_backend(kernels::Backend::Scalar);
    const double scalar = kernels::max_triangle_violation(e.data(), n);
    CHECK(scalar == doctest::Approx(expect).epsilon(1e-14));
    if (kernels::backend_supported(kernels::Backend::Avx2)) {
      kernels::force_backend(kernels::Backend::Avx2);
      CHECK(kernels::max_triangle_violation(e.data(), n) == scalar);
    }
  }
}

TEST_CASE("a true metric has non-positive triangle violation") {
  // distances on a line: e(i,j) = |i-j| is a metric
  const int n = 9;
  std::vector<double> e(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e[i * n + j] = std::abs(i - j);
  CHECK(kernels::max_triangle_violation(e.data(), n) <= 0.0);
  // breaking one entry produces a positive violation
  e[0 * n + (n - 1)] = 100.0;
  e[(n - 1) * n + 0] = 100.0;
  CHECK(kernels::max_triangle_violation(e.data(), n) > 0.0);
}

TEST_CASE("off-diagonal min kernel") {
  std::mt19937_64 rng(13);
  BackendGuard guard;
  for (int n : {2, 3, 6, 9, 31, 118}) {
    auto e = random_matrix(n, rng, 0.0, 1.0);
    for (int i = 0; i < n; ++i) e[i * n + i] = -100.0;  // must be ignored
    double expect = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) expect = std::min(expect, e[i * n + j]);
    kernels::force_backend(kernels::Backend::Scalar);
    CHECK(kernels::min_off_diagonal(e.data(), n) == expect);
    if (kernels::backend_supported(kernels::Backend::Avx2)) {
      kernels::force_backend(kernels::Backend::Avx2);
      CHECK(kernels::min_off_diagonal(e.data(), n) == expect);
    }
  }
}

TEST_CASE("matvec agrees with Eigen within rounding") {
  std::mt19937_64 rng(17);
  BackendGuard guard;
  for (int rows : {1, 2, 5, 27, 118}) {
    const int cols = rows;
    const auto a = random_matrix(rows, rng);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        am(a.data(), rows, cols);
    Eigen::VectorXd x = Eigen::VectorXd::Random(cols);
    const Eigen::VectorXd expect = am * x;
    std::vector<double> y(rows);
    for (auto backend : {kernels::Backend::Scalar, kernels::Backend::Avx2}) {
      if (!kernels::backend_supported(backend)) continue;
      kernels::force_backend(backend);
      kernels::matvec(a.data(), rows, cols, x.data(), y.data());
      for (int i = 0; i < rows; ++i)
        CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forcing an unsupported backend throws") {
  if (!kernels::backend_supported(kernels::Backend::Avx2))
    CHECK_THROWS_AS(kernels::force_backend(kernels::Backend::Avx2),
                    std::invalid_argument);
  else
    CHECK_NOTHROW(kernels::force_backend(kernels::active_backend()));
}
