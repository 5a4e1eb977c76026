#include "gridsentry/electrical_structure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "gridsentry/kernels.hpp"

namespace gridsentry {

ResistanceDistanceMatrix resistance_distance(const Eigen::MatrixXd& g,
                                             int reference) {
  const int n = static_cast<int>(g.rows());
  if (g.cols() != n) throw ValidationError("sensitivity matrix must be square");
  if (reference < 0 || reference >= n)
    throw ValidationError("reference node out of range");
  if (n < 2) throw ValidationError("need at least 2 nodes");

  // Ground at `reference`: delete its row and column.
  const int m = n - 1;
  Eigen::MatrixXd gkk(m, m);
  for (int i = 0, ri = 0; i < n; ++i) {
    if (i == reference) continue;
    for (int j = 0, rj = 0; j < n; ++j) {
      if (j == reference) continue;
      gkk(ri, rj++) = g(i, j);
    }
    ++ri;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(gkk);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-12)
    throw NumericalError(
        "grounded sensitivity matrix is singular or ill-conditioned "
        "(condition estimate " +
        std::to_string(rcond > 0 ? 1.0 / rcond
                                 : std::numeric_limits<double>::infinity()) +
        ", reference node index " + std::to_string(reference) + ")");

  const Eigen::MatrixXd inv = lu.inverse();
  if (!inv.allFinite())
    throw NumericalError(
        "non-finite inverse of grounded sensitivity matrix (reference node "
        "index " +
        std::to_string(reference) + ")");

  const RowMatrix inv_rm = inv;
  const RowMatrix invt_rm = inv.transpose();
  Eigen::VectorXd diag = inv.diagonal();

  RowMatrix d(m, m);
  kernels::pairwise_resistance(inv_rm.data(), invt_rm.data(), diag.data(), m,
                               d.data());

  ResistanceDistanceMatrix out;
  out.reference = reference;
  out.E.setZero(n, n);
  for (int i = 0, ri = 0; i < n; ++i) {
    if (i == reference) continue;
    for (int j = 0, rj = 0; j < n; ++j) {
      if (j == reference) continue;
      out.E(i, j) = d(ri, rj++);
    }
    out.E(i, reference) = diag[ri];
    out.E(reference, i) = diag[ri];
    ++ri;
  }
  out.E(reference, reference) = 0.0;
  return out;
}

Eigen::MatrixXd sensitivity_matrix_from_jacobian(const Jacobian& j) {
  // The resistance-distance construction needs a conductance matrix that
  // acts as a Laplacian (symmetric, zero row sums, rank N-1). The raw
  // dP/dtheta block of a lossy network is neither symmetric nor zero-row-sum
  // (the G_ij sin(theta_ij) terms and the -Q_i diagonal spoil it), and the
  // resulting E measurably breaks the triangle inequality. Its symmetric
  // Laplacian part has pairwise weights V_i V_j B_ij cos(theta_ij) -- the
  // angle-difference sensitivity to power transactions at constant voltage,
  // nonnegative exactly when series reactances are nonnegative. For a
  // lossless network at flat start this equals dP/dtheta itself.
  const int n = static_cast<int>(j.dP_dtheta.rows());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double w = -0.5 * (j.dP_dtheta(a, b) + j.dP_dtheta(b, a));
      s(a, b) = -w;
      s(b, a) = -w;
      s(a, a) += w;
      s(b, b) += w;
    }
  return s;
}

ConnectivityMatrix connectivity(const ResistanceDistanceMatrix& e, int k) {
  const int n = e.size();
  const long pairs = static_cast<long>(n) * (n - 1) / 2;
  if (k <= 0 || k > pairs)
    throw ValidationError("branch budget K=" + std::to_string(k) +
                          " out of range (1.." + std::to_string(pairs) + ")");

  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(pairs));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) vals.push_back(e.E(i, j));
  std::sort(vals.begin(), vals.end());

  const double kth = vals[static_cast<std::size_t>(k) - 1];
  auto next_distinct = std::upper_bound(vals.begin(), vals.end(), kth);
  const double tau = next_distinct == vals.end()
                         ? std::nextafter(kth, std::numeric_limits<double>::infinity())
                         : *next_distinct;
  const int realized = static_cast<int>(next_distinct - vals.begin());

  ConnectivityMatrix out;
  out.tau = tau;
  out.requested_K = k;
  out.branch_count = realized;
  out.tie = realized != k;
  out.C.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    out.C(i, i) = 1;
    for (int j = i + 1; j < n; ++j) {
      const std::uint8_t c = e.E(i, j) < tau ? 1 : 0;
      out.C(i, j) = c;
      out.C(j, i) = c;
    }
  }
  return out;
}

ConnectivityMatrix physical_adjacency(const CaseData& c) {
  ConnectivityMatrix out;
  out.C.setZero(c.N, c.N);
  for (int i = 0; i < c.N; ++i) out.C(i, i) = 1;
  int edges = 0;
  for (const auto& br : c.branches) {
    if (!br.in_service()) continue;
    const int f = c.internal_index(br.from_bus);
    const int t = c.internal_index(br.to_bus);
    if (out.C(f, t) == 0) ++edges;
    out.C(f, t) = 1;
    out.C(t, f) = 1;
  }
  out.requested_K = edges;
  out.branch_count = edges;
  out.tau = 0.0;
  return out;
}

MetricCheck check_metric(const ResistanceDistanceMatrix& e) {
  const int n = e.size();
  MetricCheck out;
  for (int i = 0; i < n; ++i)
    out.max_abs_diagonal = std::max(out.max_abs_diagonal, std::abs(e.E(i, i)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      out.max_asymmetry =
          std::max(out.max_asymmetry, std::abs(e.E(i, j) - e.E(j, i)));
  out.min_entry = n >= 2 ? kernels::min_off_diagonal(e.E.data(), n) : 0.0;
  out.max_triangle_violation = kernels::max_triangle_violation(e.E.data(), n);
  return out;
}

}  // namespace gridsentry
