#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gridsentry/case_model.hpp"
#include "gridsentry/powerflow.hpp"

namespace gridsentry {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Pairwise sensitivity distances derived from a grounded conductance-like
// matrix. Zero diagonal, symmetric; a true metric whenever the underlying
// matrix is a Laplacian with nonnegative weights.
struct ResistanceDistanceMatrix {
  RowMatrix E;          // N x N
  int reference = 0;    // grounded node

  int size() const { return static_cast<int>(E.rows()); }
};

// Binary electrical-connectivity matrix obtained by thresholding E.
struct ConnectivityMatrix {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> C;
  double tau = 0.0;        // admission threshold: c_ij = 1 iff e(i,j) < tau
  int requested_K = 0;
  int branch_count = 0;    // realized distinct off-diagonal pairs
  bool tie = false;        // boundary tie admitted more pairs than requested

  int size() const { return static_cast<int>(C.rows()); }
};

// Grounds `g` at `reference` (deletes that row/column), inverts the reduced
// matrix, and assembles the full distance matrix: for i,j != r
//   e(i,j) = ginv(i,i) + ginv(j,j) - ginv(i,j) - ginv(j,i)
// and e(r,k) = e(k,r) = ginv(k,k). Throws NumericalError when the reduced
// matrix is singular or its condition estimate exceeds 1e12.
ResistanceDistanceMatrix resistance_distance(const Eigen::MatrixXd& g,
                                             int reference);

// The N x N angle-sensitivity conductance matrix (slack row/column included):
// the symmetric Laplacian part of the full dP/dtheta block, with pairwise
// weights V_i V_j B_ij cos(theta_ij) (power-transaction sensitivity at
// constant voltage). Equals dP/dtheta itself for a lossless network at flat
// start; weights are nonnegative whenever series reactances are.
Eigen::MatrixXd sensitivity_matrix_from_jacobian(const Jacobian& j);

// Keeps the K smallest off-diagonal pairs of E as edges. tau lands on the
// next distinct value above the K-th smallest, so boundary ties are all
// admitted (and flagged). Diagonal forced to 1. 0 < K <= N(N-1)/2.
ConnectivityMatrix connectivity(const ResistanceDistanceMatrix& e, int k);

// Physical-topology counterpart: in-service branch adjacency + unit diagonal.
ConnectivityMatrix physical_adjacency(const CaseData& c);

// Metric-space measurements of E (all via the kernel backend).
struct MetricCheck {
  double max_abs_diagonal = 0.0;
  double max_asymmetry = 0.0;
  double min_entry = 0.0;              // most negative off-diagonal entry
  double max_triangle_violation = 0.0;

  bool passes(double diag_tol = 1e-12, double sym_tol = 1e-12,
              double triangle_tol = 1e-9) const {
    return max_abs_diagonal <= diag_tol && max_asymmetry <= sym_tol &&
           min_entry >= -triangle_tol && max_triangle_violation <= triangle_tol;
  }
};

MetricCheck check_metric(const ResistanceDistanceMatrix& e);

}  // namespace gridsentry
