#pragma once

#include <Eigen/Core>
#include <complex>

#include "gridsentry/case_model.hpp"
#include "gridsentry/state.hpp"

namespace gridsentry {

// Bus admittance matrix (dense; N <= a few hundred here). Symmetric when no
// phase-shifting transformers are present.
struct YBus {
  Eigen::MatrixXcd Y;

  Eigen::MatrixXd G() const { return Y.real(); }
  Eigen::MatrixXd B() const { return Y.imag(); }
};

// Standard pi-model assembly with taps, shifts, line charging and bus shunts.
// Out-of-service branches contribute nothing.
YBus build_ybus(const CaseData& c);

// Active/reactive injections at every bus for the given full (theta, V), p.u.
void power_injections(const CaseData& c, const YBus& y,
                      const Eigen::VectorXd& theta, const Eigen::VectorXd& v,
                      Eigen::VectorXd& p, Eigen::VectorXd& q);

// Polar power-flow Jacobian, all four blocks kept full (N x N, every bus a
// variable) plus the reduced dP/dtheta with the slack row/column removed.
// Each full dP/dtheta row sums to zero: shifting every angle together leaves
// injections unchanged.
struct Jacobian {
  Eigen::MatrixXd dP_dtheta;  // N x N
  Eigen::MatrixXd dP_dV;      // N x N
  Eigen::MatrixXd dQ_dtheta;  // N x N
  Eigen::MatrixXd dQ_dV;      // N x N
  StateVector state;          // evaluation point
  int slack = 0;

  Eigen::MatrixXd reduced_dP_dtheta() const;  // (N-1) x (N-1)
};

// Analytic evaluation at the given state. Throws NumericalError on non-finite
// entries or non-positive voltage magnitudes.
Jacobian compute_jacobian(const CaseData& c, const StateVector& s);

struct PowerFlowOptions {
  double tolerance = 1e-8;  // max |mismatch|, p.u.
  int max_iterations = 30;
  bool flat_start = true;   // V=1 / setpoints, all angles at the slack angle
};

// Newton-Raphson solution of the mismatch equations. Returns the converged
// state; throws ConvergenceError (with the final mismatch norm) or
// NumericalError on a singular iteration matrix.
StateVector solve_powerflow(const CaseData& c, const PowerFlowOptions& opt = {});

}  // namespace gridsentry
