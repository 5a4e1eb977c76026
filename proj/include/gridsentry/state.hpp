#pragma once

#include <Eigen/Core>

#include "gridsentry/case_model.hpp"

namespace gridsentry {

// System state [theta at non-slack buses (internal order), V at all buses],
// dimension 2N-1. The slack angle is pinned by the case and not part of the
// state.
struct StateVector {
  Eigen::VectorXd values;
  int timestamp = 0;

  int dimension() const { return static_cast<int>(values.size()); }
};

// Expands the angle part to a full N-vector, inserting the case's slack
// angle, and returns (theta, V).
void unpack_state(const CaseData& c, const StateVector& s, Eigen::VectorXd& theta,
                  Eigen::VectorXd& v);

// Inverse of unpack_state.
StateVector pack_state(const CaseData& c, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& v, int timestamp = 0);

}  // namespace gridsentry
