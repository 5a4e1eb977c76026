#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridsentry/electrical_structure.hpp"

namespace gridsentry {

// Minimum-PMU instance: binary C with unit diagonal, right-hand side the
// implicit all-ones vector (complete observability). The unit diagonal makes
// d = all-ones feasible, so every instance has a solution.
struct PlacementProblem {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> C;

  static PlacementProblem from_connectivity(const ConnectivityMatrix& c) {
    return PlacementProblem{c.C};
  }
  int size() const { return static_cast<int>(C.rows()); }
};

enum class SolveMethod { BranchAndBound, Exhaustive };

struct PlacementSolution {
  std::vector<std::uint8_t> d;  // decision vector, d[i] = 1: PMU at bus i
  int count = 0;                // popcount of d
  SolveMethod method = SolveMethod::BranchAndBound;
  bool proven_optimal = false;
  std::uint64_t nodes_explored = 0;
  double solve_seconds = 0.0;
};

struct SolveOptions {
  double timeout_seconds = 60.0;
};

// Exact branch and bound: dominance reductions, greedy seeding, admissible
// packing lower bound, then lexicographic extraction of the minimum-count
// solution (so equal-count optima resolve deterministically to the smallest
// selected-index tuple). On timeout returns the best incumbent with
// proven_optimal unset.
PlacementSolution solve(const PlacementProblem& p, const SolveOptions& opt = {});

// Enumerates decision vectors in popcount-then-lexicographic order and
// returns the first feasible one. N <= 24.
PlacementSolution solve_exhaustive(const PlacementProblem& p);

struct VerifyResult {
  bool ok = false;
  std::vector<int> uncovered;  // row indices with no selected column
};

VerifyResult verify(const PlacementProblem& p,
                    const std::vector<std::uint8_t>& d);

// C as a 0/1 CSV matrix.
std::string problem_to_csv(const PlacementProblem& p);
PlacementProblem problem_from_csv(std::istream& in);

// {"n":.., "edges":[[i,j],..]} with 0-based i<j pairs; solution optional.
std::string problem_to_json(const PlacementProblem& p,
                            const PlacementSolution* sol = nullptr);
PlacementProblem problem_from_json(std::istream& in);

}  // namespace gridsentry
