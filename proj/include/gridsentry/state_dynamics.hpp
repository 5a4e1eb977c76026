#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "gridsentry/electrical_structure.hpp"
#include "gridsentry/state.hpp"

namespace gridsentry {

// Zero-mean i.i.d. Gaussian state noise. Identical seed => identical stream.
struct NoiseModel {
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
};

// Deterministic Gaussian stream: mt19937_64 + Box-Muller. Hand-rolled rather
// than std::normal_distribution because the latter's output sequence is
// implementation-defined, which would tie reproducibility to the standard
// library version.
class GaussianStream {
 public:
  explicit GaussianStream(const NoiseModel& model);

  double next();
  void fill(Eigen::VectorXd& out);

 private:
  std::mt19937_64 rng_;
  double sigma_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Block-diagonal transition matrix F = diag(A, B): A drives the angle part,
// B the magnitude part. Cross-blocks are identically zero by construction.
struct TransitionMatrix {
  RowMatrix A;  // (N-1) x (N-1)
  RowMatrix B;  // N x N

  static TransitionMatrix identity(int n_buses);

  int state_dim() const {
    return static_cast<int>(A.rows() + B.rows());
  }
  Eigen::MatrixXd full() const;  // assembled diag(A, B)
};

struct ClampBounds {
  double lo = 0.2;
  double hi = 2.0;
};

struct StepResult {
  StateVector x;
  int clamp_events = 0;
};

// x_t = F x_{t-1} + w, then voltage components clamped into bounds (events
// counted). Throws NumericalError if the pre-clamp result is non-finite.
StepResult step(const TransitionMatrix& f, const StateVector& prev,
                GaussianStream& noise, ClampBounds clamp = {});

// Ring buffer of the M+1 most recent states; timestamps must be consecutive.
// M >= state_dim is required so the per-row least squares of
// estimate_transition is overdetermined.
class StateHistory {
 public:
  StateHistory(int state_dim, int window);

  void push(StateVector s);
  bool full() const { return static_cast<int>(buf_.size()) == window_ + 1; }
  int window() const { return window_; }
  int state_dim() const { return dim_; }
  int size() const { return static_cast<int>(buf_.size()); }
  // oldest first; i in [0, size)
  const StateVector& at(int i) const { return buf_.at(i); }

 private:
  int dim_;
  int window_;
  std::deque<StateVector> buf_;
};

// Least-squares estimate of the block-diagonal transition matrix from a full
// window: each row of A solves the regression of the current angle entry on
// the lagged angle sub-vector over the M transitions in the window (QR, not
// the literal normal equations); B likewise over the magnitude sub-vectors.
// Throws RankDeficientError on collinear history.
TransitionMatrix estimate_transition(const StateHistory& h);

// How F is chosen before the observation window has filled.
enum class Bootstrap {
  Identity,  // slowly-varying-state convention: F = I until M+1 states exist
};

struct SimulatorOptions {
  int T = 100;
  int M = 0;  // 0 => 2N-1
  NoiseModel noise;
  Bootstrap bootstrap = Bootstrap::Identity;
  ClampBounds clamp;
  bool flat_start_x0 = false;  // default: x0 = solved power flow
};

struct SimStep {
  StateVector x;
  TransitionMatrix F;
  int clamp_events = 0;
  bool estimated = false;  // false while bootstrapping
};

// Sequential simulation loop; states depend on their predecessors, so steps
// are produced one at a time. Errors are annotated with the step index.
class Simulator {
 public:
  Simulator(const CaseData& c, SimulatorOptions opt);

  const StateVector& initial_state() const { return x0_; }
  int window() const { return history_.window(); }
  bool done() const { return t_ >= opt_.T; }
  SimStep advance();

 private:
  const CaseData& case_;
  SimulatorOptions opt_;
  GaussianStream noise_;
  StateVector x0_;
  StateHistory history_;
  int t_ = 0;
};

// Convenience wrapper running the loop to completion.
std::vector<SimStep> simulate(const CaseData& c, const SimulatorOptions& opt);

}  // namespace gridsentry
