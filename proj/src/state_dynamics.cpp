#include "gridsentry/state_dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "gridsentry/kernels.hpp"
#include "gridsentry/powerflow.hpp"

namespace gridsentry {

GaussianStream::GaussianStream(const NoiseModel& model)
    : rng_(model.seed), sigma_(std::sqrt(model.sigma2)) {
  if (!(model.sigma2 > 0.0))
    throw ValidationError("noise variance must be positive");
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return sigma_ * spare_;
  }
  // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
  const double u1 =
      1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return sigma_ * r * std::cos(a);
}

void GaussianStream::fill(Eigen::VectorXd& out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = next();
}

TransitionMatrix TransitionMatrix::identity(int n_buses) {
  TransitionMatrix f;
  f.A = RowMatrix::Identity(n_buses - 1, n_buses - 1);
  f.B = RowMatrix::Identity(n_buses, n_buses);
  return f;
}

Eigen::MatrixXd TransitionMatrix::full() const {
  const int na = static_cast<int>(A.rows());
  const int nb = static_cast<int>(B.rows());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(na + nb, na + nb);
  f.topLeftCorner(na, na) = A;
  f.bottomRightCorner(nb, nb) = B;
  return f;
}

StepResult step(const TransitionMatrix& f, const StateVector& prev,
                GaussianStream& noise, ClampBounds clamp) {
  const int na = static_cast<int>(f.A.rows());
  const int nb = static_cast<int>(f.B.rows());
  if (prev.dimension() != na + nb)
    throw ValidationError("state/transition dimension mismatch");
  if (f.A.cols() != na || f.B.cols() != nb)
    throw ValidationError("transition blocks must be square");

  StepResult out;
  out.x.timestamp = prev.timestamp + 1;
  out.x.values.resize(na + nb);
  kernels::matvec(f.A.data(), na, na, prev.values.data(),
                  out.x.values.data());
  kernels::matvec(f.B.data(), nb, nb, prev.values.data() + na,
                  out.x.values.data() + na);
  for (int i = 0; i < na + nb; ++i) out.x.values[i] += noise.next();

  if (!out.x.values.allFinite())
    throw NumericalError("state step produced non-finite values (divergent "
                         "transition matrix)");

  for (int i = na; i < na + nb; ++i) {
    double& v = out.x.values[i];
    if (v < clamp.lo) {
      v = clamp.lo;
      ++out.clamp_events;
    } else if (v > clamp.hi) {
      v = clamp.hi;
      ++out.clamp_events;
    }
  }
  return out;
}

StateHistory::StateHistory(int state_dim, int window)
    : dim_(state_dim), window_(window) {
  if (state_dim < 3 || state_dim % 2 == 0)
    throw ValidationError("state dimension must be an odd number >= 3");
  if (window < state_dim)
    throw ValidationError("observation window M=" + std::to_string(window) +
                          " must be >= state dimension " +
                          std::to_string(state_dim));
}

void StateHistory::push(StateVector s) {
  if (s.dimension() != dim_)
    throw ValidationError("state dimension mismatch in history push");
  if (!buf_.empty() && s.timestamp != buf_.back().timestamp + 1)
    throw ValidationError("history timestamps must be consecutive");
  buf_.push_back(std::move(s));
  if (static_cast<int>(buf_.size()) > window_ + 1) buf_.pop_front();
}

namespace {

// One decoupled block: regress entry i of the current sub-vector on the whole
// lagged sub-vector, all rows sharing the regressor matrix.
RowMatrix estimate_block(const StateHistory& h, int offset, int width,
                         const char* block_name) {
  const int m = h.window();
  Eigen::MatrixXd regressors(m, width);
  Eigen::MatrixXd targets(m, width);
  for (int row = 0; row < m; ++row) {
    regressors.row(row) = h.at(row).values.segment(offset, width);
    targets.row(row) = h.at(row + 1).values.segment(offset, width);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors);
  if (qr.rank() < width)
    throw RankDeficientError(block_name, static_cast<int>(qr.rank()), width);
  // rows of the block = transposed solution columns
  return RowMatrix(qr.solve(targets).transpose());
}

}  // namespace

TransitionMatrix estimate_transition(const StateHistory& h) {
  if (!h.full())
    throw ValidationError("history not full: " + std::to_string(h.size()) +
                          " of " + std::to_string(h.window() + 1) + " states");
  const int dim = h.state_dim();
  const int n_ang = (dim - 1) / 2;
  const int n_v = dim - n_ang;
  TransitionMatrix f;
  f.A = estimate_block(h, 0, n_ang, "angle");
  f.B = estimate_block(h, n_ang, n_v, "magnitude");
  return f;
}

Simulator::Simulator(const CaseData& c, SimulatorOptions opt)
    : case_(c),
      opt_(opt),
      noise_(opt.noise),
      history_(2 * c.N - 1, opt.M > 0 ? opt.M : 2 * c.N - 1) {
  if (opt_.T < 1) throw ValidationError("step count T must be >= 1");
  if (opt_.flat_start_x0) {
    Eigen::VectorXd theta =
        Eigen::VectorXd::Constant(c.N, c.buses[c.slack].Va);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(c.N);
    x0_ = pack_state(c, theta, v, 0);
  } else {
    x0_ = solve_powerflow(c);
    x0_.timestamp = 0;
  }
  history_.push(x0_);
}

SimStep Simulator::advance() {
  if (done()) throw Error("simulation already finished");
  const int t = t_ + 1;
  SimStep out;
  try {
    if (history_.full()) {
      out.F = estimate_transition(history_);
      out.estimated = true;
    } else {
      out.F = TransitionMatrix::identity(case_.N);
      out.estimated = false;
    }
    const StateVector& prev = history_.at(history_.size() - 1);
    StepResult r = step(out.F, prev, noise_, opt_.clamp);
    out.x = std::move(r.x);
    out.clamp_events = r.clamp_events;
  } catch (const Error& e) {
    throw NumericalError("simulation step " + std::to_string(t) + ": " +
                         e.what());
  }
  history_.push(out.x);
  t_ = t;
  return out;
}

std::vector<SimStep> simulate(const CaseData& c, const SimulatorOptions& opt) {
  Simulator sim(c, opt);
  std::vector<SimStep> out;
  out.reserve(opt.T);
  while (!sim.done()) out.push_back(sim.advance());
  return out;
}

}  // namespace gridsentry
