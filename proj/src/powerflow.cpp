#include "gridsentry/powerflow.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace gridsentry {

namespace {

// Scheduled net injections in p.u. (generation minus demand).
void scheduled_injections(const CaseData& c, Eigen::VectorXd& p,
                          Eigen::VectorXd& q) {
  p.resize(c.N);
  q.resize(c.N);
  for (int i = 0; i < c.N; ++i) {
    p[i] = (c.total_Pg(i) - c.buses[i].Pd) / c.base_MVA;
    q[i] = (c.total_Qg(i) - c.buses[i].Qd) / c.base_MVA;
  }
}

}  // namespace

void unpack_state(const CaseData& c, const StateVector& s,
                  Eigen::VectorXd& theta, Eigen::VectorXd& v) {
  const int n = c.N;
  if (s.dimension() != 2 * n - 1)
    throw ValidationError("state dimension " + std::to_string(s.dimension()) +
                          " does not match case (expected " +
                          std::to_string(2 * n - 1) + ")");
  theta.resize(n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    theta[i] = i == c.slack ? c.buses[c.slack].Va : s.values[k++];
  v = s.values.tail(n);
}

StateVector pack_state(const CaseData& c, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& v, int timestamp) {
  StateVector s;
  s.timestamp = timestamp;
  s.values.resize(2 * c.N - 1);
  int k = 0;
  for (int i = 0; i < c.N; ++i)
    if (i != c.slack) s.values[k++] = theta[i];
  s.values.tail(c.N) = v;
  return s;
}

YBus build_ybus(const CaseData& c) {
  YBus out;
  out.Y = Eigen::MatrixXcd::Zero(c.N, c.N);
  const std::complex<double> j1(0.0, 1.0);
  for (const auto& br : c.branches) {
    if (!br.in_service()) continue;
    const int f = c.internal_index(br.from_bus);
    const int t = c.internal_index(br.to_bus);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> ysh(0.0, br.b / 2.0);
    const double tap = br.tap_ratio;
    const std::complex<double> shift = std::polar(1.0, br.phase_shift);
    out.Y(f, f) += (ys + ysh) / (tap * tap);
    out.Y(f, t) += -ys / (tap * std::conj(shift));
    out.Y(t, f) += -ys / (tap * shift);
    out.Y(t, t) += ys + ysh;
  }
  for (int i = 0; i < c.N; ++i)
    out.Y(i, i) += std::complex<double>(c.buses[i].Gs, c.buses[i].Bs) /
                   c.base_MVA;
  return out;
}

void power_injections(const CaseData& c, const YBus& y,
                      const Eigen::VectorXd& theta, const Eigen::VectorXd& v,
                      Eigen::VectorXd& p, Eigen::VectorXd& q) {
  const int n = c.N;
  p.setZero(n);
  q.setZero(n);
  for (int i = 0; i < n; ++i) {
    double pi = 0.0, qi = 0.0;
    for (int k = 0; k < n; ++k) {
      const double g = y.Y(i, k).real();
      const double b = y.Y(i, k).imag();
      if (g == 0.0 && b == 0.0) continue;
      const double d = theta[i] - theta[k];
      const double cs = std::cos(d), sn = std::sin(d);
      pi += v[k] * (g * cs + b * sn);
      qi += v[k] * (g * sn - b * cs);
    }
    p[i] = v[i] * pi;
    q[i] = v[i] * qi;
  }
}

Eigen::MatrixXd Jacobian::reduced_dP_dtheta() const {
  const int n = static_cast<int>(dP_dtheta.rows());
  Eigen::MatrixXd out(n - 1, n - 1);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i == slack) continue;
    int cc = 0;
    for (int j = 0; j < n; ++j) {
      if (j == slack) continue;
      out(r, cc++) = dP_dtheta(i, j);
    }
    ++r;
  }
  return out;
}

Jacobian compute_jacobian(const CaseData& c, const StateVector& s) {
  if (!s.values.allFinite()) throw NumericalError("non-finite state entries");
  Eigen::VectorXd theta, v;
  unpack_state(c, s, theta, v);
  for (int i = 0; i < c.N; ++i)
    if (!(v[i] > 0.0))
      throw NumericalError("non-positive voltage magnitude at bus " +
                           std::to_string(c.buses[i].id));

  const YBus y = build_ybus(c);
  Eigen::VectorXd p, q;
  power_injections(c, y, theta, v, p, q);

  const int n = c.N;
  Jacobian out;
  out.state = s;
  out.slack = c.slack;
  out.dP_dtheta.resize(n, n);
  out.dP_dV.resize(n, n);
  out.dQ_dtheta.resize(n, n);
  out.dQ_dV.resize(n, n);

  for (int i = 0; i < n; ++i) {
    const double gii = y.Y(i, i).real();
    const double bii = y.Y(i, i).imag();
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        out.dP_dtheta(i, i) = -q[i] - bii * v[i] * v[i];
        out.dP_dV(i, i) = p[i] / v[i] + gii * v[i];
        out.dQ_dtheta(i, i) = p[i] - gii * v[i] * v[i];
        out.dQ_dV(i, i) = q[i] / v[i] - bii * v[i];
      } else {
        const double g = y.Y(i, j).real();
        const double b = y.Y(i, j).imag();
        if (g == 0.0 && b == 0.0) {
          out.dP_dtheta(i, j) = 0.0;
          out.dP_dV(i, j) = 0.0;
          out.dQ_dtheta(i, j) = 0.0;
          out.dQ_dV(i, j) = 0.0;
          continue;
        }
        const double d = theta[i] - theta[j];
        const double cs = std::cos(d), sn = std::sin(d);
        out.dP_dtheta(i, j) = v[i] * v[j] * (g * sn - b * cs);
        out.dP_dV(i, j) = v[i] * (g * cs + b * sn);
        out.dQ_dtheta(i, j) = -v[i] * v[j] * (g * cs + b * sn);
        out.dQ_dV(i, j) = v[i] * (g * sn - b * cs);
      }
    }
  }
  return out;
}

StateVector solve_powerflow(const CaseData& c, const PowerFlowOptions& opt) {
  const int n = c.N;
  const YBus y = build_ybus(c);

  Eigen::VectorXd theta(n), v(n);
  const double slack_angle = c.buses[c.slack].Va;
  for (int i = 0; i < n; ++i) {
    const Bus& b = c.buses[i];
    if (opt.flat_start) {
      theta[i] = slack_angle;
      v[i] = b.type == BusType::PQ ? 1.0 : c.voltage_setpoint(i);
    } else {
      theta[i] = b.Va;
      v[i] = b.type == BusType::PQ ? b.Vm : c.voltage_setpoint(i);
    }
  }

  Eigen::VectorXd p_sched, q_sched;
  scheduled_injections(c, p_sched, q_sched);

  std::vector<int> ang_idx, v_idx;  // unknown angle / magnitude positions
  for (int i = 0; i < n; ++i) {
    if (i != c.slack) ang_idx.push_back(i);
    if (c.buses[i].type == BusType::PQ) v_idx.push_back(i);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int nv = static_cast<int>(v_idx.size());
  const int m = na + nv;

  Eigen::VectorXd p, q, mismatch(m);
  auto eval_mismatch = [&]() {
    power_injections(c, y, theta, v, p, q);
    for (int a = 0; a < na; ++a)
      mismatch[a] = p[ang_idx[a]] - p_sched[ang_idx[a]];
    for (int b = 0; b < nv; ++b)
      mismatch[na + b] = q[v_idx[b]] - q_sched[v_idx[b]];
  };

  eval_mismatch();
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (!mismatch.allFinite())
      throw ConvergenceError("power flow diverged: non-finite mismatch",
                             std::numeric_limits<double>::quiet_NaN());
    if (mismatch.cwiseAbs().maxCoeff() <= opt.tolerance)
      return pack_state(c, theta, v, 0);
    if (v.minCoeff() <= 0.0)
      throw ConvergenceError(
          "power flow diverged: non-physical voltage magnitude (max mismatch " +
              std::to_string(mismatch.cwiseAbs().maxCoeff()) + " p.u.)",
          mismatch.cwiseAbs().maxCoeff());

    const Jacobian jac = compute_jacobian(c, pack_state(c, theta, v, 0));
    Eigen::MatrixXd jr(m, m);
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < na; ++b)
        jr(a, b) = jac.dP_dtheta(ang_idx[a], ang_idx[b]);
      for (int b = 0; b < nv; ++b)
        jr(a, na + b) = jac.dP_dV(ang_idx[a], v_idx[b]);
    }
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < na; ++b)
        jr(na + a, b) = jac.dQ_dtheta(v_idx[a], ang_idx[b]);
      for (int b = 0; b < nv; ++b)
        jr(na + a, na + b) = jac.dQ_dV(v_idx[a], v_idx[b]);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jr);
    if (!lu.isInvertible())
      throw NumericalError("singular Jacobian during power-flow iteration " +
                           std::to_string(iter + 1));
    const Eigen::VectorXd dx = lu.solve(-mismatch);
    for (int a = 0; a < na; ++a) theta[ang_idx[a]] += dx[a];
    for (int b = 0; b < nv; ++b) v[v_idx[b]] += dx[na + b];
    eval_mismatch();
  }

  const double final_norm =
      mismatch.allFinite() ? mismatch.cwiseAbs().maxCoeff()
                           : std::numeric_limits<double>::quiet_NaN();
  std::ostringstream msg;
  msg << "power flow did not converge in " << opt.max_iterations
      << " iterations (max mismatch " << final_norm << " p.u.)";
  throw ConvergenceError(msg.str(), final_norm);
}

}  // namespace gridsentry
