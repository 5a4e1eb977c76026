#include "gridsentry/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "gridsentry/kernels.hpp"
#include "gridsentry/powerflow.hpp"

namespace gridsentry {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["case"] = cfg.case_path;
  j["format"] = cfg.format == CaseFormat::MatpowerM ? "m" : "json";
  j["steps"] = cfg.T;
  j["window"] = cfg.M;
  j["sigma2"] = cfg.sigma2;
  j["seed"] = cfg.seed;
  j["branches"] = cfg.K;
  j["clamp"] = {cfg.clamp_lo, cfg.clamp_hi};
  j["out"] = cfg.out_dir;
  j["strict"] = cfg.strict;
  j["flat_start"] = cfg.flat_start;
  j["solver_timeout_seconds"] = cfg.solver_timeout_seconds;
  return j;
}

// Incremental writers; LF endings, no quoting, 12 significant digits.
class OutputFiles {
 public:
  OutputFiles(const ExperimentConfig& cfg, const CaseData& c) {
    if (cfg.out_dir.empty()) return;
    fs::create_directories(cfg.out_dir);
    dir_ = cfg.out_dir;
    {
      std::ofstream f(path("config.json"), std::ios::binary);
      f << config_to_json(cfg).dump(2) << "\n";
    }
    counts_.open(path("counts.csv"), std::ios::binary);
    counts_ << "t,count\n";
    placements_.open(path("placements.csv"), std::ios::binary);
    placements_ << "t";
    for (const auto& b : c.buses) placements_ << ",d" << b.id;
    placements_ << "\n";
    trajectory_.open(path("trajectory.csv"), std::ios::binary);
    trajectory_ << "t";
    for (int i = 0; i < c.N; ++i)
      if (i != c.slack) trajectory_ << ",theta_" << c.buses[i].id;
    for (const auto& b : c.buses) trajectory_ << ",V_" << b.id;
    trajectory_ << "\n";
    open_ = true;
  }

  bool open() const { return open_; }
  std::string path(const char* name) const { return (fs::path(dir_) / name).string(); }

  void write_state(const StateVector& x) {
    if (!open_) return;
    trajectory_ << x.timestamp;
    for (Eigen::Index i = 0; i < x.values.size(); ++i)
      trajectory_ << "," << format_csv_number(x.values[i]);
    trajectory_ << "\n";
    trajectory_.flush();
  }

  void write_step(const StepRecord& r) {
    if (!open_) return;
    counts_ << r.t << "," << r.pmu_count << "\n";
    counts_.flush();
    placements_ << r.t;
    for (auto v : r.d) placements_ << "," << int(v);
    placements_ << "\n";
    placements_.flush();
  }

  void mark_failed(int t, const std::string& stage, const std::string& what) {
    if (!open_) return;
    const std::string marker =
        "# FAILED t=" + std::to_string(t) + " stage=" + stage + ": " + what + "\n";
    counts_ << marker;
    placements_ << marker;
    trajectory_ << marker;
    counts_.flush();
    placements_.flush();
    trajectory_.flush();
    std::ofstream f(path("FAILED"), std::ios::binary);
    f << "t=" << t << " stage=" << stage << "\n" << what << "\n";
  }

  void write_summary(const json& j) {
    if (!open_) return;
    std::ofstream f(path("summary.json"), std::ios::binary);
    f << j.dump(2) << "\n";
  }

 private:
  bool open_ = false;
  std::string dir_;
  std::ofstream counts_, placements_, trajectory_;
};

ExperimentSummary summarize(const std::vector<StepRecord>& steps) {
  ExperimentSummary s;
  if (steps.empty()) return s;
  std::map<int, int> count_freq;
  std::set<std::vector<std::uint8_t>> configs;
  s.count_min = steps[0].pmu_count;
  s.count_max = steps[0].pmu_count;
  for (const auto& r : steps) {
    s.count_min = std::min(s.count_min, r.pmu_count);
    s.count_max = std::max(s.count_max, r.pmu_count);
    ++count_freq[r.pmu_count];
    configs.insert(r.d);
    s.clamp_events_total += r.clamp_events;
    if (r.tie) ++s.tie_steps;
    if (!r.proven_optimal) ++s.timeout_steps;
    if (!r.metric.passes()) ++s.metric_violation_steps;
    s.max_triangle_violation =
        std::max(s.max_triangle_violation, r.metric.max_triangle_violation);
  }
  int best = 0;
  for (const auto& [count, freq] : count_freq)
    if (freq > best) {
      best = freq;
      s.count_mode = count;
    }
  s.mode_frequency = double(best) / double(steps.size());
  s.distinct_configurations = static_cast<int>(configs.size());
  for (std::size_t a = 0; a < steps.size(); ++a)
    for (std::size_t b = a + 1; b < steps.size(); ++b)
      if (steps[a].pmu_count == steps[b].pmu_count && steps[a].d != steps[b].d) {
        ++s.equal_count_different_config_pairs;
        if (s.sample_pairs.size() < 20)
          s.sample_pairs.emplace_back(steps[a].t, steps[b].t);
      }
  return s;
}

json summary_to_json(const ExperimentSummary& s) {
  json j;
  j["counts"] = {{"min", s.count_min},
                 {"max", s.count_max},
                 {"mode", s.count_mode},
                 {"mode_frequency", s.mode_frequency}};
  j["distinct_configurations"] = s.distinct_configurations;
  j["equal_count_different_config"] = {
      {"pairs", s.equal_count_different_config_pairs},
      {"sample", json::array()}};
  for (const auto& [a, b] : s.sample_pairs)
    j["equal_count_different_config"]["sample"].push_back({a, b});
  j["clamp_events_total"] = s.clamp_events_total;
  j["tie_steps"] = s.tie_steps;
  j["timeout_steps"] = s.timeout_steps;
  j["metric_violation_steps"] = s.metric_violation_steps;
  j["max_triangle_violation"] = s.max_triangle_violation;
  j["kernel_backend"] = std::string(kernels::backend_name(kernels::active_backend()));
  return j;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.T < 1) throw ValidationError("steps T must be >= 1");
  if (cfg.M < 0)
    throw ValidationError("window M must be positive (0 selects 2N-1)");
  if (!(cfg.sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  if (cfg.K < 0)
    throw ValidationError("branch budget K must be positive (0 selects the "
                          "case branch count)");
  if (!(cfg.clamp_lo > 0.0) || !(cfg.clamp_hi > cfg.clamp_lo))
    throw ValidationError("clamp bounds must satisfy 0 < lo < hi");
  if (!(cfg.solver_timeout_seconds > 0.0))
    throw ValidationError("solver timeout must be positive");
}

}  // namespace

std::string format_csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);

  ExperimentReport report;
  report.case_data = load_case_file(
      cfg.case_path, cfg.format, cfg.strict);
  const CaseData& c = report.case_data;

  ExperimentConfig resolved = cfg;
  if (resolved.M == 0) resolved.M = 2 * c.N - 1;
  if (resolved.K == 0) resolved.K = c.K;
  if (resolved.M < 2 * c.N - 1)
    throw ValidationError("window M=" + std::to_string(resolved.M) +
                          " must be >= 2N-1 = " + std::to_string(2 * c.N - 1));
  const long pairs = static_cast<long>(c.N) * (c.N - 1) / 2;
  if (resolved.K > pairs)
    throw ValidationError("branch budget K=" + std::to_string(resolved.K) +
                          " exceeds the " + std::to_string(pairs) +
                          " bus pairs");
  report.config = resolved;

  OutputFiles out(resolved, c);

  SimulatorOptions sim_opt;
  sim_opt.T = resolved.T;
  sim_opt.M = resolved.M;
  sim_opt.noise = NoiseModel{resolved.sigma2, resolved.seed};
  sim_opt.clamp = ClampBounds{resolved.clamp_lo, resolved.clamp_hi};
  sim_opt.flat_start_x0 = resolved.flat_start;

  int t = 0;
  std::string stage = "setup";
  try {
    stage = "powerflow";
    Simulator sim(c, sim_opt);
    out.write_state(sim.initial_state());

    SolveOptions solve_opt;
    solve_opt.timeout_seconds = resolved.solver_timeout_seconds;

    while (!sim.done()) {
      stage = "simulate";
      SimStep step = sim.advance();
      t = step.x.timestamp;
      out.write_state(step.x);

      stage = "jacobian";
      const Jacobian jac = compute_jacobian(c, step.x);

      stage = "structure";
      const Eigen::MatrixXd sens = sensitivity_matrix_from_jacobian(jac);
      const ResistanceDistanceMatrix e = resistance_distance(sens, c.slack);
      const MetricCheck metric = check_metric(e);

      stage = "connectivity";
      const ConnectivityMatrix conn = connectivity(e, resolved.K);

      stage = "solve";
      const PlacementProblem problem = PlacementProblem::from_connectivity(conn);
      const PlacementSolution sol = solve(problem, solve_opt);

      stage = "verify";
      const VerifyResult check = verify(problem, sol.d);
      if (!check.ok)
        throw Error("solver returned an infeasible placement (" +
                    std::to_string(check.uncovered.size()) +
                    " uncovered buses)");

      StepRecord rec;
      rec.t = t;
      rec.pmu_count = sol.count;
      rec.d = sol.d;
      rec.branch_count = conn.branch_count;
      rec.tie = conn.tie;
      rec.clamp_events = step.clamp_events;
      rec.estimated = step.estimated;
      rec.proven_optimal = sol.proven_optimal;
      rec.nodes = sol.nodes_explored;
      rec.solve_seconds = sol.solve_seconds;
      rec.metric = metric;
      out.write_step(rec);
      report.steps.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    out.mark_failed(t, stage, e.what());
    throw NumericalError("step " + std::to_string(t) + ", stage " + stage +
                         ": " + e.what());
  }

  report.summary = summarize(report.steps);
  out.write_summary(summary_to_json(report.summary));
  return report;
}

TopologicalReport compare_topological(const ExperimentConfig& cfg) {
  TopologicalReport out;
  out.case_data = load_case_file(cfg.case_path, cfg.format, cfg.strict);
  const ConnectivityMatrix adj = physical_adjacency(out.case_data);
  out.edges = adj.branch_count;
  SolveOptions opt;
  opt.timeout_seconds = cfg.solver_timeout_seconds;
  out.solution = solve(PlacementProblem::from_connectivity(adj), opt);
  return out;
}

}  // namespace gridsentry
