#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridsentry/case_model.hpp"
#include "gridsentry/placement.hpp"
#include "gridsentry/state_dynamics.hpp"

namespace gridsentry {

// Full pipeline configuration; echoed verbatim into config.json next to the
// outputs.
struct ExperimentConfig {
  std::string case_path;
  CaseFormat format = CaseFormat::MatpowerM;
  int T = 100;
  int M = 0;                 // 0 => 2N-1
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
  int K = 0;                 // branch budget; 0 => case's in-service count
  double clamp_lo = 0.2;
  double clamp_hi = 2.0;
  std::string out_dir;       // empty => keep everything in memory
  bool strict = false;
  bool flat_start = false;   // x0 from flat profile instead of solved flow
  double solver_timeout_seconds = 60.0;
};

struct StepRecord {
  int t = 0;
  int pmu_count = 0;
  std::vector<std::uint8_t> d;
  int branch_count = 0;
  bool tie = false;
  int clamp_events = 0;
  bool estimated = false;
  bool proven_optimal = false;
  std::uint64_t nodes = 0;
  double solve_seconds = 0.0;
  MetricCheck metric;
};

struct ExperimentSummary {
  int count_min = 0;
  int count_max = 0;
  int count_mode = 0;
  double mode_frequency = 0.0;
  int distinct_configurations = 0;
  long equal_count_different_config_pairs = 0;
  std::vector<std::pair<int, int>> sample_pairs;  // first few such (t1, t2)
  long clamp_events_total = 0;
  int tie_steps = 0;
  int timeout_steps = 0;
  int metric_violation_steps = 0;  // metric suite fails at default tolerances
  double max_triangle_violation = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;  // resolved: M and K filled in
  CaseData case_data;
  std::vector<StepRecord> steps;
  ExperimentSummary summary;

  bool any_timeout() const { return summary.timeout_steps > 0; }
};

// Runs the loop: simulate state -> Jacobian -> sensitivity -> E -> C -> BIP,
// recording every step. With out_dir set, counts.csv / placements.csv /
// trajectory.csv are written incrementally and config.json / summary.json
// around them; on error the partial CSVs get a FAILED marker before the
// annotated error is rethrown.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Static baseline: the same BIP on physical adjacency + unit diagonal.
struct TopologicalReport {
  CaseData case_data;
  int edges = 0;
  PlacementSolution solution;
};

TopologicalReport compare_topological(const ExperimentConfig& cfg);

// 12-significant-digit CSV number formatting used by all exports.
std::string format_csv_number(double v);

}  // namespace gridsentry
