#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <set>
#include <sstream>

#include "gridsentry/electrical_structure.hpp"
#include "gridsentry/powerflow.hpp"

using namespace gridsentry;

namespace {

const std::string kDataDir = GRIDSENTRY_DATA_DIR;

// weighted graph Laplacian from an edge list
Eigen::MatrixXd laplacian(int n,
                          const std::vector<std::tuple<int, int, double>>& edges) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j, w] : edges) {
    l(i, j) -= w;
    l(j, i) -= w;
    l(i, i) += w;
    l(j, j) += w;
  }
  return l;
}

std::set<std::pair<int, int>> edge_set(const ConnectivityMatrix& c) {
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < c.size(); ++i)
    for (int j = i + 1; j < c.size(); ++j)
      if (c.C(i, j)) out.insert({i, j});
  return out;
}

}  // namespace

TEST_CASE("three-node path: series resistances add") {
  const Eigen::MatrixXd g = laplacian(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  for (int r = 0; r < 3; ++r) {
    CAPTURE(r);
    const ResistanceDistanceMatrix e = resistance_distance(g, r);
    CHECK(e.E(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.E(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.E(0, 2) == doctest::Approx(2.0).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) CHECK(e.E(i, i) == 0.0);
  }
}

TEST_CASE("unit triangle: parallel combination gives 2/3 everywhere") {
  const Eigen::MatrixXd g =
      laplacian(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  const ResistanceDistanceMatrix e = resistance_distance(g, 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        CHECK(e.E(i, j) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("for a true Laplacian the distances do not depend on the ground") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  std::vector<std::tuple<int, int, double>> edges;
  const int n = 7;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((i + j) % 2 == 0 || j == i + 1) edges.push_back({i, j, w(rng)});
  const Eigen::MatrixXd g = laplacian(n, edges);
  const ResistanceDistanceMatrix base = resistance_distance(g, 0);
  for (int r = 1; r < n; ++r) {
    const ResistanceDistanceMatrix other = resistance_distance(g, r);
    CHECK((base.E - other.E).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("grounding a disconnected network is singular") {
  // two disjoint edges: grounding node 0 leaves the {2,3} component floating
  const Eigen::MatrixXd g = laplacian(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  try {
    resistance_distance(g, 0);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("reference node index 0") !=
          std::string::npos);
  }
}

TEST_CASE("metric suite flags a broken matrix") {
  const Eigen::MatrixXd g = laplacian(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  ResistanceDistanceMatrix e = resistance_distance(g, 0);
  CHECK(check_metric(e).passes());
  e.E(0, 2) = 10.0;  // break the triangle inequality (and symmetry)
  const MetricCheck broken = check_metric(e);
  CHECK_FALSE(broken.passes());
  CHECK(broken.max_triangle_violation > 1.0);
}

TEST_CASE("lossless network at flat start gives the susceptance Laplacian") {
  // star of 4 buses, pure reactances, no charging or shunts
  std::istringstream in(R"({
    "name": "star", "base_MVA": 100,
    "buses": [
      {"id": 1, "type": "slack", "Vm": 1.0, "base_kV": 1},
      {"id": 2, "type": "PQ", "Vm": 1.0, "base_kV": 1},
      {"id": 3, "type": "PQ", "Vm": 1.0, "base_kV": 1},
      {"id": 4, "type": "PQ", "Vm": 1.0, "base_kV": 1}
    ],
    "branches": [
      {"from": 1, "to": 2, "x": 0.2},
      {"from": 1, "to": 3, "x": 0.25},
      {"from": 1, "to": 4, "x": 0.5},
      {"from": 2, "to": 3, "x": 0.4}
    ]
  })");
  const CaseData c = load_case(in, CaseFormat::NativeJson);
  StateVector flat;
  flat.values = Eigen::VectorXd::Ones(2 * c.N - 1);
  flat.values.head(c.N - 1).setZero();
  const Jacobian jac = compute_jacobian(c, flat);
  const Eigen::MatrixXd sens = sensitivity_matrix_from_jacobian(jac);
  REQUIRE(sens.rows() == c.N);
  const Eigen::MatrixXd expect = laplacian(
      4, {{0, 1, 5.0}, {0, 2, 4.0}, {0, 3, 2.0}, {1, 2, 2.5}});
  CHECK((sens - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sens.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-bus sensitivity matrix at flat start") {
  const CaseData c =
      load_case_file(kDataDir + "/twobus.json", CaseFormat::NativeJson);
  StateVector flat;
  flat.values.resize(3);
  flat.values << 0.0, 1.0, 1.0;
  const Eigen::MatrixXd sens =
      sensitivity_matrix_from_jacobian(compute_jacobian(c, flat));
  CHECK(sens(0, 0) == doctest::Approx(10.0));
  CHECK(sens(0, 1) == doctest::Approx(-10.0));
  CHECK(sens(1, 0) == doctest::Approx(-10.0));
  CHECK(sens(1, 1) == doctest::Approx(10.0));
}

TEST_CASE("connectivity keeps the K smallest pairs") {
  const Eigen::MatrixXd g = laplacian(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ResistanceDistanceMatrix e = resistance_distance(g, 0);
  SUBCASE("K = 2 keeps the two unit edges") {
    const ConnectivityMatrix c = connectivity(e, 2);
    CHECK(c.branch_count == 2);
    CHECK_FALSE(c.tie);
    CHECK(c.C(0, 1) == 1);
    CHECK(c.C(1, 2) == 1);
    CHECK(c.C(0, 2) == 0);
    for (int i = 0; i < 3; ++i) CHECK(c.C(i, i) == 1);
    CHECK(c.C(1, 0) == 1);  // symmetrized
  }
  SUBCASE("K = all pairs admits everything") {
    const ConnectivityMatrix c = connectivity(e, 3);
    CHECK(c.branch_count == 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(c.C(i, j) == 1);
  }
  SUBCASE("K out of range") {
    CHECK_THROWS_AS(connectivity(e, 0), ValidationError);
    CHECK_THROWS_AS(connectivity(e, 4), ValidationError);
  }
}

TEST_CASE("boundary ties admit the whole tie group") {
  ResistanceDistanceMatrix e;
  e.E.setZero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) e.E(i, j) = 1.0;  // all pairs equidistant
  const ConnectivityMatrix c = connectivity(e, 1);
  CHECK(c.tie);
  CHECK(c.branch_count == 6);
  CHECK(c.requested_K == 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(c.C(i, j) == 1);
}

TEST_CASE("connectivity is monotone in K") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.1, 9.0);
  const int n = 9;
  ResistanceDistanceMatrix e;
  e.E.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = dist(rng);
      e.E(i, j) = v;
      e.E(j, i) = v;
    }
  const int pairs = n * (n - 1) / 2;
  auto prev = edge_set(connectivity(e, 1));
  for (int k = 2; k <= pairs; ++k) {
    auto cur = edge_set(connectivity(e, k));
    for (const auto& edge : prev) CHECK(cur.count(edge) == 1);
    prev = std::move(cur);
  }
}

TEST_CASE("physical adjacency of IEEE-14") {
  const CaseData c = load_case_file(kDataDir + "/case14.m", CaseFormat::MatpowerM);
  const ConnectivityMatrix adj = physical_adjacency(c);
  CHECK(adj.branch_count == 20);
  for (int i = 0; i < c.N; ++i) CHECK(adj.C(i, i) == 1);
  CHECK(adj.C(c.internal_index(1), c.internal_index(2)) == 1);
  CHECK(adj.C(c.internal_index(1), c.internal_index(14)) == 0);
}

TEST_CASE("metric suite holds at the solved operating point") {
  for (const char* file : {"case14.m", "case30.m", "case57.m"}) {
    CAPTURE(file);
    const CaseData c = load_case_file(kDataDir + "/" + file, CaseFormat::MatpowerM);
    const StateVector x = solve_powerflow(c);
    const Jacobian jac = compute_jacobian(c, x);
    const ResistanceDistanceMatrix e =
        resistance_distance(sensitivity_matrix_from_jacobian(jac), c.slack);
    const MetricCheck m = check_metric(e);
    CAPTURE(m.max_abs_diagonal);
    CAPTURE(m.max_asymmetry);
    CAPTURE(m.min_entry);
    CAPTURE(m.max_triangle_violation);
    CHECK(m.passes());
  }
}
