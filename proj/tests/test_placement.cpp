#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "gridsentry/placement.hpp"

using namespace gridsentry;

namespace {

PlacementProblem from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  PlacementProblem p;
  p.C.setZero(n, n);
  for (int i = 0; i < n; ++i) p.C(i, i) = 1;
  for (const auto& [i, j] : edges) {
    p.C(i, j) = 1;
    p.C(j, i) = 1;
  }
  return p;
}

PlacementProblem path(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return from_edges(n, edges);
}

PlacementProblem random_problem(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(density);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) edges.push_back({i, j});
  return from_edges(n, edges);
}

std::vector<std::uint8_t> dvec(std::initializer_list<int> bits) {
  std::vector<std::uint8_t> out;
  for (int b : bits) out.push_back(static_cast<std::uint8_t>(b));
  return out;
}

}  // namespace

TEST_CASE("identity matrix forces a PMU everywhere") {
  const PlacementProblem p = from_edges(5, {});
  const PlacementSolution bb = solve(p);
  const PlacementSolution ex = solve_exhaustive(p);
  CHECK(bb.count == 5);
  CHECK(ex.count == 5);
  CHECK(bb.d == dvec({1, 1, 1, 1, 1}));
  CHECK(bb.d == ex.d);
  CHECK(bb.proven_optimal);
}

TEST_CASE("complete graph needs a single PMU at the first bus") {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) edges.push_back({i, j});
  const PlacementProblem p = from_edges(5, edges);
  const PlacementSolution bb = solve(p);
  CHECK(bb.count == 1);
  CHECK(bb.d == dvec({1, 0, 0, 0, 0}));
  CHECK(bb.d == solve_exhaustive(p).d);
}

TEST_CASE("three-bus chain is covered from the middle") {
  const PlacementProblem p = path(3);
  const PlacementSolution bb = solve(p);
  CHECK(bb.count == 1);
  CHECK(bb.d == dvec({0, 1, 0}));
  CHECK(solve_exhaustive(p).d == dvec({0, 1, 0}));
}

TEST_CASE("P5 lex tie-break: the optimum may use a dominated column") {
  // cover sets: col0={0,1} is a strict subset of col1={0,1,2}, yet the
  // lexicographically smallest optimum is {0,3}
  const PlacementProblem p = path(5);
  const PlacementSolution ex = solve_exhaustive(p);
  CHECK(ex.count == 2);
  CHECK(ex.d == dvec({1, 0, 0, 1, 0}));
  const PlacementSolution bb = solve(p);
  CHECK(bb.count == 2);
  CHECK(bb.d == ex.d);
}

TEST_CASE("oracle equivalence on random instances") {
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> size(4, 16);
  std::uniform_real_distribution<double> density(0.1, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    const PlacementProblem p = random_problem(size(rng), density(rng), rng);
    const PlacementSolution bb = solve(p);
    const PlacementSolution ex = solve_exhaustive(p);
    CAPTURE(trial);
    CHECK(bb.count == ex.count);
    CHECK(bb.d == ex.d);
    CHECK(bb.proven_optimal);
    CHECK(verify(p, bb.d).ok);
  }
}

TEST_CASE("verify reports uncovered rows") {
  const PlacementProblem p = from_edges(3, {});
  CHECK(verify(p, dvec({1, 1, 1})).ok);
  const VerifyResult r = verify(p, dvec({0, 0, 0}));
  CHECK_FALSE(r.ok);
  CHECK(r.uncovered == std::vector<int>{0, 1, 2});
  const VerifyResult partial = verify(p, dvec({1, 0, 1}));
  CHECK(partial.uncovered == std::vector<int>{1});
  CHECK_THROWS_AS(verify(p, dvec({1, 0})), ValidationError);
}

TEST_CASE("adding edges never increases the optimal count") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 10;
    const PlacementProblem base = random_problem(n, 0.2, rng);
    PlacementProblem denser = base;
    std::bernoulli_distribution extra(0.2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (extra(rng)) {
          denser.C(i, j) = 1;
          denser.C(j, i) = 1;
        }
    CHECK(solve(denser).count <= solve(base).count);
  }
}

TEST_CASE("duplicate columns are handled") {
  // twin buses 0 and 1 (same neighborhood incl. each other)
  const PlacementProblem p = from_edges(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
  const PlacementSolution bb = solve(p);
  const PlacementSolution ex = solve_exhaustive(p);
  CHECK(bb.count == ex.count);
  CHECK(bb.d == ex.d);
}

TEST_CASE("missing unit diagonal is rejected") {
  PlacementProblem p = from_edges(3, {{0, 1}, {1, 2}});
  p.C(1, 1) = 0;
  CHECK_THROWS_AS(solve(p), ValidationError);
}

TEST_CASE("exhaustive solver is bounded") {
  PlacementProblem p;
  p.C.setZero(30, 30);
  for (int i = 0; i < 30; ++i) p.C(i, i) = 1;
  CHECK_THROWS_AS(solve_exhaustive(p), ValidationError);
}

TEST_CASE("a zero timeout returns a feasible incumbent without the proof") {
  std::mt19937_64 rng(31);
  const PlacementProblem p = random_problem(40, 0.15, rng);
  SolveOptions opt;
  opt.timeout_seconds = 1e-9;
  const PlacementSolution sol = solve(p, opt);
  CHECK_FALSE(sol.proven_optimal);
  CHECK(verify(p, sol.d).ok);
  CHECK(sol.count >= solve(p).count);
}

TEST_CASE("IEEE-14 physical topology needs 4 PMUs") {
  // 14-bus adjacency from the case branch list, 0-based
  const PlacementProblem p = from_edges(
      14, {{0, 1}, {0, 4}, {1, 2}, {1, 3}, {1, 4}, {2, 3}, {3, 4}, {3, 6},
           {3, 8}, {4, 5}, {5, 10}, {5, 11}, {5, 12}, {6, 7}, {6, 8}, {8, 9},
           {8, 13}, {9, 10}, {11, 12}, {12, 13}});
  const PlacementSolution bb = solve(p);
  const PlacementSolution ex = solve_exhaustive(p);
  CHECK(bb.count == 4);
  CHECK(ex.count == 4);
  CHECK(bb.d == ex.d);
  CHECK(verify(p, bb.d).ok);
}

TEST_CASE("CSV round-trip") {
  std::mt19937_64 rng(12);
  const PlacementProblem p = random_problem(9, 0.4, rng);
  std::istringstream in(problem_to_csv(p));
  const PlacementProblem q = problem_from_csv(in);
  CHECK(p.C == q.C);
  std::istringstream bad("1,0\n0,2\n");
  CHECK_THROWS_AS(problem_from_csv(bad), ParseError);
  std::istringstream ragged("1,0\n0\n");
  CHECK_THROWS_AS(problem_from_csv(ragged), ParseError);
}

TEST_CASE("JSON round-trip with solution") {
  const PlacementProblem p = path(4);
  const PlacementSolution sol = solve(p);
  const std::string text = problem_to_json(p, &sol);
  std::istringstream in(text);
  const PlacementProblem q = problem_from_json(in);
  CHECK(p.C == q.C);
  CHECK(text.find("\"count\": 2") != std::string::npos);
  CHECK(text.find("\"optimal\": true") != std::string::npos);
  std::istringstream bad(R"({"n": 3, "edges": [[0, 3]]})");
  CHECK_THROWS_AS(problem_from_json(bad), ParseError);
}
