#include "gridsentry/placement.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace gridsentry {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kMaxN = 512;
constexpr int kWords = kMaxN / 64;

// Fixed-capacity bitset; unused high words stay zero, so whole-array loops
// are safe for any n <= kMaxN.
struct Mask {
  std::array<std::uint64_t, kWords> w{};

  void set(int i) { w[i >> 6] |= std::uint64_t(1) << (i & 63); }
  void clear(int i) { w[i >> 6] &= ~(std::uint64_t(1) << (i & 63)); }
  bool test(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }

  bool any() const {
    for (auto v : w)
      if (v) return true;
    return false;
  }
  bool none() const { return !any(); }

  int count() const {
    int c = 0;
    for (auto v : w) c += std::popcount(v);
    return c;
  }

  Mask& operator|=(const Mask& o) {
    for (int i = 0; i < kWords; ++i) w[i] |= o.w[i];
    return *this;
  }
  Mask& operator&=(const Mask& o) {
    for (int i = 0; i < kWords; ++i) w[i] &= o.w[i];
    return *this;
  }
  Mask and_not(const Mask& o) const {
    Mask r;
    for (int i = 0; i < kWords; ++i) r.w[i] = w[i] & ~o.w[i];
    return r;
  }
  Mask and_with(const Mask& o) const {
    Mask r;
    for (int i = 0; i < kWords; ++i) r.w[i] = w[i] & o.w[i];
    return r;
  }
  bool intersects(const Mask& o) const {
    for (int i = 0; i < kWords; ++i)
      if (w[i] & o.w[i]) return true;
    return false;
  }
  bool subset_of(const Mask& o) const {
    for (int i = 0; i < kWords; ++i)
      if (w[i] & ~o.w[i]) return false;
    return true;
  }
  bool operator==(const Mask& o) const { return w == o.w; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (int wi = 0; wi < kWords; ++wi) {
      std::uint64_t v = w[wi];
      while (v) {
        const int bit = std::countr_zero(v);
        fn(wi * 64 + bit);
        v &= v - 1;
      }
    }
  }

  static Mask first_n(int n) {
    Mask m;
    for (int wi = 0; wi < kWords; ++wi) {
      const int lo = wi * 64;
      if (n >= lo + 64)
        m.w[wi] = ~std::uint64_t(0);
      else if (n > lo)
        m.w[wi] = (std::uint64_t(1) << (n - lo)) - 1;
    }
    return m;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const PlacementProblem& p, const SolveOptions& opt)
      : n_(p.size()), deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(
                                       opt.timeout_seconds))) {
    if (n_ < 1 || n_ > kMaxN)
      throw ValidationError("placement instance size " + std::to_string(n_) +
                            " outside supported range 1.." +
                            std::to_string(kMaxN));
    cover_.resize(n_);
    colset_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      if (p.C(i, i) == 0)
        throw ValidationError("connectivity matrix must have a unit diagonal "
                              "(row " +
                              std::to_string(i) + ")");
      for (int j = 0; j < n_; ++j) {
        if (p.C(i, j) != 0) {
          cover_[j].set(i);   // column j covers row i
          colset_[i].set(j);  // row i is covered by column j
        }
      }
    }
  }

  PlacementSolution run() {
    const auto start = Clock::now();
    preprocess();

    PlacementSolution sol;
    sol.method = SolveMethod::BranchAndBound;

    // Greedy incumbent on the residual problem.
    std::vector<int> greedy_cols;
    greedy(residual_rows_, avail_, greedy_cols);
    best_count_ = static_cast<int>(forced_.size() + greedy_cols.size());
    best_free_ = greedy_cols;

    if (Clock::now() > deadline_) timed_out_ = true;
    if (residual_rows_.any() && !timed_out_)
      dfs_min(residual_rows_, avail_, static_cast<int>(forced_.size()));
    else if (residual_rows_.none())
      best_count_ = static_cast<int>(forced_.size());

    std::vector<int> chosen;
    if (!timed_out_) {
      const int k_free = best_count_ - static_cast<int>(forced_.size());
      chosen = extract_lex_min(k_free);
    }
    if (timed_out_) chosen = best_free_;

    sol.d.assign(n_, 0);
    for (int j : forced_) sol.d[j] = 1;
    for (int j : chosen) sol.d[j] = 1;
    sol.count = static_cast<int>(std::count(sol.d.begin(), sol.d.end(), 1));
    sol.proven_optimal = !timed_out_;
    sol.nodes_explored = nodes_;
    sol.solve_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    return sol;
  }

 private:
  bool time_up() {
    if (timed_out_) return true;
    if ((nodes_ & 0x3F) == 0 && Clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  // Unit-row forcing, duplicate-column elimination and row domination, to a
  // fixpoint. Duplicate elimination is restricted to *equal* cover sets
  // (larger index dropped): fixing strictly dominated columns to zero can
  // exclude the lexicographically smallest optimum.
  void preprocess() {
    Mask active = Mask::first_n(n_);
    Mask avail = Mask::first_n(n_);
    bool changed = true;
    while (changed) {
      changed = false;

      // unit rows force their only candidate
      bool forced_one = true;
      while (forced_one) {
        forced_one = false;
        for (int r = 0; r < n_; ++r) {
          if (!active.test(r)) continue;
          const Mask cand = colset_[r].and_with(avail);
          if (cand.count() == 1) {
            int j = -1;
            cand.for_each([&](int b) { j = b; });
            forced_.push_back(j);
            avail.clear(j);
            active = active.and_not(cover_[j]);
            forced_one = true;
            changed = true;
          }
        }
      }

      // duplicate columns (equal residual cover): keep the smallest index
      for (int i = 0; i < n_; ++i) {
        if (!avail.test(i)) continue;
        const Mask ci = cover_[i].and_with(active);
        for (int j = i + 1; j < n_; ++j) {
          if (!avail.test(j)) continue;
          if (ci == cover_[j].and_with(active)) {
            avail.clear(j);
            changed = true;
          }
        }
      }

      // row domination: covering j implies covering i when the columns that
      // cover j are a subset of those covering i -> drop row i
      for (int i = 0; i < n_; ++i) {
        if (!active.test(i)) continue;
        const Mask ci = colset_[i].and_with(avail);
        for (int j = 0; j < n_; ++j) {
          if (j == i || !active.test(j)) continue;
          const Mask cj = colset_[j].and_with(avail);
          if (cj.subset_of(ci) && (!(cj == ci) || j < i)) {
            active.clear(i);
            changed = true;
            break;
          }
        }
      }
    }
    residual_rows_ = active;
    avail_ = avail;
  }

  // Admissible lower bound: rows no single available column covers together
  // each need their own column, plus the ceiling bound |U| / best coverage.
  int packing_bound(const Mask& u, const Mask& avail) {
    int lb = 0;
    Mask blocked;
    while (true) {
      int pick = -1, pick_cand = n_ + 1;
      for (int r = 0; r < n_; ++r) {
        if (!u.test(r) || blocked.test(r)) continue;
        const int c = colset_[r].and_with(avail).count();
        if (c == 0) return n_ + 1;  // uncoverable row: infeasible branch
        if (c < pick_cand) {
          pick_cand = c;
          pick = r;
        }
      }
      if (pick < 0) break;
      ++lb;
      colset_[pick].and_with(avail).for_each(
          [&](int j) { blocked |= cover_[j]; });
    }
    int maxcov = 0;
    avail.for_each([&](int j) {
      const int c = cover_[j].and_with(u).count();
      if (c > maxcov) maxcov = c;
    });
    if (maxcov == 0) return n_ + 1;
    const int total = u.count();
    const int ceil_bound = (total + maxcov - 1) / maxcov;
    return std::max(lb, ceil_bound);
  }

  void greedy(Mask u, Mask avail, std::vector<int>& out) {
    out.clear();
    while (u.any()) {
      int pick = -1, pick_cov = 0;
      avail.for_each([&](int j) {
        const int c = cover_[j].and_with(u).count();
        if (c > pick_cov) {
          pick_cov = c;
          pick = j;
        }
      });
      if (pick < 0) return;  // cannot happen with a unit diagonal
      out.push_back(pick);
      u = u.and_not(cover_[pick]);
      avail.clear(pick);
    }
  }

  // Candidate columns of the most constrained uncovered row, best coverage
  // first (index ascending on ties).
  std::vector<int> branch_candidates(const Mask& u, const Mask& avail) {
    int pick = -1, pick_cand = n_ + 1;
    for (int r = 0; r < n_; ++r) {
      if (!u.test(r)) continue;
      const int c = colset_[r].and_with(avail).count();
      if (c < pick_cand) {
        pick_cand = c;
        pick = r;
      }
    }
    std::vector<int> cand;
    if (pick < 0) return cand;
    colset_[pick].and_with(avail).for_each([&](int j) { cand.push_back(j); });
    std::sort(cand.begin(), cand.end(), [&](int a, int b) {
      const int ca = cover_[a].and_with(u).count();
      const int cb = cover_[b].and_with(u).count();
      if (ca != cb) return ca > cb;
      return a < b;
    });
    return cand;
  }

  void dfs_min(const Mask& u, Mask avail, int count) {
    ++nodes_;
    if (time_up()) return;
    if (u.none()) {
      if (count < best_count_) {
        best_count_ = count;
        best_free_ = stack_;
      }
      return;
    }
    if (count + 1 >= best_count_) return;
    if (count + packing_bound(u, avail) >= best_count_) return;
    const std::vector<int> cand = branch_candidates(u, avail);
    if (cand.empty()) return;
    for (int j : cand) {
      avail.clear(j);
      stack_.push_back(j);
      dfs_min(u.and_not(cover_[j]), avail, count + 1);
      stack_.pop_back();
      if (timed_out_) return;
    }
  }

  bool dfs_feasible(const Mask& u, Mask avail, int budget) {
    if (u.none()) return true;
    if (budget <= 0) return false;
    ++nodes_;
    if (time_up()) return false;
    if (packing_bound(u, avail) > budget) return false;
    const std::vector<int> cand = branch_candidates(u, avail);
    if (cand.empty()) return false;
    for (int j : cand) {
      avail.clear(j);
      if (dfs_feasible(u.and_not(cover_[j]), avail, budget - 1)) return true;
      if (timed_out_) return false;
    }
    return false;
  }

  // Smallest selected-index tuple among k_free-column covers of the residual
  // rows: commit each index in ascending order iff the rest stays feasible
  // using strictly larger indices.
  std::vector<int> extract_lex_min(int k_free) {
    std::vector<int> chosen;
    Mask u = residual_rows_;
    for (int j = 0; j < n_ && static_cast<int>(chosen.size()) < k_free; ++j) {
      if (!avail_.test(j)) continue;
      if (!cover_[j].intersects(u)) continue;
      const Mask u2 = u.and_not(cover_[j]);
      Mask avail_gt = avail_.and_not(Mask::first_n(j + 1));
      const int budget = k_free - static_cast<int>(chosen.size()) - 1;
      bool ok;
      if (u2.none())
        ok = true;
      else
        ok = dfs_feasible(u2, avail_gt, budget);
      if (timed_out_) return chosen;
      if (ok) {
        chosen.push_back(j);
        u = u2;
        if (u.none()) break;
      }
    }
    return chosen;
  }

  int n_;
  std::vector<Mask> cover_, colset_;
  Mask residual_rows_, avail_;
  std::vector<int> forced_;
  int best_count_ = 0;
  std::vector<int> best_free_, stack_;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
  Clock::time_point deadline_;
};

}  // namespace

PlacementSolution solve(const PlacementProblem& p, const SolveOptions& opt) {
  BranchAndBound bnb(p, opt);
  return bnb.run();
}

PlacementSolution solve_exhaustive(const PlacementProblem& p) {
  const int n = p.size();
  if (n < 1 || n > 24)
    throw ValidationError("exhaustive solver supports 1..24 buses, got " +
                          std::to_string(n));
  const auto start = Clock::now();
  std::vector<Mask> cover(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (p.C(i, j) != 0) cover[j].set(i);
  const Mask all = Mask::first_n(n);

  PlacementSolution sol;
  sol.method = SolveMethod::Exhaustive;
  std::uint64_t tested = 0;
  for (int k = 1; k <= n; ++k) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      ++tested;
      Mask covered;
      for (int i : idx) covered |= cover[i];
      if (all.subset_of(covered)) {
        sol.d.assign(n, 0);
        for (int i : idx) sol.d[i] = 1;
        sol.count = k;
        sol.proven_optimal = true;
        sol.nodes_explored = tested;
        sol.solve_seconds =
            std::chrono::duration<double>(Clock::now() - start).count();
        return sol;
      }
      // next combination in lexicographic order
      int pos = k - 1;
      while (pos >= 0 && idx[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  throw Error("exhaustive search found no cover (diagonal not unit?)");
}

VerifyResult verify(const PlacementProblem& p,
                    const std::vector<std::uint8_t>& d) {
  const int n = p.size();
  if (static_cast<int>(d.size()) != n)
    throw ValidationError("decision vector length mismatch");
  VerifyResult out;
  for (int i = 0; i < n; ++i) {
    bool covered = false;
    for (int j = 0; j < n && !covered; ++j)
      covered = d[j] != 0 && p.C(i, j) != 0;
    if (!covered) out.uncovered.push_back(i);
  }
  out.ok = out.uncovered.empty();
  return out;
}

std::string problem_to_csv(const PlacementProblem& p) {
  std::string out;
  const int n = p.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out.push_back(',');
      out.push_back(p.C(i, j) ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

PlacementProblem problem_from_csv(std::istream& in) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::uint8_t> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      // trim
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r'))
        cell.pop_back();
      std::size_t s = 0;
      while (s < cell.size() && cell[s] == ' ') ++s;
      cell.erase(0, s);
      if (cell == "0")
        row.push_back(0);
      else if (cell == "1")
        row.push_back(1);
      else
        throw ParseError("expected 0 or 1, got \"" + cell + "\"", lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty connectivity matrix");
  const int n = static_cast<int>(rows.size());
  PlacementProblem p;
  p.C.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ParseError("row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " entries, expected " +
                       std::to_string(n));
    for (int j = 0; j < n; ++j) p.C(i, j) = rows[i][j];
  }
  return p;
}

std::string problem_to_json(const PlacementProblem& p,
                            const PlacementSolution* sol) {
  nlohmann::json doc;
  const int n = p.size();
  doc["n"] = n;
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (p.C(i, j) != 0) edges.push_back({i, j});
  doc["edges"] = std::move(edges);
  if (sol) {
    nlohmann::json js;
    js["d"] = sol->d;
    js["count"] = sol->count;
    js["optimal"] = sol->proven_optimal;
    doc["solution"] = std::move(js);
  }
  return doc.dump(2) + "\n";
}

PlacementProblem problem_from_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    const int n = doc.at("n").get<int>();
    if (n < 1) throw ParseError("n must be positive");
    PlacementProblem p;
    p.C.setZero(n, n);
    for (int i = 0; i < n; ++i) p.C(i, i) = 1;
    for (const auto& e : doc.at("edges")) {
      const int i = e.at(0).get<int>();
      const int j = e.at(1).get<int>();
      if (i < 0 || j < 0 || i >= n || j >= n || i == j)
        throw ParseError("invalid edge [" + std::to_string(i) + "," +
                         std::to_string(j) + "]");
      p.C(i, j) = 1;
      p.C(j, i) = 1;
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

}  // namespace gridsentry
