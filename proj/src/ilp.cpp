#include "dyckref/ilp.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <optional>

namespace dyckref {

namespace {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Feasibility of { C x <= d, x >= 0 } by phase-1 primal simplex with Bland's
// rule. Returns a basic feasible point when one exists.
class Phase1Simplex {
 public:
  Phase1Simplex(std::vector<std::vector<Rat>> c, std::vector<Rat> d)
      : c_(std::move(c)), d_(std::move(d)) {}

  std::optional<std::vector<Rat>> solve() {
    size_t m = c_.size();
    size_t n = m ? c_[0].size() : 0;
    // Tableau columns: n structural + m slacks + artificials + rhs.
    // Row i: sum_j C[i][j] x_j + s_i (+ a_i if d_i < 0, negated row) = d_i.
    std::vector<size_t> art_of_row(m, SIZE_MAX);
    size_t num_art = 0;
    for (size_t i = 0; i < m; ++i)
      if (d_[i] < 0) art_of_row[i] = num_art++;
    size_t cols = n + m + num_art;

    std::vector<std::vector<Rat>> t(m, std::vector<Rat>(cols + 1, Rat(0)));
    basis_.assign(m, 0);
    for (size_t i = 0; i < m; ++i) {
      bool neg = d_[i] < 0;
      for (size_t j = 0; j < n; ++j) t[i][j] = neg ? -c_[i][j] : c_[i][j];
      t[i][n + i] = neg ? Rat(-1) : Rat(1);  // slack
      t[i][cols] = neg ? -d_[i] : d_[i];
      if (neg) {
        t[i][n + m + art_of_row[i]] = 1;
        basis_[i] = n + m + art_of_row[i];
      } else {
        basis_[i] = n + i;
      }
    }
    if (num_art == 0) return extract(t, n, cols);  // x = 0 feasible

    // Objective: minimize the sum of artificials.
    std::vector<Rat> z(cols + 1, Rat(0));
    for (size_t i = 0; i < m; ++i)
      if (art_of_row[i] != SIZE_MAX)
        for (size_t j = 0; j <= cols; ++j) z[j] += t[i][j];
    auto reduced = [&](size_t j) {
      Rat cost = j >= n + m ? Rat(1) : Rat(0);
      return z[j] - cost;
    };
    while (true) {
      size_t enter = SIZE_MAX;  // Bland: smallest improving index
      for (size_t j = 0; j < cols; ++j)
        if (reduced(j) > 0) { enter = j; break; }
      if (enter == SIZE_MAX) break;
      size_t leave_row = SIZE_MAX;
      Rat best;
      for (size_t i = 0; i < m; ++i) {
        if (t[i][enter] <= 0) continue;
        Rat ratio = t[i][cols] / t[i][enter];
        if (leave_row == SIZE_MAX || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave_row])) {
          best = ratio;
          leave_row = i;
        }
      }
      if (leave_row == SIZE_MAX) return std::nullopt;
      pivot(t, z, leave_row, enter, cols);
      basis_[leave_row] = enter;
    }
    if (z[cols] != 0) return std::nullopt;  // infeasible
    return extract(t, n, cols);
  }

 private:
  std::vector<Rat> extract(const std::vector<std::vector<Rat>>& t, size_t n,
                           size_t cols) {
    std::vector<Rat> x(n, Rat(0));
    for (size_t i = 0; i < t.size(); ++i)
      if (basis_[i] < n) x[basis_[i]] = t[i][cols];
    return x;
  }
  void pivot(std::vector<std::vector<Rat>>& t, std::vector<Rat>& z, size_t r,
             size_t c, size_t cols) {
    Rat pv = t[r][c];
    for (size_t j = 0; j <= cols; ++j) t[r][j] /= pv;
    for (size_t i = 0; i < t.size(); ++i) {
      if (i == r || t[i][c] == 0) continue;
      Rat f = t[i][c];
      for (size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[r][j];
    }
    if (z[c] != 0) {
      Rat f = z[c];
      for (size_t j = 0; j <= cols; ++j) z[j] -= f * t[r][j];
    }
  }
  std::vector<std::vector<Rat>> c_;
  std::vector<Rat> d_;
  std::vector<size_t> basis_;
};

struct Box {
  std::vector<Int> lo, hi;
};

// LP relaxation of sys within box; variables shifted to x' = x - lo >= 0.
std::optional<std::vector<Rat>> lp_feasible(const LinearSystem& sys,
                                            const Box& box) {
  size_t n = sys.num_vars();
  std::vector<std::vector<Rat>> c;
  std::vector<Rat> d;
  auto add_le = [&](const std::map<int, int64_t>& coeffs, Rat rhs) {
    std::vector<Rat> row(n, Rat(0));
    for (auto [v, a] : coeffs) {
      row[size_t(v)] = a;
      rhs -= Rat(box.lo[size_t(v)]) * a;
    }
    c.push_back(std::move(row));
    d.push_back(std::move(rhs));
  };
  for (const auto& r : sys.rows) {
    if (r.rel == LinRow::Le || r.rel == LinRow::Eq) add_le(r.coeffs, Rat(r.rhs));
    if (r.rel == LinRow::Ge || r.rel == LinRow::Eq) {
      std::map<int, int64_t> neg;
      for (auto [v, a] : r.coeffs) neg[v] = -a;
      add_le(neg, Rat(-r.rhs));
    }
  }
  for (size_t v = 0; v < n; ++v) {
    std::vector<Rat> row(n, Rat(0));
    row[v] = 1;
    c.push_back(std::move(row));
    d.push_back(Rat(box.hi[v] - box.lo[v]));
  }
  Phase1Simplex lp(std::move(c), std::move(d));
  auto r = lp.solve();
  if (!r) return std::nullopt;
  for (size_t v = 0; v < n; ++v) (*r)[v] += Rat(box.lo[v]);
  return r;
}

Int derived_box_bound(const LinearSystem& sys) {
  // Small-solution bound for integer feasibility: when solvable, a solution
  // exists with entries at most (n+1) * (m(a+1)(b+1))^(2m+3). Kept as a big
  // integer purely to make branch-and-bound terminate; the LP relaxation
  // does the actual pruning.
  Int a = 1, b = 1;
  for (const auto& r : sys.rows) {
    for (auto [v, co] : r.coeffs) a = std::max(a, Int(co < 0 ? -co : co));
    b = std::max(b, Int(r.rhs < 0 ? -r.rhs : r.rhs));
  }
  Int base = Int(sys.rows.size() + 1) * (a + 1) * (b + 1);
  int64_t exp_count = 2 * int64_t(sys.rows.size()) + 3;
  Int result = Int(sys.num_vars()) + 1;
  for (int64_t i = 0; i < exp_count && msb(result) < 400; ++i) result *= base;
  return result;
}

}  // namespace

bool check_solution(const LinearSystem& sys, const std::vector<int64_t>& x) {
  if (x.size() != sys.num_vars()) return false;
  for (size_t v = 0; v < x.size(); ++v) {
    if (x[v] < 0) return false;
    if (sys.upper[v] >= 0 && x[v] > sys.upper[v]) return false;
  }
  for (const auto& r : sys.rows) {
    Int lhs = 0;
    for (auto [v, a] : r.coeffs) lhs += Int(a) * x[size_t(v)];
    if (r.rel == LinRow::Le && lhs > r.rhs) return false;
    if (r.rel == LinRow::Ge && lhs < r.rhs) return false;
    if (r.rel == LinRow::Eq && lhs != r.rhs) return false;
  }
  return true;
}

IlpResult ilp_feasible(const LinearSystem& sys, const Caps& caps) {
  IlpResult res;
  if (sys.trivially_infeasible) {
    res.status = IlpResult::Unsat;
    return res;
  }
  size_t n = sys.num_vars();
  Box root;
  root.lo.assign(n, Int(0));
  root.hi.assign(n, Int(0));
  Int derived = derived_box_bound(sys);
  for (size_t v = 0; v < n; ++v)
    root.hi[v] = sys.upper[v] >= 0 ? Int(sys.upper[v]) : derived;

  std::vector<Box> stack = {std::move(root)};
  while (!stack.empty()) {
    if (++res.nodes > caps.ilp_node_budget) {
      res.status = IlpResult::Indeterminate;
      return res;
    }
    Box box = std::move(stack.back());
    stack.pop_back();
    bool empty = false;
    for (size_t v = 0; v < n; ++v)
      if (box.lo[v] > box.hi[v]) empty = true;
    if (empty) continue;
    auto point = lp_feasible(sys, box);
    if (!point) continue;
    size_t frac = SIZE_MAX;
    for (size_t v = 0; v < n; ++v)
      if (denominator((*point)[v]) != 1) { frac = v; break; }
    if (frac == SIZE_MAX) {
      res.status = IlpResult::Sat;
      res.witness.resize(n);
      bool fits = true;
      for (size_t v = 0; v < n; ++v) {
        Int val = numerator((*point)[v]);
        if (val > std::numeric_limits<int64_t>::max()) fits = false;
        res.witness[v] = fits ? int64_t(val) : 0;
      }
      if (!fits || !check_solution(sys, res.witness))
        res.status = IlpResult::Indeterminate;
      return res;
    }
    Int floor_val = numerator((*point)[frac]) / denominator((*point)[frac]);
    if ((*point)[frac] < 0 && Rat(floor_val) != (*point)[frac]) floor_val -= 1;
    Box down = box, up = std::move(box);
    down.hi[frac] = floor_val;
    up.lo[frac] = floor_val + 1;
    stack.push_back(std::move(up));
    stack.push_back(std::move(down));  // floor branch first
  }
  res.status = IlpResult::Unsat;
  return res;
}

}  // namespace dyckref
