#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "dyckref/ilp.hpp"

using namespace dyckref;

namespace {

// Exhaustive search over a small box, as the independent reference.
bool box_search(const LinearSystem& sys, int64_t box,
                std::vector<int64_t>* out = nullptr) {
  std::vector<int64_t> x(sys.num_vars(), 0);
  std::function<bool(size_t)> rec = [&](size_t v) -> bool {
    if (v == sys.num_vars()) {
      if (check_solution(sys, x)) {
        if (out) *out = x;
        return true;
      }
      return false;
    }
    int64_t hi = sys.upper[v] >= 0 ? std::min(box, sys.upper[v]) : box;
    for (int64_t k = 0; k <= hi; ++k) {
      x[v] = k;
      if (rec(v + 1)) return true;
    }
    return false;
  };
  return rec(0);
}

}  // namespace

TEST_CASE("parity makes 2u = 3 unsat") {
  LinearSystem sys;
  int u = sys.add_var("u");
  sys.add_row({{{u, 2}}, LinRow::Eq, 3});
  CHECK(ilp_feasible(sys).status == IlpResult::Unsat);
}

TEST_CASE("u + v = 2 sat with verified witness") {
  LinearSystem sys;
  int u = sys.add_var("u");
  int v = sys.add_var("v");
  sys.add_row({{{u, 1}, {v, 1}}, LinRow::Eq, 2});
  auto r = ilp_feasible(sys);
  REQUIRE(r.status == IlpResult::Sat);
  CHECK(check_solution(sys, r.witness));
}

TEST_CASE("unsat inequality pair") {
  LinearSystem sys;
  int u = sys.add_var("u");
  int v = sys.add_var("v");
  sys.add_row({{{u, 1}, {v, 1}}, LinRow::Eq, 1});
  sys.add_row({{{u, 1}, {v, 1}}, LinRow::Ge, 2});
  CHECK(ilp_feasible(sys).status == IlpResult::Unsat);
}

TEST_CASE("trivially infeasible flag") {
  LinearSystem sys;
  sys.trivially_infeasible = true;
  CHECK(ilp_feasible(sys).status == IlpResult::Unsat);
}

TEST_CASE("fractional relaxation still finds integer points") {
  LinearSystem sys;
  int u = sys.add_var("u");
  int v = sys.add_var("v");
  sys.add_row({{{u, 2}, {v, 2}}, LinRow::Eq, 4});
  sys.add_row({{{u, 1}}, LinRow::Le, 1});
  auto r = ilp_feasible(sys);
  REQUIRE(r.status == IlpResult::Sat);
  CHECK(check_solution(sys, r.witness));
}

TEST_CASE("node budget reports indeterminate") {
  LinearSystem sys;
  int u = sys.add_var("u");
  int v = sys.add_var("v");
  sys.add_row({{{u, 2}, {v, 2}}, LinRow::Eq, 5});
  Caps caps;
  caps.ilp_node_budget = 0;
  CHECK(ilp_feasible(sys, caps).status == IlpResult::Indeterminate);
}

TEST_CASE("random systems agree with box search") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    LinearSystem sys;
    int nv = 1 + int(rng() % 3);
    for (int v = 0; v < nv; ++v) sys.add_var("x" + std::to_string(v), 12);
    int nr = 1 + int(rng() % 3);
    for (int i = 0; i < nr; ++i) {
      LinRow row;
      for (int v = 0; v < nv; ++v) {
        int64_t a = int64_t(rng() % 7) - 3;
        if (a) row.coeffs[v] = a;
      }
      row.rel = LinRow::Rel(rng() % 3);
      row.rhs = int64_t(rng() % 15) - 3;
      sys.add_row(row);
    }
    auto r = ilp_feasible(sys);
    bool expect = box_search(sys, 12);
    REQUIRE(r.status != IlpResult::Indeterminate);
    CHECK((r.status == IlpResult::Sat) == expect);
    if (r.status == IlpResult::Sat) CHECK(check_solution(sys, r.witness));
  }
}
