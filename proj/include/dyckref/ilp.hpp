#ifndef DYCKREF_ILP_HPP_
#define DYCKREF_ILP_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dyckref/caps.hpp"

namespace dyckref {

// One linear constraint over nonnegative integer variables.
struct LinRow {
  enum Rel { Le, Eq, Ge };
  std::map<int, int64_t> coeffs;
  Rel rel = Eq;
  int64_t rhs = 0;
};

// A conjunction of linear constraints over nonnegative integers. Variables
// may carry explicit upper bounds; unbounded variables are boxed by the
// solver with a derived bound before branching.
struct LinearSystem {
  std::vector<std::string> var_names;
  std::vector<int64_t> upper;  // -1: no explicit bound
  std::vector<LinRow> rows;
  bool trivially_infeasible = false;

  int add_var(const std::string& name, int64_t upper_bound = -1) {
    var_names.push_back(name);
    upper.push_back(upper_bound);
    return int(var_names.size()) - 1;
  }
  void add_row(LinRow r) { rows.push_back(std::move(r)); }
  size_t num_vars() const { return var_names.size(); }
};

struct IlpResult {
  enum Status { Sat, Unsat, Indeterminate } status = Unsat;
  std::vector<int64_t> witness;  // valid when Sat
  int64_t nodes = 0;
};

// Exact feasibility over nonnegative integers: branch and bound with exact
// rational relaxation bounding and deterministic first-fractional branching.
IlpResult ilp_feasible(const LinearSystem& sys, const Caps& caps = {});

// Substitution check for witnesses.
bool check_solution(const LinearSystem& sys, const std::vector<int64_t>& x);

}  // namespace dyckref

#endif
