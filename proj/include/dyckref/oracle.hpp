#ifndef DYCKREF_ORACLE_HPP_
#define DYCKREF_ORACLE_HPP_

#include <optional>

#include "dyckref/nfa.hpp"
#include "dyckref/program.hpp"
#include "dyckref/vass.hpp"

namespace dyckref {

struct OracleBudget {
  int max_word = 6;          // handler word length bound
  int max_steps = 8;         // scheduler steps
  int64_t max_configs = 200000;
  int64_t max_results = 200000;
  int closure_len = 6;       // slice length for closure comparisons
  int max_slack = 12;        // witness search slack before giving up
  int64_t counter_cap = 8;   // forward VASS exploration bound
};

// One scheduler step of a found run.
struct RunStep {
  int rule = -1;
  Word body;  // the handler word chosen
};

struct InclusionWitness {
  Violation kind = Violation::None;
  Word trace;
  std::vector<RunStep> run;
};

struct OracleInclusion {
  // Violation found within the budget, or nothing. The absence of a witness
  // is only meaningful up to the budget.
  std::optional<InclusionWitness> violation;
  bool budget_exhausted = false;
};

// Direct semantics: enumerate runs, classify traces, return the least
// violating trace in canonical order.
OracleInclusion oracle_dyck_inclusion(const AsyncProgram& p,
                                      const OracleBudget& b);

// Bounded slice of the downward closure with slack stabilization: member
// words of length <= b.closure_len below some language word, with the
// witness length grown until two consecutive slacks agree. Requires
// canonical bracket letters. Throws CapExceeded if the slice does not
// stabilize within the slack budget.
std::set<Word> oracle_closure(const Grammar& g, const OracleBudget& b);
std::set<Word> oracle_closure(const Nfa& a, const OracleBudget& b);

// Downward-closure slice of an explicit word set (helper shared by the two
// variants above; exposed for tests).
std::set<Word> closure_slice_of_words(const std::vector<Word>& language,
                                      int len);

struct CoverabilityComparison {
  bool forward_covered = false;          // within the bounded exploration
  CoverResult::Status backward = CoverResult::Unreachable;
  bool consistent = true;
};

// Forward bounded search vs the backward algorithm.
CoverabilityComparison oracle_coverability(const Vass& v,
                                           const OracleBudget& b);

}  // namespace dyckref

#endif
