#ifndef DYCKREF_CAPS_HPP_
#define DYCKREF_CAPS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyckref {

// Budgets and clamp values shared across analyses. A bound that actually
// binds during a computation is recorded as a CapEvent; definitive answers
// are only reported when no relevant cap fired.
struct Caps {
  // Clamp for tracked dip values (pump tuples, transducer registers).
  // Register values beyond the clamp only occur in words longer than the
  // clamp, so closure slices up to this length stay exact.
  int64_t dip_cap = 12;
  // Clamp for tracked offset values (symmetric, [-offset_cap, offset_cap]).
  int64_t offset_cap = 12;
  // Offset tracker bound B for the uniform-offset test and M for the
  // marked-factor test on VASS.
  int64_t tracker_bound = 64;
  // Explicit automaton construction budget.
  int64_t nfa_state_budget = 100000;
  // Branch-and-bound node budget for integer feasibility.
  int64_t ilp_node_budget = 1000000;
  // Skeleton-run enumeration budget per transducer.
  int64_t run_budget = 20000;
  // Tracked pump-transducer state budget.
  int64_t tracked_state_budget = 20000;
  // Generic enumeration budgets (words, traces, configurations).
  int64_t enum_budget = 200000;
  // Initialization value cap for the min-dip saturation.
  int64_t mindip_init_cap = int64_t{1} << 20;
  // Backward coverability basis budget.
  int64_t basis_budget = 200000;
  // Scheduler step budget for bounded reachability fallbacks.
  int64_t step_budget = 100000;
};

struct CapEvent {
  std::string stage;  // which analysis hit the cap
  std::string cap;    // which cap
  int64_t value;      // the configured value that bound
};

// Accumulated cap incidents. `exact_up_to` carries the word-length guarantee
// for closure automata built with register pruning: the automaton's language
// agrees with the true closure on all words up to that length.
struct CapReport {
  std::vector<CapEvent> events;
  int64_t exact_up_to = -1;  // -1: unrestricted

  bool indeterminate() const { return !events.empty(); }
  void hit(const std::string& stage, const std::string& cap, int64_t value) {
    events.push_back({stage, cap, value});
  }
  void merge(const CapReport& other) {
    events.insert(events.end(), other.events.begin(), other.events.end());
    if (other.exact_up_to >= 0 &&
        (exact_up_to < 0 || other.exact_up_to < exact_up_to))
      exact_up_to = other.exact_up_to;
  }
};

// Thrown when an enumeration exceeds its result cap.
struct CapExceeded : std::runtime_error {
  CapExceeded(const std::string& stage, int64_t cap)
      : std::runtime_error("cap exceeded in " + stage + " (cap " +
                           std::to_string(cap) + ")"),
        stage(stage),
        cap(cap) {}
  std::string stage;
  int64_t cap;
};

}  // namespace dyckref

#endif
