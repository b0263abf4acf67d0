#ifndef DYCKREF_ANALYSIS_HPP_
#define DYCKREF_ANALYSIS_HPP_

#include <optional>

#include "dyckref/grammar.hpp"
#include "dyckref/ilp.hpp"

namespace dyckref {

// ---- Parikh image ----------------------------------------------------------

// Production-count flow system for the Parikh image of L(g). Solutions of
// `flow` that additionally have support connected to the start symbol are
// exactly the realizable production-count vectors; parikh_feasible enforces
// connectedness through disjunctive refinement.
struct ParikhSystem {
  LinearSystem flow;
  std::vector<int> y_var;  // production index -> variable
  Grammar grammar;         // copy for support/connectivity reasoning

  // Linear expression counting occurrences of terminal t across y variables.
  std::map<int, int64_t> terminal_expr(Sym t) const;
};

ParikhSystem parikh_system(const Grammar& g);

struct ParikhQuery {
  enum Status { Sat, Unsat, Indeterminate } status = Unsat;
  std::vector<int64_t> y;  // per production, when Sat
};

// Feasibility of the Parikh system under extra constraints (over the flow
// system's variables). Exact: a Sat witness is flow-consistent and
// support-connected, hence realizable by a derivation.
ParikhQuery parikh_feasible(const ParikhSystem& ps,
                            const std::vector<LinRow>& extra,
                            const Caps& caps = {});

// ---- tame pumping -----------------------------------------------------------

struct TameResult {
  bool tame = false;
  std::optional<Pump> witness;  // a violating pump when not tame
  CapReport caps;
};

// Decides whether every pump A =>* uAv satisfies offset(u) >= 0 and
// offset(v) = -offset(u). Requires CNF without star productions.
TameResult check_tame_pumping(const Grammar& g, const Caps& caps = {});

enum class PumpKind { Zero, Increasing };

struct BoolWithCaps {
  bool value = false;
  CapReport caps;
};

// Whether nonterminal a has a nonempty pump with offset(u) = 0 (Zero) or
// offset(u) > 0 (Increasing).
BoolWithCaps pump_kind_exists(const Grammar& g, int a, PumpKind kind,
                              const Caps& caps = {});

// ---- dip-constrained pump queries ------------------------------------------

struct PsiRelationQuery {
  int nt = -1;
  std::optional<Sym> letter;               // handler letter to require
  PumpSide letter_side = PumpSide::Left;   // side where the letter must occur
  int64_t d_left = 0, d_right = 0;         // dip caps
  bool require_increasing = false;         // offset(u) > 0
};

// Reachable-effect analysis over the pump language of one nonterminal:
// for each pump (u, v), the tuple (dip u, offset u, dip v, offset v,
// handler letters of u, handler letters of v). Tuples are kept as an
// antichain; values beyond the caps set the clamped flag instead of being
// tracked.
class PumpEffects {
 public:
  struct Tuple {
    int64_t dip_l = 0, off_l = 0, dip_r = 0, off_r = 0;
    uint32_t letters_l = 0, letters_r = 0;  // bit i: handler base i occurs
    bool nonempty = false;

    friend bool operator==(const Tuple&, const Tuple&) = default;
    friend auto operator<=>(const Tuple&, const Tuple&) = default;
  };

  PumpEffects(const Grammar& g_cnf, int a0, const Caps& caps);

  bool clamped() const { return clamped_; }
  const std::vector<Tuple>& tuples() const { return root_; }

  // Query helpers; each also reports indeterminacy (query failed but some
  // clamped value might have satisfied it).
  bool exists(const PsiRelationQuery& q, bool* indeterminate) const;
  // Largest realizable dip value among tracked pump tuples.
  int64_t max_tracked_dip() const;
  // Union of handler letters over pumps with dips within (dl, dr), split by
  // side; optionally restricted to pumps witnessing offset(u) > 0.
  uint32_t letters_within(PumpSide side, int64_t dl, int64_t dr,
                          bool increasing_only) const;
  bool has_pump_within(int64_t dl, int64_t dr) const;
  bool has_increasing_within(int64_t dl, int64_t dr) const;

 private:
  std::vector<Tuple> root_;
  bool clamped_ = false;
};

BoolWithCaps pump_exists_with(const Grammar& g, const PsiRelationQuery& q,
                              const Caps& caps = {});

// ---- reachable word effects --------------------------------------------------

// Set of (dip, offset) pairs realizable by words of each nonterminal,
// clamped at the caps. Finite for tame-pumping grammars.
class EffectSets {
 public:
  EffectSets(const Grammar& g, const Caps& caps);
  bool clamped() const { return clamped_; }
  const std::set<EffectPair>& of(int nt) const { return sets_.at(nt); }
  int64_t max_dip() const;  // max dip across nonterminals, 0 if none

 private:
  std::vector<std::set<EffectPair>> sets_;
  bool clamped_ = false;
};

}  // namespace dyckref

#endif
