#ifndef DYCKREF_DOWNCLOSURE_HPP_
#define DYCKREF_DOWNCLOSURE_HPP_

#include <optional>

#include "dyckref/analysis.hpp"
#include "dyckref/nfa.hpp"
#include "dyckref/program.hpp"
#include "dyckref/vass.hpp"

namespace dyckref {

// A realizable pump summary: dips on both sides, handler letters available
// on both sides, and whether an increasing pump certifies it.
struct PumpAbstraction {
  int64_t d_left = 0, d_right = 0;
  uint32_t gamma_left = 0, gamma_right = 0;  // handler base bitsets
  bool increasing = false;

  friend bool operator==(const PumpAbstraction&, const PumpAbstraction&) =
      default;
  friend auto operator<=>(const PumpAbstraction&, const PumpAbstraction&) =
      default;
};

// All cap-bounded realizable abstractions of the pumps of one nonterminal,
// with maximal letter sets per dip pair.
std::vector<PumpAbstraction> undivided_pump_abstractions(const Grammar& g_cnf,
                                                         int nt,
                                                         const Caps& caps,
                                                         CapReport* report);

// One emission step of a closure automaton.
struct Atom {
  enum Kind { Letter, OptLetter, Star } kind = Letter;
  Sym letter{};            // Letter / OptLetter
  std::vector<Sym> star;   // Star (sorted)

  static Atom lit(Sym s) { return {Letter, s, {}}; }
  static Atom opt(Sym s) { return {OptLetter, s, {}}; }
  static Atom star_of(std::vector<Sym> xs);

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};
using AtomSeq = std::vector<Atom>;

// Ideal language: a product of atoms. Membership by greedy scan.
struct Ideal {
  AtomSeq atoms;
};
bool ideal_member(const Ideal& ideal, const Word& w);

// ---- almost-pumpfree grammars ----------------------------------------------

// Nonterminal roles in the transformed grammar.
enum class ApfClass {
  BackboneBoth,  // derives both markers; undivided pumps abstracted
  BackboneHash,  // derives '#'
  BackboneBar,   // derives '~#'
  Path,          // marker-free spine pieces (chains of leaf emissions)
  LeafLetter,    // single terminal
  LeafStar,      // subalphabet star
};

struct ApfGrammar {
  Grammar g;  // extended CNF with unit productions
  std::vector<ApfClass> cls;
  MarkerShape shape = MarkerShape::None;
  CapReport report;
};

// Eliminates undivided pumps and flattens marker-free subtrees of one
// uniformly marked, tame-pumping grammar. Divided pumps remain.
ApfGrammar almost_pumpfree(const Grammar& g_uniform, const Caps& caps);

// Structural validation of the two almost-pumpfree conditions.
bool apf_conditions_hold(const ApfGrammar& apf, std::string* why = nullptr);

// ---- divided pumps -----------------------------------------------------------

// Pump walker over an almost-pumpfree grammar: states are its nonterminals;
// a top-down walk from A back to A reads the left pump word in order on the
// left tape and the right pump word reversed on the right tape.
struct PumpTransducer {
  struct Edge {
    int from = -1;
    std::optional<Atom> left;   // consumed on the left tape
    std::optional<Atom> right;  // consumed on the right tape
    int to = -1;
  };
  int nt = -1;  // initial and final state
  int num_states = 0;
  std::vector<Edge> edges;
};

PumpTransducer build_pump_transducer(const ApfGrammar& apf, int nt);

// Does the transducer accept the pump pair (u, v), i.e. A =>* u A v?
bool pump_transducer_accepts(const PumpTransducer& t, const Word& u,
                             const Word& v);

// Register quadruple (dip_left, offset_left, dip_right, offset_right).
struct Quad {
  int64_t dl = 0, ol = 0, dr = 0, orr = 0;
  friend bool operator==(const Quad&, const Quad&) = default;
  friend auto operator<=>(const Quad&, const Quad&) = default;
};

// Explicit product of a pump transducer with dip/offset registers for both
// tapes, accepting at one register target. States beyond the caps are
// pruned and recorded.
struct TrackedPumpTransducer {
  struct State {
    int base = -1;
    Quad regs;
    friend bool operator==(const State&, const State&) = default;
    friend auto operator<=>(const State&, const State&) = default;
  };
  struct Edge {
    int from = -1;
    std::optional<Atom> left, right;
    int to = -1;
    int base_edge = -1;
  };
  std::vector<State> states;
  std::vector<Edge> edges;
  int initial = -1;
  std::optional<int> final_state;   // state (nt, target), when reachable
  bool pruned_registers = false;    // some register left the caps
  bool pruned_budget = false;       // the state budget bound
};

TrackedPumpTransducer track_pump_transducer(const PumpTransducer& t,
                                            const Quad& target,
                                            const Caps& caps);

// A state-distinct run of a tracked transducer together with its two ideals
// (cycle alphabets around the visited states, single edge letters between).
struct SkeletonRun {
  std::vector<int> edges;  // tracked edge indices
  Ideal left, right;
  Quad target;
};

std::vector<SkeletonRun> skeleton_runs(const TrackedPumpTransducer& t,
                                       const Caps& caps);

// ---- closure automaton ---------------------------------------------------------

struct ClosureNfa {
  Nfa nfa;
  CapReport report;
};

// Explicit automaton whose downward closure equals that of L(g); built per
// marker shape over the almost-pumpfree grammar and joined.
ClosureNfa closure_nfa(const Grammar& g, const Caps& caps);

// VASS with the downward closure of the program language: handler letters
// become counters, each rule simulates the closure automaton of its
// nonterminal.
struct ClosureVass {
  Vass vass;
  CapReport report;
};

ClosureVass ap_to_vass(const AsyncProgram& p, const Caps& caps);

}  // namespace dyckref

#endif
