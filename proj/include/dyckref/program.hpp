#ifndef DYCKREF_PROGRAM_HPP_
#define DYCKREF_PROGRAM_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dyckref/caps.hpp"
#include "dyckref/grammar.hpp"

namespace dyckref {

// A scheduler rule: in state `from`, consume one pending instance of
// `handler` and run a word of `nt`, moving to state `to`.
struct Rule {
  int from = -1;
  Sym handler{};
  int nt = -1;
  int to = -1;
};

struct AsyncProgram {
  SymbolTable table;
  Grammar grammar;  // terminals: events (brackets, markers) and handlers
  int num_states = 0;
  std::vector<std::string> state_names;
  std::vector<Rule> rules;
  int q0 = -1, qf = -1;
  Sym gamma0{};

  int add_state(const std::string& name);
  void validate() const;
};

// Pending-instance multiset, sorted by handler symbol.
struct Configuration {
  int state = -1;
  std::map<Sym, int64_t> pending;

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

Configuration initial_configuration(const AsyncProgram& p);

// One scheduler step: consume the rule's handler, derive u, spawn its
// handler letters, emit its event letters. The word u must be derivable
// from the rule's nonterminal (checked when `check_derivation`).
Configuration step(const AsyncProgram& p, const Configuration& c, int rule_idx,
                   const Word& u, Word* emitted, bool check_derivation = false);

// All accepted traces using at most max_steps scheduler steps and handler
// words of length <= max_word. Exact within those bounds.
std::vector<Word> enumerate_traces(const AsyncProgram& p, int max_steps,
                                   int max_word, int64_t cap);

// Bounded forward exploration: can the final state be reached within the
// step budget?
bool bounded_reachable(const AsyncProgram& p, int max_steps, int max_word,
                       int64_t cap);

// ---- transductions -----------------------------------------------------------

struct Transducer {
  struct TEdge {
    int from = -1;
    std::optional<Sym> in;   // nullopt: epsilon input
    std::optional<Sym> out;  // nullopt: epsilon output
    int to = -1;
  };
  int num_states = 0;
  int initial = -1;
  int final_state = -1;
  std::vector<TEdge> edges;

  int add_state() { return num_states++; }
  void add_edge(int from, std::optional<Sym> in, std::optional<Sym> out,
                int to) {
    edges.push_back({from, in, out, to});
  }
};

// Accepted pairs with input length <= max_len.
std::vector<std::pair<Word, Word>> transducer_pairs(const Transducer& t,
                                                    int max_len, int64_t cap);

// Every accepted pair has equal input/output offset (bounded enumeration).
bool offset_preserving(const Transducer& t, int max_len);

// Image program with L(out) = T(L(p)): product of the grammar and scheduler
// with the transducer states. Handler letters pass through unchanged.
AsyncProgram apply_transduction(const AsyncProgram& p, const Transducer& t);

enum class AuxKind { O, D, M };

Transducer make_aux_transducer(const SymbolTable& table, AuxKind which);

// The three violation-detection images of the program's language.
AsyncProgram build_aux(const AsyncProgram& p, AuxKind which);

// ---- useful nonterminals -------------------------------------------------------

// Nonterminals taking part in some accepting run; decided through the
// coverability reduction (implemented with the downward-closure machinery),
// with a bounded-exploration fallback reported through caps.
std::set<int> useful_nonterminals(const AsyncProgram& p, const Caps& caps,
                                  CapReport* report);

// Drops rules and productions that mention non-useful nonterminals.
AsyncProgram restrict_to_useful(const AsyncProgram& p,
                                const std::set<int>& useful);

// Trims the program grammar with every rule nonterminal as a root, dropping
// rules whose nonterminal dies.
void trim_program_grammar(AsyncProgram& p);

std::string dump(const AsyncProgram& p);

}  // namespace dyckref

#endif
