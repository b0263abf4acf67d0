#ifndef DYCKREF_GRAMMAR_HPP_
#define DYCKREF_GRAMMAR_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "dyckref/caps.hpp"
#include "dyckref/words.hpp"

namespace dyckref {

// A grammar symbol: terminal, nonterminal index, or a star over a terminal
// subalphabet (extended productions use a single star as their whole body,
// but a star may also appear inline before normalization).
struct GSym {
  enum Tag : uint8_t { Terminal, Nonterminal, Star } tag = Terminal;
  Sym t{};                  // Terminal
  int nt = -1;              // Nonterminal
  std::vector<Sym> star;    // Star: sorted, deduplicated alphabet

  static GSym terminal(Sym s) { GSym g; g.tag = Terminal; g.t = s; return g; }
  static GSym nonterminal(int a) { GSym g; g.tag = Nonterminal; g.nt = a; return g; }
  static GSym star_of(std::vector<Sym> xs);

  friend bool operator==(const GSym&, const GSym&) = default;
  friend auto operator<=>(const GSym&, const GSym&) = default;
};

struct Production {
  int lhs = -1;
  std::vector<GSym> rhs;

  friend bool operator==(const Production&, const Production&) = default;
  friend auto operator<=>(const Production&, const Production&) = default;
};

class Grammar {
 public:
  std::vector<std::string> nt_names;
  std::vector<Production> productions;
  int start = -1;

  int add_nonterminal(const std::string& name);
  void add_production(int lhs, std::vector<GSym> rhs);

  size_t num_nonterminals() const { return nt_names.size(); }
  // Size measure: sum over productions of |rhs| + 1.
  int64_t size() const;
  void validate() const;

  // Sorts productions into canonical (lhs, rhs) order and deduplicates.
  void normalize();

  bool in_cnf() const;
};

// Language-preserving transformation into Chomsky normal form. Star symbols
// are treated like single terminals; A -> Xi* productions remain legal.
Grammar to_cnf(const Grammar& g);

// Removes non-productive and unreachable nonterminals. An empty language
// yields a grammar with an empty production set. When given, new_of_old
// receives the index remapping (-1 for dropped nonterminals).
Grammar trim(const Grammar& g, std::vector<int>* new_of_old = nullptr);

bool language_empty(const Grammar& g);

// All words of length <= max_len, deduplicated and sorted. Throws
// CapExceeded when more than `cap` words would be returned.
std::vector<Word> enumerate_words(const Grammar& g, int max_len, int64_t cap);
std::vector<Word> enumerate_words_from(const Grammar& g, int start, int max_len,
                                       int64_t cap);

// Membership test (CYK over the CNF of g); used as an independent check.
bool derives(const Grammar& g, int nt, const Word& w);

// ---- marker typing -------------------------------------------------------

struct MarkedTyping {
  // For each original nonterminal, the set of realizable marker shapes.
  std::vector<std::set<MarkerShape>> shapes;
  // Split grammars, one per shape, with empty ones trimmed to no productions.
  std::array<Grammar, 4> split;  // indexed by MarkerShape
};

// Splits a grammar whose language lies in the marked-word pattern into four
// uniformly marked grammars via the product with the 4-state marker-pattern
// automaton. Throws if some derivable word has repeated or disordered
// markers.
MarkedTyping marked_typing(const Grammar& g);

// ---- offsets and dips ----------------------------------------------------

struct NonUniformWitness {
  int nt = -1;
  Word w1, w2;  // two derivable words with different offsets
};

using OffsetResult =
    std::variant<std::map<int, int64_t>, NonUniformWitness>;

// Unique offset per nonterminal, or a witness pair. Expects a trim grammar.
OffsetResult nonterminal_offsets(const Grammar& g);

struct MindipResult {
  std::map<int, int64_t> mindip;
  bool cap_hit = false;  // some value never moved off the saturated init
};

// Saturation algorithm for minimal dips; requires per-nonterminal
// offset-uniformity (throws otherwise).
MindipResult mindip(const Grammar& g, const Caps& caps = {});

struct DipBound {
  int64_t value = 0;
  bool capped = false;
};

// Certified dip bound 2^(2|g|) for tame-pumping grammars, saturated at cap.
DipBound dip_bound(const Grammar& g, const Caps& caps = {});

// ---- pumps ---------------------------------------------------------------

struct Pump {
  int nt = -1;
  Word left, right;
  // Production indices of g in derivation (DFS pre-)order; replaying them
  // from nt yields left . nt . right.
  std::vector<int> witness;
};

bool validate_pump(const Grammar& g, const Pump& p);

enum class PumpSide { Left, Right };

// Grammar over side-tagged terminals for the pump language of A0:
// { tagL(u) tagR(v) | A0 =>* u A0 v }.
struct PumpGrammar {
  Grammar g;
  // Tagged terminal <-> (side, original symbol). Tagged symbols reuse Sym
  // with remapped base indices; use these maps rather than interpreting them.
  std::map<Sym, std::pair<PumpSide, Sym>> untag;
  std::map<std::pair<int, Sym>, Sym> tag;  // (side as int, sym) -> tagged
  int epsilon_production = -1;             // index of A0 -> epsilon
  // Original production index per pump-grammar production (-1 for A0->eps).
  std::vector<int> origin;

  Sym tagged(PumpSide s, Sym x) const { return tag.at({int(s), x}); }
};

// Requires g in CNF. Terminals of any kind are tagged; markers must not
// occur (pump grammars are built per uniformly marked component).
PumpGrammar pump_grammar(const Grammar& g, int a0);

// All pumps of A with derivation witness using at most max_size productions.
// Epsilon pumps (both sides empty) are discarded.
std::vector<Pump> enumerate_pumps(const Grammar& g, int nt, int max_size,
                                  int64_t cap = 100000);

std::string dump(const Grammar& g, const SymbolTable& table);

}  // namespace dyckref

#endif
