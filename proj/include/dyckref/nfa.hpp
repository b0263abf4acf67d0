#ifndef DYCKREF_NFA_HPP_
#define DYCKREF_NFA_HPP_

#include <optional>
#include <set>
#include <vector>

#include "dyckref/caps.hpp"
#include "dyckref/words.hpp"

namespace dyckref {

// Explicit nondeterministic automaton with epsilon edges.
struct Nfa {
  struct Edge {
    int from = -1;
    std::optional<Sym> label;  // nullopt: epsilon
    int to = -1;
  };
  int num_states = 0;
  int initial = -1;
  std::vector<int> finals;
  std::vector<Edge> edges;

  int add_state() { return num_states++; }
  void add_edge(int from, std::optional<Sym> label, int to) {
    edges.push_back({from, label, to});
  }
  bool is_final(int q) const {
    for (int f : finals)
      if (f == q) return true;
    return false;
  }
};

// All accepted words of length <= max_len (exact within the bound).
std::vector<Word> nfa_words(const Nfa& a, int max_len, int64_t cap);

// States reachable from the initial state / co-reachable from finals;
// used to prune constructions.
Nfa nfa_trim(const Nfa& a);

bool nfa_accepts(const Nfa& a, const Word& w);

}  // namespace dyckref

#endif
