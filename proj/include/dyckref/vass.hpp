#ifndef DYCKREF_VASS_HPP_
#define DYCKREF_VASS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dyckref/caps.hpp"
#include "dyckref/nfa.hpp"
#include "dyckref/words.hpp"

namespace dyckref {

// Vector addition system with states; unit counter updates; acceptance by
// reaching the final state (coverability language).
struct Vass {
  struct Edge {
    int from = -1;
    std::optional<Sym> label;    // nullopt: epsilon
    std::vector<int8_t> delta;   // entries in {-1, 0, 1}, size = num_counters
    int to = -1;
  };
  int num_states = 0;
  int num_counters = 0;
  std::vector<std::string> state_names;
  std::vector<std::string> counter_names;
  std::vector<Edge> edges;
  int q0 = -1, qf = -1;

  int add_state(const std::string& name = "");
  int add_counter(const std::string& name = "");
  void add_edge(int from, std::optional<Sym> label, std::vector<int8_t> delta,
                int to);
  std::vector<int8_t> zero() const {
    return std::vector<int8_t>(num_counters, 0);
  }
  std::vector<int8_t> unit(int counter, int sign) const;
  void validate() const;
};

struct CoverResult {
  enum Status { Reachable, Unreachable, Indeterminate } status = Unreachable;
  std::vector<int> witness_edges;  // edge indices of a covering run
  Word witness_word;
  CapReport caps;
};

// Exact backward coverability of a control state from (q0, 0).
CoverResult coverable(const Vass& v, int target_state, const Caps& caps = {});

// Replay check for witness runs.
bool validate_run(const Vass& v, const std::vector<int>& edge_seq,
                  int target_state);

// Synchronous product with a finite automaton over the same input letters;
// epsilon edges of either side interleave. Product finals are pairs of
// finals.
Vass product_nfa(const Vass& v, const Nfa& a);

// ---- offset tracking -------------------------------------------------------

struct UniformOffsetResult {
  enum Status { Yes, No, Indeterminate } status = Yes;
  Word witness;  // accepted word with nonzero offset, when No
  CapReport caps;
};

// Does every accepted word have offset zero? The tracker bound B makes Yes
// answers definitive only when the bound is never exceeded; No answers are
// always definitive.
UniformOffsetResult uniform_offset_zero(const Vass& v, int64_t bound,
                                        const Caps& caps = {});

struct MdfResult {
  enum Status { Found, NotFound, Indeterminate } status = NotFound;
  Word witness;  // an accepted marked Dyck factor, when Found
  CapReport caps;
};

// Does the language contain a word u # v ~# w with balanced middle? The
// tracker enforces the format and tracks the middle offset in [0, 2M].
MdfResult marked_dyck_factor(const Vass& v, int64_t m_bound,
                             const Caps& caps = {});

// ---- violation variants ------------------------------------------------------

struct VassVariants {
  Vass vo, vd, vm;
};

// Label-level images for the offset / dip / mismatch checks.
VassVariants build_vass_variants(const Vass& v);

enum class ViolationKind { OV, DV, MV, NonTame };
const char* to_string(ViolationKind k);

struct VassVerdict {
  enum Status { Included, NotIncluded, Indeterminate } status = Included;
  ViolationKind kind = ViolationKind::OV;
  std::optional<Word> witness;  // variant-language witness
  CapReport caps;
};

VassVerdict vass_in_dyck(const Vass& v, const Caps& caps = {});

std::string dump(const Vass& v, const SymbolTable& table);

}  // namespace dyckref

#endif
