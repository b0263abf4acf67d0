#ifndef DYCKREF_WORDS_HPP_
#define DYCKREF_WORDS_HPP_

#include <cstdint>
#include <set>

#include "dyckref/symbols.hpp"

namespace dyckref {

// Dip/offset pair of a word. Invariant: dip >= max(0, -offset).
struct EffectPair {
  int64_t dip = 0;
  int64_t offset = 0;

  friend auto operator<=>(const EffectPair&, const EffectPair&) = default;
};

// Effect of a concatenation from the effects of the parts.
inline EffectPair compose(EffectPair a, EffectPair b) {
  return {std::max(a.dip, b.dip - a.offset), a.offset + b.offset};
}

int64_t offset(const Word& w);
int64_t dip(const Word& w);
EffectPair effect(const Word& w);

enum class Violation { None, OV, DV, MV };
const char* to_string(Violation v);

// Membership in the Dyck language over the full bracket alphabet.
// Rejects words containing markers or handler letters.
bool is_dyck(const Word& w);

// Classifies the first applicable violation with priority DV > OV > MV.
// Requires a word over brackets only.
Violation classify_violation(const Word& w);

Word project(const Word& w, const std::set<Sym>& keep);
Word project_brackets(const Word& w);  // keep brackets only
Word project_handlers(const Word& w);  // keep handler letters only

// Collapses every bracket to the canonical pair; markers are kept.
// Rejects words containing handler letters.
Word rho(const Word& w);

// Subword (scattered subsequence) order on handler words.
bool subword_leq(const Word& u, const Word& v);

// Syntactic order of the one-letter Dyck language: equal offset and
// dip(u) >= dip(v). Both words must be over the canonical bracket pair.
bool syn_leq(const Word& u, const Word& v);

// Conjunction of syn_leq on the bracket projection and subword_leq on the
// handler projection. Marker-free words; brackets must be canonical.
bool composite_leq_prime(const Word& z1, const Word& z2);

enum class MarkerShape { None, Hash, BarHash, Both };
const char* to_string(MarkerShape s);

struct MarkedSplit {
  Word inside;
  Word outside;
  MarkerShape shape = MarkerShape::None;
};

// Splits a marked word into inside/outside parts. For u#v the outside is u,
// for v~#w it is w, for u#v~#w it is uw. Rejects malformed marker patterns.
MarkedSplit split_marked(const Word& z);

// Whether z is an infix of some u#v~#w with v a canonical Dyck word.
// Decided by the closed-form characterization on the inside part.
bool is_admissible(const Word& z);

// Order on admissible marked words: same marker shape, insides and outsides
// related by composite_leq_prime. Rejects inadmissible arguments.
bool composite_leq(const Word& z1, const Word& z2);

}  // namespace dyckref

#endif
