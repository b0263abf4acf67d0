#include "dyckref/words.hpp"

#include <algorithm>
#include <stdexcept>

namespace dyckref {

int64_t offset(const Word& w) {
  int64_t o = 0;
  for (Sym s : w) o += s.offset();
  return o;
}

int64_t dip(const Word& w) {
  int64_t o = 0, d = 0;
  for (Sym s : w) {
    o += s.offset();
    d = std::max(d, -o);
  }
  return d;
}

EffectPair effect(const Word& w) { return {dip(w), offset(w)}; }

const char* to_string(Violation v) {
  switch (v) {
    case Violation::None: return "NONE";
    case Violation::OV: return "OV";
    case Violation::DV: return "DV";
    case Violation::MV: return "MV";
  }
  return "?";
}

const char* to_string(MarkerShape s) {
  switch (s) {
    case MarkerShape::None: return "NONE";
    case MarkerShape::Hash: return "HASH";
    case MarkerShape::BarHash: return "BARHASH";
    case MarkerShape::Both: return "BOTH";
  }
  return "?";
}

static void require_brackets_only(const Word& w, const char* who) {
  for (Sym s : w)
    if (!s.is_bracket())
      throw std::invalid_argument(std::string(who) +
                                  ": word contains non-bracket symbols");
}

bool is_dyck(const Word& w) {
  require_brackets_only(w, "is_dyck");
  std::vector<uint16_t> stack;
  for (Sym s : w) {
    if (s.kind == Sym::Open) {
      stack.push_back(s.base);
    } else {
      if (stack.empty() || stack.back() != s.base) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

Violation classify_violation(const Word& w) {
  require_brackets_only(w, "classify_violation");
  if (dip(w) > 0) return Violation::DV;
  if (offset(w) != 0) return Violation::OV;
  // Dip 0 and offset 0: the stack never underflows and ends empty, so the
  // only way to fail is a base mismatch.
  std::vector<uint16_t> stack;
  for (Sym s : w) {
    if (s.kind == Sym::Open) {
      stack.push_back(s.base);
    } else {
      if (stack.back() != s.base) return Violation::MV;
      stack.pop_back();
    }
  }
  return Violation::None;
}

Word project(const Word& w, const std::set<Sym>& keep) {
  Word out;
  for (Sym s : w)
    if (keep.count(s)) out.push_back(s);
  return out;
}

Word project_brackets(const Word& w) {
  Word out;
  for (Sym s : w)
    if (s.is_bracket()) out.push_back(s);
  return out;
}

Word project_handlers(const Word& w) {
  Word out;
  for (Sym s : w)
    if (s.is_handler()) out.push_back(s);
  return out;
}

Word rho(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (Sym s : w) {
    switch (s.kind) {
      case Sym::Open: out.push_back(canon_open()); break;
      case Sym::Close: out.push_back(canon_close()); break;
      case Sym::Hash:
      case Sym::BarHash: out.push_back(s); break;
      case Sym::Handler:
        throw std::invalid_argument("rho: handler letter in bracket word");
    }
  }
  return out;
}

bool subword_leq(const Word& u, const Word& v) {
  for (Sym s : u)
    if (!s.is_handler())
      throw std::invalid_argument("subword_leq: non-handler symbol");
  for (Sym s : v)
    if (!s.is_handler())
      throw std::invalid_argument("subword_leq: non-handler symbol");
  size_t i = 0;
  for (size_t j = 0; i < u.size() && j < v.size(); ++j)
    if (u[i] == v[j]) ++i;
  return i == u.size();
}

static void require_canonical(const Word& w, const char* who) {
  for (Sym s : w)
    if (!s.is_bracket() || s.base != 0)
      throw std::invalid_argument(std::string(who) +
                                  ": expected canonical bracket word");
}

bool syn_leq(const Word& u, const Word& v) {
  require_canonical(u, "syn_leq");
  require_canonical(v, "syn_leq");
  return offset(u) == offset(v) && dip(u) >= dip(v);
}

static void require_canonical_marker_free(const Word& z, const char* who) {
  for (Sym s : z) {
    if (s.is_marker())
      throw std::invalid_argument(std::string(who) + ": marker in word");
    if (s.is_bracket() && s.base != 0)
      throw std::invalid_argument(std::string(who) +
                                  ": non-canonical bracket letter");
  }
}

bool composite_leq_prime(const Word& z1, const Word& z2) {
  require_canonical_marker_free(z1, "composite_leq_prime");
  require_canonical_marker_free(z2, "composite_leq_prime");
  return syn_leq(project_brackets(z1), project_brackets(z2)) &&
         subword_leq(project_handlers(z1), project_handlers(z2));
}

MarkedSplit split_marked(const Word& z) {
  ptrdiff_t hash_pos = -1, barhash_pos = -1;
  for (size_t i = 0; i < z.size(); ++i) {
    if (z[i].kind == Sym::Hash) {
      if (hash_pos >= 0 || barhash_pos >= 0)
        throw std::invalid_argument("split_marked: malformed marker pattern");
      hash_pos = ptrdiff_t(i);
    } else if (z[i].kind == Sym::BarHash) {
      if (barhash_pos >= 0)
        throw std::invalid_argument("split_marked: malformed marker pattern");
      barhash_pos = ptrdiff_t(i);
    }
  }
  MarkedSplit out;
  if (hash_pos < 0 && barhash_pos < 0) {
    out.shape = MarkerShape::None;
    out.inside = z;
  } else if (hash_pos >= 0 && barhash_pos < 0) {
    out.shape = MarkerShape::Hash;
    out.outside = Word(z.begin(), z.begin() + hash_pos);
    out.inside = Word(z.begin() + hash_pos + 1, z.end());
  } else if (hash_pos < 0) {
    out.shape = MarkerShape::BarHash;
    out.inside = Word(z.begin(), z.begin() + barhash_pos);
    out.outside = Word(z.begin() + barhash_pos + 1, z.end());
  } else {
    out.shape = MarkerShape::Both;
    out.inside = Word(z.begin() + hash_pos + 1, z.begin() + barhash_pos);
    out.outside = Word(z.begin(), z.begin() + hash_pos);
    out.outside.insert(out.outside.end(), z.begin() + barhash_pos + 1, z.end());
  }
  return out;
}

bool is_admissible(const Word& z) {
  MarkedSplit ms = split_marked(z);
  for (Sym s : z)
    if (s.is_bracket() && s.base != 0)
      throw std::invalid_argument("is_admissible: non-canonical bracket");
  EffectPair e = effect(project_brackets(ms.inside));
  switch (ms.shape) {
    case MarkerShape::None: return true;
    case MarkerShape::Hash: return e.dip == 0;
    case MarkerShape::BarHash: return e.dip == -e.offset;
    case MarkerShape::Both: return e.dip == 0 && e.offset == 0;
  }
  return false;
}

bool composite_leq(const Word& z1, const Word& z2) {
  if (!is_admissible(z1) || !is_admissible(z2))
    throw std::invalid_argument("composite_leq: inadmissible argument");
  MarkedSplit a = split_marked(z1), b = split_marked(z2);
  if (a.shape != b.shape) return false;
  return composite_leq_prime(a.inside, b.inside) &&
         composite_leq_prime(a.outside, b.outside);
}

}  // namespace dyckref
